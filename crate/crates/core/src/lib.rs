//! Perturbed Hammerstein integral equations with derivative dependence,
//!
//! ```text
//! u(t) = η₁ γ₁(t) h₁[u] + η₂ γ₂(t) h₂[u] + λ ∫₀¹ k(t,s) f(s, u(s), u'(s)) ds  =: Tu(t)
//! ```
//!
//! posed on the cone `P` of non-negative, non-decreasing `C¹[0,1]` functions
//! with the norm `‖u‖ = max{‖u‖∞, ‖u'‖∞}`.
//!
//! The crate provides
//!
//! * [`certificate`]: the two-inequality existence test that localizes a
//!   solution in the annulus `r ≤ ‖u‖ ≤ R`, and the linear-growth test that
//!   rules out everything but the zero solution;
//! * [`bounds`]: the inputs those tests need, either declared in closed form
//!   (certified) or estimated by sampling (heuristic);
//! * [`solver`]: Picard iteration on a uniform grid to actually locate
//!   fixed points;
//! * [`sweep`]: classification of a lattice in `(λ, η₁, η₂)`;
//! * [`expr`] and [`problem`]: a small expression language and the problem
//!   file format built on it.
//!
//! Sampling-heavy work (lattice scans, multistart, sweeps) runs on rayon when
//! the `parallel` feature is enabled (the default) and sequentially otherwise.
//! Results are identical either way.

// `!(x >= 0.0)` is used on purpose so NaN falls on the failing side
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod certificate;
pub mod error;
pub mod expr;
pub mod grid;
pub mod kernel;
pub mod par;
pub mod problem;
pub mod record;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction};
pub use par::Execution;
