//! Kernels `k(t, s)` with their `t`-derivatives, and the constants
//! `K = ∫₀¹ k(1,s) ds` and `K* = sup_t ∫₀¹ ∂ₜk(t,s) ds`.

use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{Expression, Role};
use crate::grid::{integrate, integrate_tail, Grid};

/// Lattice size for the sampled positivity/domination checks.
pub const DEFAULT_CHECK_LATTICE: usize = 64;

pub trait Kernel: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn k(&self, t: f64, s: f64) -> Result<f64>;

    /// `∂ₜk(t, s)`.
    fn dk(&self, t: f64, s: f64) -> Result<f64>;

    /// Optional integrable majorants `(Φ(s), Ψ(s))` of `k` and `∂ₜk`.
    fn dominators(&self, _s: f64) -> Option<Result<(f64, f64)>> {
        None
    }

    /// `∫₀¹ k(t_j, s) F(s) ds` by trapezoid on the grid nodes.
    fn apply_row(&self, grid: &Grid, f: &[f64], j: usize) -> Result<f64> {
        check_row(grid, f, j)?;
        let t = grid.node(j);
        let samples = grid
            .nodes()
            .zip(f)
            .map(|(s, fs)| Ok(self.k(t, s)? * fs))
            .collect::<Result<Vec<_>>>()?;
        integrate(&samples, grid)
    }

    /// `∫₀¹ ∂ₜk(t_j, s) F(s) ds` by trapezoid on the grid nodes.
    fn apply_drow(&self, grid: &Grid, f: &[f64], j: usize) -> Result<f64> {
        check_row(grid, f, j)?;
        let t = grid.node(j);
        let samples = grid
            .nodes()
            .zip(f)
            .map(|(s, fs)| Ok(self.dk(t, s)? * fs))
            .collect::<Result<Vec<_>>>()?;
        integrate(&samples, grid)
    }

    /// Both rows at every node.
    fn apply_rows(&self, grid: &Grid, f: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let rows = (0..grid.len())
            .map(|j| self.apply_row(grid, f, j))
            .collect::<Result<_>>()?;
        let drows = (0..grid.len())
            .map(|j| self.apply_drow(grid, f, j))
            .collect::<Result<_>>()?;
        Ok((rows, drows))
    }
}

fn check_row(grid: &Grid, f: &[f64], j: usize) -> Result<()> {
    if f.len() != grid.len() {
        return Err(Error::Shape {
            expected: grid.len(),
            got: f.len(),
        });
    }
    if j > grid.n() {
        return Err(Error::Shape {
            expected: grid.n(),
            got: j,
        });
    }
    Ok(())
}

/// Green's function of `-u'' = 0`, `u(0) = u'(1) = 0`: `k(t,s) = min(s,t)`,
/// `∂ₜk(t,s) = 1` for `s > t` and `0` otherwise. Majorants `Φ(s) = s`,
/// `Ψ(s) = 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FocalKernel;

impl Kernel for FocalKernel {
    fn name(&self) -> String {
        "focal".to_string()
    }

    fn k(&self, t: f64, s: f64) -> Result<f64> {
        Ok(if s <= t { s } else { t })
    }

    fn dk(&self, t: f64, s: f64) -> Result<f64> {
        Ok(if s <= t { 0.0 } else { 1.0 })
    }

    fn dominators(&self, s: f64) -> Option<Result<(f64, f64)>> {
        Some(Ok((s, 1.0)))
    }

    // The jump of ∂ₜk sits on the node t_j, so the row is exactly the tail
    // integral over [t_j, 1].
    fn apply_drow(&self, grid: &Grid, f: &[f64], j: usize) -> Result<f64> {
        check_row(grid, f, j)?;
        integrate_tail(f, grid, j)
    }

    // O(n): ∫ min(s,t_j) F = ∫₀^{t_j} s F(s) ds + t_j ∫_{t_j}^1 F(s) ds
    fn apply_rows(&self, grid: &Grid, f: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        check_row(grid, f, 0)?;
        let n = grid.n();
        let h = grid.step();
        let mut tails = vec![0.0; n + 1];
        for j in (0..n).rev() {
            tails[j] = tails[j + 1] + 0.5 * h * (f[j] + f[j + 1]);
        }
        let mut rows = Vec::with_capacity(n + 1);
        let mut head = 0.0;
        for j in 0..=n {
            let t = grid.node(j);
            if j > 0 {
                let s0 = grid.node(j - 1);
                head += 0.5 * h * (s0 * f[j - 1] + t * f[j]);
            }
            rows.push(head + t * tails[j]);
        }
        Ok((rows, tails))
    }
}

/// Kernel given by expressions in `t` and `s`.
#[derive(Debug, Clone)]
pub struct ExprKernel {
    k: Expression,
    dk: Expression,
    dominators: Option<(Expression, Expression)>,
}

impl ExprKernel {
    pub fn new(k: Expression, dk: Expression) -> Result<Self> {
        for e in [&k, &dk] {
            if !matches!(e.role(), Role::Kernel | Role::Constant) {
                return Err(Error::Parameter(format!(
                    "kernel expression `{e}` has role {}",
                    e.role().name()
                )));
            }
        }
        Ok(Self {
            k,
            dk,
            dominators: None,
        })
    }

    pub fn parse(k: &str, dk: &str) -> Result<Self> {
        Self::new(
            Expression::parse(k, Role::Kernel)?,
            Expression::parse(dk, Role::Kernel)?,
        )
    }

    /// Majorants `Φ(s)`, `Ψ(s)`, as kernel-role expressions in `s`.
    pub fn with_dominators(mut self, phi: Expression, psi: Expression) -> Self {
        self.dominators = Some((phi, psi));
        self
    }
}

impl Kernel for ExprKernel {
    fn name(&self) -> String {
        format!("k = {}, dk = {}", self.k, self.dk)
    }

    fn k(&self, t: f64, s: f64) -> Result<f64> {
        self.k.eval_kernel(t, s)
    }

    fn dk(&self, t: f64, s: f64) -> Result<f64> {
        self.dk.eval_kernel(t, s)
    }

    fn dominators(&self, s: f64) -> Option<Result<(f64, f64)>> {
        let (phi, psi) = self.dominators.as_ref()?;
        // t is unbound for majorants; 0 keeps accidental references finite
        Some(
            phi.eval_kernel(0.0, s)
                .and_then(|a| Ok((a, psi.eval_kernel(0.0, s)?))),
        )
    }
}

/// `K = ∫₀¹ k(1, s) ds`.
pub fn constant_k(kernel: &dyn Kernel, grid: &Grid) -> Result<f64> {
    let samples = grid
        .nodes()
        .map(|s| kernel.k(1.0, s))
        .collect::<Result<Vec<_>>>()?;
    integrate(&samples, grid)
}

/// `K*`, the supremum over `t` approximated by the maximum over grid nodes.
pub fn constant_kstar(kernel: &dyn Kernel, grid: &Grid) -> Result<f64> {
    let ones = vec![1.0; grid.len()];
    let mut best = f64::NEG_INFINITY;
    for j in 0..grid.len() {
        best = best.max(kernel.apply_drow(grid, &ones, j)?);
    }
    Ok(best)
}

/// Sampled falsification of `0 ≤ k ≤ Φ` and `0 ≤ ∂ₜk ≤ Ψ` on an `m × m`
/// lattice. Returns one message per violated condition (empty when none).
pub fn check_hypotheses(kernel: &dyn Kernel, m: usize) -> Result<Vec<String>> {
    let m = m.max(2);
    let pts: Vec<f64> = (0..m).map(|a| a as f64 / (m - 1) as f64).collect();
    let mut warnings = Vec::new();
    let mut note = |cond: &str, t: f64, s: f64, x: f64| {
        if !warnings.iter().any(|w: &String| w.starts_with(cond)) {
            warnings.push(format!("{cond} fails at t={t}, s={s} (value {x})"));
        }
    };
    for &s in &pts {
        let dom = kernel.dominators(s).transpose()?;
        for &t in &pts {
            let k = kernel.k(t, s)?;
            let dk = kernel.dk(t, s)?;
            if !(k >= 0.0) {
                note("k >= 0", t, s, k);
            }
            if !(dk >= 0.0) {
                note("dk >= 0", t, s, dk);
            }
            if let Some((phi, psi)) = dom {
                if !(k <= phi) {
                    note("k <= Phi", t, s, k);
                }
                if !(dk <= psi) {
                    note("dk <= Psi", t, s, dk);
                }
            }
        }
    }
    Ok(warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn focal_constants_are_exact_on_every_grid() {
        for n in 2..=2000 {
            let g = Grid::new(n).unwrap();
            assert_eq!(constant_k(&FocalKernel, &g).unwrap(), 0.5, "n = {n}");
            assert_eq!(constant_kstar(&FocalKernel, &g).unwrap(), 1.0, "n = {n}");
        }
    }

    #[test]
    fn expression_kernel_constants() {
        let g = Grid::new(100).unwrap();
        let zero = ExprKernel::parse("0", "0").unwrap();
        assert_eq!(constant_k(&zero, &g).unwrap(), 0.0);
        assert_eq!(constant_kstar(&zero, &g).unwrap(), 0.0);
        let ts = ExprKernel::parse("t*s", "s").unwrap();
        assert_abs_diff_eq!(constant_k(&ts, &g).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(constant_kstar(&ts, &g).unwrap(), 0.5, epsilon = 1e-4);
    }

    #[test]
    fn focal_row_examples() {
        let g = Grid::new(100).unwrap();
        let ones = vec![1.0; g.len()];
        assert_abs_diff_eq!(
            FocalKernel.apply_row(&g, &ones, 100).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert_eq!(FocalKernel.apply_row(&g, &ones, 0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            FocalKernel.apply_drow(&g, &ones, 25).unwrap(),
            0.75,
            epsilon = 1e-15
        );
        assert!(FocalKernel.apply_row(&g, &ones[1..], 0).is_err());
        assert!(FocalKernel.apply_drow(&g, &ones, 101).is_err());
    }

    #[test]
    fn focal_fast_rows_match_generic_rows() {
        let g = Grid::new(64).unwrap();
        let f: Vec<f64> = g.nodes().map(|s| (3.0 * s).sin() + 1.5).collect();
        let (rows, drows) = FocalKernel.apply_rows(&g, &f).unwrap();
        // the generic trait path via an equivalent expression kernel
        let generic = ExprKernel::parse("min(s, t)", "0").unwrap();
        for j in 0..g.len() {
            assert_abs_diff_eq!(
                rows[j],
                FocalKernel.apply_row(&g, &f, j).unwrap(),
                epsilon = 1e-14
            );
            assert_abs_diff_eq!(
                rows[j],
                generic.apply_row(&g, &f, j).unwrap(),
                epsilon = 1e-14
            );
            assert_abs_diff_eq!(
                drows[j],
                FocalKernel.apply_drow(&g, &f, j).unwrap(),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn hypothesis_checks() {
        assert!(check_hypotheses(&FocalKernel, 64).unwrap().is_empty());
        let bad = ExprKernel::parse("t - s", "1").unwrap();
        let w = check_hypotheses(&bad, 16).unwrap();
        assert_eq!(w.len(), 1);
        assert!(w[0].starts_with("k >= 0"));
        let dominated = ExprKernel::parse("t*s", "s").unwrap().with_dominators(
            Expression::parse("s/2", Role::Kernel).unwrap(),
            Expression::parse("1", Role::Kernel).unwrap(),
        );
        let w = check_hypotheses(&dominated, 16).unwrap();
        assert_eq!(w.len(), 1);
        assert!(w[0].starts_with("k <= Phi"));
    }

    proptest! {
        #[test]
        fn focal_rows_monotone_and_nonnegative(
            f in proptest::collection::vec(0.0f64..10.0, 3..80)
        ) {
            let g = Grid::new(f.len() - 1).unwrap();
            let mut prev = 0.0;
            for j in 0..g.len() {
                let r = FocalKernel.apply_row(&g, &f, j).unwrap();
                prop_assert!(r >= prev);
                prop_assert!(FocalKernel.apply_drow(&g, &f, j).unwrap() >= 0.0);
                prev = r;
            }
            let kstar = constant_kstar(&FocalKernel, &g).unwrap();
            let ones = vec![1.0; g.len()];
            for j in 0..g.len() {
                prop_assert!(kstar >= FocalKernel.apply_drow(&g, &ones, j).unwrap());
            }
        }
    }
}
