//! Picard iteration `u_{k+1} = T u_k` on the cone, multistart probing and
//! independent verification of candidate fixed points.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{consistency_tolerance, GridFunction, EPS_CONE};
use crate::par::{self, Execution};
use crate::problem::ProblemSpec;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DIVERGENCE_CAP: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Stop when `‖u_{k+1} - u_k‖ < tol` (C¹ norm).
    pub tol: f64,
    pub max_iter: usize,
    /// An iterate with norm above this (or non-finite) counts as divergence.
    pub divergence_cap: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            divergence_cap: DIVERGENCE_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Diverged,
    /// An iterate fell outside the cone, which `T` should never do; points
    /// at a violated hypothesis (e.g. a functional taking negative values).
    LeftCone,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "max-iterations",
            SolveStatus::Diverged => "diverged",
            SolveStatus::LeftCone => "left-cone",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a multistart run began.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Start {
    Zero,
    /// `u0(t) = ρt`.
    Linear(f64),
    /// Seeded random cone function of the given norm.
    Random {
        index: usize,
        norm: f64,
    },
    Given,
}

impl fmt::Display for Start {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Start::Zero => f.write_str("zero"),
            Start::Linear(rho) => write!(f, "linear({rho})"),
            Start::Random { index, norm } => write!(f, "random#{index}({norm})"),
            Start::Given => f.write_str("given"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// For `Converged`, the last iterate `u_k` with `‖u_k - T u_k‖ < tol`.
    pub u: GridFunction,
    pub iterations: usize,
    /// `‖u - Tu‖` of the returned `u` (for non-converged runs, of the last
    /// step taken).
    pub residual: f64,
    pub norm: f64,
    /// Every iterate satisfied the cone invariants.
    pub cone_ok: bool,
    pub start: Start,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn in_annulus(&self, r: f64, big_r: f64) -> bool {
        r <= self.norm && self.norm <= big_r
    }
}

/// Successive substitution from `u0`, which must lie in the cone.
pub fn picard_solve(
    spec: &ProblemSpec,
    u0: &GridFunction,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::Parameter(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if let Some(v) = u0.cone_violation(EPS_CONE) {
        return Err(Error::Parameter(format!("start is not in the cone: {v}")));
    }
    let finish = |status, u: GridFunction, iterations, residual, cone_ok| {
        let norm = u.c1_norm();
        SolveResult {
            status,
            u,
            iterations,
            residual,
            norm,
            cone_ok,
            start: Start::Given,
        }
    };

    let mut u = u0.clone();
    let mut last = f64::INFINITY;
    for k in 1..=opts.max_iter {
        let w = spec.apply_t(&u)?;
        let d = w.c1_distance(&u)?;
        if d < opts.tol {
            return Ok(finish(SolveStatus::Converged, u, k, d, true));
        }
        let norm = w.c1_norm();
        if !norm.is_finite() || norm > opts.divergence_cap || !d.is_finite() {
            return Ok(finish(SolveStatus::Diverged, w, k, d, true));
        }
        if w.cone_violation(EPS_CONE).is_some() {
            return Ok(finish(SolveStatus::LeftCone, w, k, d, false));
        }
        u = w;
        last = d;
    }
    Ok(finish(
        SolveStatus::MaxIterations,
        u,
        opts.max_iter,
        last,
        true,
    ))
}

/// Starting points used by [`multistart_solve`]: the zero function, up to
/// eight linear functions `ρt` with `ρ` log-spaced in `[10⁻², 10]`, and
/// seeded random cone functions with log-uniform norms in the same range.
pub fn multistart_starts(
    spec: &ProblemSpec,
    starts: usize,
    seed: u64,
) -> Vec<(Start, GridFunction)> {
    use rand::{Rng, SeedableRng};
    let grid = *spec.grid();
    let mut out = vec![(Start::Zero, GridFunction::zero(grid))];
    let linear = starts.saturating_sub(1).min(8);
    for k in 0..linear {
        let e = if linear == 1 {
            -2.0
        } else {
            -2.0 + 3.0 * k as f64 / (linear - 1) as f64
        };
        let rho = 10f64.powf(e);
        out.push((
            Start::Linear(rho),
            GridFunction::from_fn(grid, |t| rho * t, |_| rho),
        ));
    }
    for index in 0..starts.saturating_sub(1 + linear) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let norm = 10f64.powf(rng.gen_range(-2.0..=1.0));
        let u = GridFunction::random_cone(grid, &mut rng, norm);
        out.push((Start::Random { index, norm }, u));
    }
    out.truncate(starts.max(1));
    out
}

/// Runs [`picard_solve`] from every start, in parallel when `exec` allows.
/// Results are sorted by norm; converged results closer than `10·tol` to an
/// earlier converged result are dropped.
pub fn multistart_solve(
    spec: &ProblemSpec,
    starts: usize,
    seed: u64,
    opts: &SolveOptions,
    exec: Execution,
) -> Result<Vec<SolveResult>> {
    if starts == 0 {
        return Err(Error::Parameter("need at least one start".into()));
    }
    let inits = multistart_starts(spec, starts, seed);
    let mut results = par::try_map_indices(exec, inits.len(), |i| {
        let (start, u0) = &inits[i];
        picard_solve(spec, u0, opts).map(|r| SolveResult { start: *start, ..r })
    })?;
    results.sort_by(|a, b| a.norm.total_cmp(&b.norm));

    let radius = 10.0 * opts.tol;
    let mut kept: Vec<SolveResult> = Vec::with_capacity(results.len());
    for r in results {
        let duplicate = r.converged()
            && kept
                .iter()
                .any(|k| k.converged() && k.u.c1_distance(&r.u).is_ok_and(|d| d < radius));
        if !duplicate {
            kept.push(r);
        }
    }
    Ok(kept)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    /// `‖u - Tu‖`; `None` when `u` is outside the cone and `T` is undefined.
    pub residual: Option<f64>,
    pub cone_violation: Option<String>,
    /// `max_j |u(t_j) - u(0) - ∫₀^{t_j} u'|`.
    pub consistency_defect: f64,
    pub consistency_ok: bool,
    pub norm: f64,
    pub in_annulus: bool,
}

impl Verification {
    pub fn cone_ok(&self) -> bool {
        self.cone_violation.is_none()
    }
}

/// Recomputes everything about a candidate from scratch.
pub fn verify_solution(
    spec: &ProblemSpec,
    u: &GridFunction,
    r: f64,
    big_r: f64,
) -> Result<Verification> {
    let cone_violation = u.cone_violation(EPS_CONE);
    let residual = if cone_violation.is_none() {
        Some(spec.apply_t(u)?.c1_distance(u)?)
    } else {
        None
    };
    let consistency_defect = u.consistency_defect();
    let norm = u.c1_norm();
    Ok(Verification {
        residual,
        cone_violation,
        consistency_defect,
        consistency_ok: consistency_defect <= consistency_tolerance(u.grid().n()),
        norm,
        in_annulus: r <= norm && norm <= big_r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::problem::Params;

    const EXAMPLE1: &str = include_str!("../../../problems/example1.prob");
    const EXAMPLE2: &str = include_str!("../../../problems/example2.prob");

    fn spec(text: &str, n: usize) -> ProblemSpec {
        ProblemSpec::parse(text, Grid::new(n).unwrap()).unwrap()
    }

    #[test]
    fn zero_is_immediate_fixed_point_of_example2() {
        let s = spec(EXAMPLE2, 256);
        let r = picard_solve(&s, &GridFunction::zero(*s.grid()), &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.norm, 0.0);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn zero_parameters_converge_immediately() {
        let s = spec(EXAMPLE1, 64)
            .with_params(Params::new(0.0, 0.0, 0.0))
            .unwrap();
        let r = picard_solve(&s, &GridFunction::zero(*s.grid()), &SolveOptions::default()).unwrap();
        assert!(r.converged());
        assert_eq!(r.iterations, 1);
        assert_eq!(r.u, GridFunction::zero(*s.grid()));
    }

    #[test]
    fn example1_converges_into_annulus() {
        let s = spec(EXAMPLE1, 256);
        let r = picard_solve(&s, &GridFunction::zero(*s.grid()), &SolveOptions::default()).unwrap();
        assert!(r.converged(), "{:?} after {}", r.status, r.iterations);
        assert!(r.residual <= 1e-10);
        assert!(r.cone_ok && r.u.in_cone());
        assert!(r.in_annulus(0.05, 1.0), "norm {}", r.norm);
        let v = verify_solution(&s, &r.u, 0.05, 1.0).unwrap();
        assert!((v.residual.unwrap() - r.residual).abs() <= 1e-12);
        assert!(v.consistency_ok && v.in_annulus && v.cone_ok());
    }

    #[test]
    fn zero_is_not_a_fixed_point_of_example1() {
        let s = spec(EXAMPLE1, 256);
        let v = verify_solution(&s, &GridFunction::zero(*s.grid()), 0.05, 1.0).unwrap();
        // T0 has w'(0) = λ = 0.1 as its largest sample
        assert!((v.residual.unwrap() - 0.1).abs() < 1e-15);
        assert!(!v.in_annulus);
    }

    #[test]
    fn verify_reports_cone_violation() {
        let s = spec(EXAMPLE1, 16);
        let u = GridFunction::from_fn(*s.grid(), |t| 1.0 - t, |_| -1.0);
        let v = verify_solution(&s, &u, 0.05, 1.0).unwrap();
        assert!(!v.cone_ok());
        assert_eq!(v.residual, None);
    }

    #[test]
    fn rejects_bad_starts_and_tolerances() {
        let s = spec(EXAMPLE1, 16);
        let u = GridFunction::from_fn(*s.grid(), |t| -t, |_| -1.0);
        assert!(matches!(
            picard_solve(&s, &u, &SolveOptions::default()),
            Err(Error::Parameter(_))
        ));
        let opts = SolveOptions {
            tol: 0.0,
            ..Default::default()
        };
        assert!(picard_solve(&s, &GridFunction::zero(*s.grid()), &opts).is_err());
    }

    #[test]
    fn large_starts_of_example1_diverge() {
        let s = spec(EXAMPLE1, 64);
        let u0 = GridFunction::from_fn(*s.grid(), |t| 10.0 * t, |_| 10.0);
        let r = picard_solve(&s, &u0, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Diverged);
    }

    #[test]
    fn max_iterations_is_reported() {
        let s = spec(EXAMPLE2, 64);
        let u0 = GridFunction::from_fn(*s.grid(), |t| t, |_| 1.0);
        let opts = SolveOptions {
            max_iter: 3,
            ..Default::default()
        };
        let r = picard_solve(&s, &u0, &opts).unwrap();
        assert_eq!(r.status, SolveStatus::MaxIterations);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn negative_functional_leaves_cone() {
        let text = EXAMPLE1.replace("h1 = U(0.25) + DU(0.75)^2", "h1 = -1 - U(0.5)");
        let s = spec(&text, 32);
        let r = picard_solve(&s, &GridFunction::zero(*s.grid()), &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::LeftCone);
        assert!(!r.cone_ok);
    }

    #[test]
    fn multistart_on_zero_problem_returns_single_result() {
        let text = EXAMPLE1
            .replace("f = exp(t*(u+v))", "f = 0")
            .replace("h1 = U(0.25) + DU(0.75)^2", "h1 = 0")
            .replace("h2 = INT(U(s)^3 + DU(s))", "h2 = 0");
        let s = spec(&text, 32);
        let rs =
            multistart_solve(&s, 12, 0, &SolveOptions::default(), Execution::default()).unwrap();
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].norm, 0.0);
    }

    #[test]
    fn multistart_start_set() {
        let s = spec(EXAMPLE1, 32);
        let st = multistart_starts(&s, 50, 0);
        assert_eq!(st.len(), 50);
        assert_eq!(st[0].0, Start::Zero);
        assert_eq!(st[1].0, Start::Linear(0.01));
        assert!(matches!(st[8].0, Start::Linear(x) if (x - 10.0).abs() < 1e-12));
        for (_, u) in &st {
            assert!(u.in_cone());
        }
        assert_eq!(multistart_starts(&s, 1, 0).len(), 1);
        // seeded: same seed, same starts
        assert_eq!(multistart_starts(&s, 20, 5), multistart_starts(&s, 20, 5));
    }

    #[test]
    fn multistart_is_deterministic_across_execution() {
        let s = spec(EXAMPLE2, 64);
        let opts = SolveOptions::default();
        let a = multistart_solve(&s, 16, 3, &opts, Execution::Sequential).unwrap();
        let b = multistart_solve(&s, 16, 3, &opts, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
