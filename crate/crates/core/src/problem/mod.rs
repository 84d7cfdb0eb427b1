//! A complete problem instance: kernel, coefficients, functionals,
//! nonlinearity and parameters, plus sampled validation of the standing
//! hypotheses and the operator `T`.

mod file;

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use file::ProblemFile;

use crate::bounds::{DeclaredBounds, LinearGrowthWitness};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::grid::{Grid, GridFunction, EPS_CONE};
use crate::kernel::{self, Kernel};

/// Finite-difference step for the declared-derivative check.
pub const FD_STEP: f64 = 1e-5;
/// Allowed gap between declared `γ'` and its central difference.
pub const FD_TOLERANCE: f64 = 1e-4;

/// `(λ, η₁, η₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub lambda: f64,
    pub eta1: f64,
    pub eta2: f64,
}

impl Params {
    pub fn new(lambda: f64, eta1: f64, eta2: f64) -> Self {
        Self { lambda, eta1, eta2 }
    }

    pub fn eta(&self) -> [f64; 2] {
        [self.eta1, self.eta2]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("lambda", self.lambda),
            ("eta1", self.eta1),
            ("eta2", self.eta2),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::NegativeParameter {
                    name: name.into(),
                    value,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Warn,
}

/// One row of the hypothesis table.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub hypothesis: &'static str,
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl Check {
    fn from_warnings(
        hypothesis: &'static str,
        name: &str,
        ok: &str,
        warnings: Vec<String>,
    ) -> Self {
        let status = if warnings.is_empty() {
            CheckStatus::Pass
        } else {
            CheckStatus::Warn
        };
        let detail = if warnings.is_empty() {
            ok.to_string()
        } else {
            warnings.join("; ")
        };
        Self {
            hypothesis,
            name: name.to_string(),
            status,
            detail,
        }
    }
}

/// `γᵢ` sampled on the grid together with the quantities the certificate
/// needs.
#[derive(Debug, Clone)]
pub struct Coefficient {
    pub expr: Expression,
    pub deriv: Expression,
    pub values: Vec<f64>,
    pub dvalues: Vec<f64>,
    /// `γ(1)`.
    pub at_one: f64,
    /// `‖γ'‖∞` over the grid nodes.
    pub deriv_sup: f64,
}

impl Coefficient {
    fn build(name: &str, expr: Expression, deriv: Expression, grid: &Grid) -> Result<Self> {
        let values = grid
            .nodes()
            .map(|t| expr.eval_coefficient(t))
            .collect::<Result<Vec<_>>>()?;
        let dvalues = grid
            .nodes()
            .map(|t| deriv.eval_coefficient(t))
            .collect::<Result<Vec<_>>>()?;
        // central differences at interior sample points
        let m = 64;
        for j in 1..m {
            let t = j as f64 / m as f64;
            let fd = (expr.eval_coefficient(t + FD_STEP)? - expr.eval_coefficient(t - FD_STEP)?)
                / (2.0 * FD_STEP);
            let declared = deriv.eval_coefficient(t)?;
            if !((fd - declared).abs() <= FD_TOLERANCE) {
                return Err(Error::DerivativeMismatch {
                    name: format!("d{name}"),
                    t,
                    fd,
                    declared,
                });
            }
        }
        Ok(Self {
            at_one: values[grid.n()],
            deriv_sup: dvalues.iter().fold(0.0, |m, x| m.max(x.abs())),
            expr,
            deriv,
            values,
            dvalues,
        })
    }
}

/// A validated problem on a fixed grid.
#[derive(Clone)]
pub struct ProblemSpec {
    grid: Grid,
    kernel: Arc<dyn Kernel>,
    gamma: [Coefficient; 2],
    h: [Expression; 2],
    f: Expression,
    params: Params,
    bounds: DeclaredBounds,
    witness: Option<LinearGrowthWitness>,
    k_const: f64,
    kstar: f64,
    checks: Vec<Check>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("n", &self.grid.n())
            .field("kernel", &self.kernel.name())
            .field("gamma1", &self.gamma[0].expr.to_string())
            .field("gamma2", &self.gamma[1].expr.to_string())
            .field("h1", &self.h[0].to_string())
            .field("h2", &self.h[1].to_string())
            .field("f", &self.f.to_string())
            .field("params", &self.params)
            .finish()
    }
}

/// Reads, parses and validates a problem file.
pub fn load_problem(path: impl AsRef<Path>, grid: Grid) -> Result<ProblemSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    ProblemSpec::new(ProblemFile::parse(&text)?, grid)
}

impl ProblemSpec {
    pub fn new(file: ProblemFile, grid: Grid) -> Result<Self> {
        file.params.validate()?;
        let [g1, g2] = file.gamma;
        let [d1, d2] = file.dgamma;
        let gamma = [
            Coefficient::build("gamma1", g1, d1, &grid)?,
            Coefficient::build("gamma2", g2, d2, &grid)?,
        ];
        let k_const = kernel::constant_k(file.kernel.as_ref(), &grid)?;
        let kstar = kernel::constant_kstar(file.kernel.as_ref(), &grid)?;
        let mut spec = Self {
            grid,
            kernel: file.kernel,
            gamma,
            h: file.h,
            f: file.f,
            params: file.params,
            bounds: file.bounds,
            witness: file.witness,
            k_const,
            kstar,
            checks: Vec::new(),
        };
        spec.checks = spec.run_checks()?;
        Ok(spec)
    }

    pub fn parse(text: &str, grid: Grid) -> Result<Self> {
        Self::new(ProblemFile::parse(text)?, grid)
    }

    /// Same problem at different parameters.
    pub fn with_params(&self, params: Params) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            ..self.clone()
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kernel(&self) -> &dyn Kernel {
        self.kernel.as_ref()
    }

    pub fn params(&self) -> Params {
        self.params
    }

    pub fn gamma(&self, i: usize) -> &Coefficient {
        &self.gamma[i]
    }

    pub fn functional(&self, i: usize) -> &Expression {
        &self.h[i]
    }

    pub fn nonlinearity(&self) -> &Expression {
        &self.f
    }

    pub fn declared_bounds(&self) -> &DeclaredBounds {
        &self.bounds
    }

    pub fn witness(&self) -> Option<&LinearGrowthWitness> {
        self.witness.as_ref()
    }

    /// `K`, computed once on the problem's grid.
    pub fn k_const(&self) -> f64 {
        self.k_const
    }

    /// `K*`, computed once on the problem's grid.
    pub fn kstar(&self) -> f64 {
        self.kstar
    }

    /// Hypothesis table produced at load time.
    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    /// `f(t, u, v)` with `u`, `v` clamped to `[0, ∞)`.
    pub fn eval_f(&self, t: f64, u: f64, v: f64) -> Result<f64> {
        self.f.eval_nonlinearity(t, u.max(0.0), v.max(0.0))
    }

    /// `Tu` and its derivative on the grid.
    pub fn apply_t(&self, u: &GridFunction) -> Result<GridFunction> {
        if u.grid() != &self.grid {
            return Err(Error::Shape {
                expected: self.grid.len(),
                got: u.grid().len(),
            });
        }
        if let Some(v) = u.cone_violation(EPS_CONE) {
            return Err(Error::NotInCone(v));
        }
        let Params { lambda, eta1, eta2 } = self.params;
        let len = self.grid.len();
        let mut w = vec![0.0; len];
        let mut dw = vec![0.0; len];

        for (i, eta) in [eta1, eta2].into_iter().enumerate() {
            if eta == 0.0 {
                continue;
            }
            let c = eta * self.h[i].eval_functional(u)?;
            let g = &self.gamma[i];
            for j in 0..len {
                w[j] += c * g.values[j];
                dw[j] += c * g.dvalues[j];
            }
        }

        if lambda != 0.0 {
            let f = self
                .grid
                .nodes()
                .zip(u.values().iter().zip(u.dvalues()))
                .map(|(t, (&x, &dx))| self.eval_f(t, x, dx))
                .collect::<Result<Vec<_>>>()?;
            let (rows, drows) = self.kernel.apply_rows(&self.grid, &f)?;
            for j in 0..len {
                w[j] += lambda * rows[j];
                dw[j] += lambda * drows[j];
            }
        }
        GridFunction::new(self.grid, w, dw)
    }

    fn run_checks(&self) -> Result<Vec<Check>> {
        let mut checks = Vec::new();
        checks.push(Check::from_warnings(
            "C1/C2",
            "kernel sign and domination",
            &format!(
                "{0}x{0} lattice, K = {1}, K* = {2}",
                kernel::DEFAULT_CHECK_LATTICE,
                self.k_const,
                self.kstar
            ),
            kernel::check_hypotheses(self.kernel.as_ref(), kernel::DEFAULT_CHECK_LATTICE)?,
        ));

        let mut f_warn = Vec::new();
        let m = 12;
        let umax = 4.0;
        'scan: for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let t = a as f64 / (m - 1) as f64;
                    let u = umax * b as f64 / (m - 1) as f64;
                    let v = umax * c as f64 / (m - 1) as f64;
                    let x = self.eval_f(t, u, v)?;
                    if !(x >= 0.0) {
                        f_warn.push(format!("f({t}, {u}, {v}) = {x} < 0"));
                        break 'scan;
                    }
                }
            }
        }
        checks.push(Check::from_warnings(
            "C3",
            "f >= 0",
            &format!("{m}^3 lattice on [0,1]x[0,{umax}]^2"),
            f_warn,
        ));

        for (i, g) in self.gamma.iter().enumerate() {
            let mut warn = Vec::new();
            if let Some(j) = g.values.iter().position(|&x| !(x >= 0.0)) {
                warn.push(format!(
                    "gamma{}({}) = {}",
                    i + 1,
                    self.grid.node(j),
                    g.values[j]
                ));
            }
            if let Some(j) = g.dvalues.iter().position(|&x| !(x >= 0.0)) {
                warn.push(format!(
                    "gamma{}'({}) = {}",
                    i + 1,
                    self.grid.node(j),
                    g.dvalues[j]
                ));
            }
            checks.push(Check::from_warnings(
                "C4",
                &format!("gamma{0} >= 0, gamma{0}' >= 0", i + 1),
                &format!(
                    "gamma{0}(1) = {1}, sup|gamma{0}'| = {2}",
                    i + 1,
                    g.at_one,
                    g.deriv_sup
                ),
                warn,
            ));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut probes = Vec::new();
        for rho in [0.5, 1.0, 2.0, 4.0] {
            probes.push(GridFunction::from_fn(self.grid, |t| rho * t, |_| rho));
            probes.push(GridFunction::from_fn(self.grid, |_| rho, |_| 0.0));
            for _ in 0..8 {
                probes.push(GridFunction::random_cone(self.grid, &mut rng, rho));
            }
        }
        for (i, h) in self.h.iter().enumerate() {
            let mut warn = Vec::new();
            let mut largest: f64 = 0.0;
            for u in &probes {
                let x = h.eval_functional(u)?;
                if !(x >= 0.0) || !x.is_finite() {
                    warn.push(format!(
                        "h{}[u] = {x} for a cone function of norm {}",
                        i + 1,
                        u.c1_norm()
                    ));
                    break;
                }
                largest = largest.max(x);
            }
            checks.push(Check::from_warnings(
                "C6",
                &format!("h{} >= 0 and bounded on cone samples", i + 1),
                &format!("{} probes up to norm 4, max value {largest}", probes.len()),
                warn,
            ));
        }
        Ok(checks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) const EXAMPLE1: &str = include_str!("../../../../problems/example1.prob");

    fn example1(n: usize) -> ProblemSpec {
        ProblemSpec::parse(EXAMPLE1, Grid::new(n).unwrap()).unwrap()
    }

    #[test]
    fn example1_coefficients() {
        let spec = example1(256);
        assert_eq!(spec.gamma(0).at_one, 1.0);
        assert_eq!(spec.gamma(1).at_one, 1.0);
        assert_eq!(spec.gamma(0).deriv_sup, 0.0);
        assert_eq!(spec.gamma(1).deriv_sup, 1.0);
        assert_eq!(spec.k_const(), 0.5);
        assert_eq!(spec.kstar(), 1.0);
        assert!(
            spec.checks().iter().all(|c| c.status == CheckStatus::Pass),
            "{:?}",
            spec.checks()
        );
    }

    #[test]
    fn negative_parameter_is_rejected() {
        let text = EXAMPLE1.replace("lambda = 1/10", "lambda = -1");
        let err = ProblemSpec::parse(&text, Grid::new(16).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NegativeParameter { ref name, .. } if name == "lambda"));
        let spec = example1(16);
        assert!(spec.with_params(Params::new(0.1, -0.5, 0.0)).is_err());
    }

    #[test]
    fn derivative_mismatch_is_detected() {
        let text = EXAMPLE1.replace("dgamma2 = 1", "dgamma2 = 2");
        let err = ProblemSpec::parse(&text, Grid::new(16).unwrap()).unwrap_err();
        match err {
            Error::DerivativeMismatch {
                name, fd, declared, ..
            } => {
                assert_eq!(name, "dgamma2");
                assert_abs_diff_eq!(fd, 1.0, epsilon = 1e-6);
                assert_eq!(declared, 2.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_gamma_is_a_warning() {
        let text = EXAMPLE1
            .replace("gamma2 = t", "gamma2 = -t")
            .replace("dgamma2 = 1", "dgamma2 = -1");
        let spec = ProblemSpec::parse(&text, Grid::new(16).unwrap()).unwrap();
        let c = spec
            .checks()
            .iter()
            .find(|c| c.name.starts_with("gamma2"))
            .unwrap();
        assert_eq!(c.status, CheckStatus::Warn);
    }

    #[test]
    fn zero_function_maps_to_lambda_kernel_integral() {
        let spec = example1(256);
        let w = spec.apply_t(&GridFunction::zero(*spec.grid())).unwrap();
        // F ≡ 1, h[0] = 0: w(1) = λK, w'(0) = λ·1
        assert_abs_diff_eq!(w.values()[256], 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(w.dvalues()[0], 0.1, epsilon = 1e-15);
        assert_eq!(w.values()[0], 0.0);
        // w(t) = λ(t - t²/2) exactly for the trapezoid on F ≡ 1
        for (j, t) in spec.grid().nodes().enumerate() {
            assert_abs_diff_eq!(w.values()[j], 0.1 * (t - 0.5 * t * t), epsilon = 1e-15);
            assert_abs_diff_eq!(w.dvalues()[j], 0.1 * (1.0 - t), epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_operator_gives_zero() {
        let spec = example1(32)
            .with_params(Params::new(0.0, 0.0, 0.0))
            .unwrap();
        let u = GridFunction::from_fn(*spec.grid(), |t| t, |_| 1.0);
        let w = spec.apply_t(&u).unwrap();
        assert_eq!(w.c1_norm(), 0.0);
    }

    #[test]
    fn linear_input_stays_in_cone() {
        let spec = example1(256);
        let u = GridFunction::from_fn(*spec.grid(), |t| t, |_| 1.0);
        let w = spec.apply_t(&u).unwrap();
        assert!(w.in_cone());
        assert!(w.consistency_defect() <= crate::grid::consistency_tolerance(256));
    }

    #[test]
    fn apply_t_rejects_non_cone_input() {
        let spec = example1(16);
        let u = GridFunction::from_fn(*spec.grid(), |t| -t, |_| -1.0);
        assert!(matches!(spec.apply_t(&u), Err(Error::NotInCone(_))));
        let tiny = GridFunction::from_fn(*spec.grid(), |_| -1e-12, |_| -1e-12);
        assert!(spec.apply_t(&tiny).is_ok());
    }

    #[test]
    fn output_is_monotone_in_lambda() {
        let spec = example1(64);
        let u = GridFunction::from_fn(*spec.grid(), |t| 0.3 * t * t, |t| 0.6 * t);
        let mut prev: Option<GridFunction> = None;
        for k in 0..10 {
            let p = Params::new(0.05 * k as f64, 1.0 / 11.0, 1.0 / 12.0);
            let w = spec.with_params(p).unwrap().apply_t(&u).unwrap();
            if let Some(prev) = &prev {
                for j in 0..w.values().len() {
                    assert!(w.values()[j] >= prev.values()[j]);
                }
            }
            prev = Some(w);
        }
    }
}
