//! Inputs for the certificates: `f̄_ρ` (max of `f` over `[0,1]×[0,ρ]²`),
//! `f_ρ` (its min) and `H_{i,ρ} = sup_{‖u‖=ρ} hᵢ[u]`.
//!
//! A bound is *certified* when it comes from a closed form declared in the
//! problem file. Sampling can only produce a lower estimate of a maximum and
//! an upper estimate of a minimum, i.e. the wrong direction for the
//! existence test, so anything sampled is labelled *heuristic*.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::grid::GridFunction;
use crate::par::{self, Execution};
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rigor {
    Certified,
    Heuristic,
}

impl Rigor {
    pub fn as_str(self) -> &'static str {
        match self {
            Rigor::Certified => "certified",
            Rigor::Heuristic => "heuristic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "certified" => Some(Rigor::Certified),
            "heuristic" => Some(Rigor::Heuristic),
            _ => None,
        }
    }

    /// Heuristic if either is.
    pub fn and(self, other: Rigor) -> Rigor {
        if self == Rigor::Certified && other == Rigor::Certified {
            Rigor::Certified
        } else {
            Rigor::Heuristic
        }
    }
}

impl fmt::Display for Rigor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValue {
    pub value: f64,
    pub rigor: Rigor,
}

/// Closed-form bounds from the problem file, as functions of `rho`.
#[derive(Debug, Clone, Default)]
pub struct DeclaredBounds {
    pub f_upper: Option<Expression>,
    pub f_lower: Option<Expression>,
    pub h_upper: [Option<Expression>; 2],
}

/// `τ, ξ₁, ξ₂` with `0 ≤ f(t,u,v) ≤ τu` and `hᵢ[u] ≤ ξᵢ‖u‖∞` on the cone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearGrowthWitness {
    pub tau: f64,
    pub xi: [f64; 2],
}

impl LinearGrowthWitness {
    pub fn new(tau: f64, xi: [f64; 2]) -> Result<Self> {
        for (name, x) in [("tau", tau), ("xi1", xi[0]), ("xi2", xi[1])] {
            if !(x >= 0.0) || !x.is_finite() {
                return Err(Error::NegativeParameter {
                    name: name.into(),
                    value: x,
                });
            }
        }
        Ok(Self { tau, xi })
    }
}

/// Factors applied to heuristic estimates before the existence test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inflation {
    pub upper: f64,
    pub lower: f64,
}

impl Default for Inflation {
    fn default() -> Self {
        Self {
            upper: 1.05,
            lower: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    /// Points per axis of the `f` lattice.
    pub lattice: usize,
    /// Random cone functions per `H` estimate.
    pub h_samples: usize,
    pub seed: u64,
    pub inflation: Inflation,
    pub execution: Execution,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            lattice: 64,
            h_samples: 256,
            seed: 0,
            inflation: Inflation::default(),
            execution: Execution::default(),
        }
    }
}

/// Source of bound values: declared closed forms, optionally backed by
/// sampled estimates for entries the problem file leaves out.
#[derive(Debug, Clone)]
pub struct BoundSet {
    declared: DeclaredBounds,
    sampling: Option<SamplingConfig>,
}

/// Everything the existence test needs for one `(r, R)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedBounds {
    pub r: f64,
    pub big_r: f64,
    pub f_upper: BoundValue,
    pub f_lower: BoundValue,
    pub h_upper: [BoundValue; 2],
    pub inflation: Inflation,
    /// Seed of the sampled estimates, when any entry was sampled.
    pub seed: Option<u64>,
}

impl ResolvedBounds {
    pub fn rigor(&self) -> Rigor {
        self.f_upper
            .rigor
            .and(self.f_lower.rigor)
            .and(self.h_upper[0].rigor)
            .and(self.h_upper[1].rigor)
    }
}

fn declared_value(e: &Expression, rho: f64, what: &str) -> Result<BoundValue> {
    let value = e.eval_bound(rho)?;
    if !(value >= 0.0) {
        return Err(Error::Parameter(format!(
            "declared {what} is negative at rho = {rho}: {value}"
        )));
    }
    Ok(BoundValue {
        value,
        rigor: Rigor::Certified,
    })
}

fn heuristic(value: f64) -> BoundValue {
    BoundValue {
        value,
        rigor: Rigor::Heuristic,
    }
}

impl BoundSet {
    /// Declared bounds only; missing entries are an error.
    pub fn declared(spec: &ProblemSpec) -> Self {
        Self {
            declared: spec.declared_bounds().clone(),
            sampling: None,
        }
    }

    /// Declared bounds where present, sampled estimates elsewhere.
    pub fn with_sampling(spec: &ProblemSpec, config: SamplingConfig) -> Self {
        Self {
            declared: spec.declared_bounds().clone(),
            sampling: Some(config),
        }
    }

    /// Sampled estimates for every entry, ignoring declarations.
    pub fn sampled_only(config: SamplingConfig) -> Self {
        Self {
            declared: DeclaredBounds::default(),
            sampling: Some(config),
        }
    }

    fn sampling(&self, what: &str) -> Result<&SamplingConfig> {
        self.sampling
            .as_ref()
            .ok_or_else(|| Error::IncompleteBounds(what.to_string()))
    }

    pub fn f_upper(&self, spec: &ProblemSpec, rho: f64) -> Result<BoundValue> {
        match &self.declared.f_upper {
            Some(e) => declared_value(e, rho, "f_upper"),
            None => {
                let c = self.sampling("f_upper")?;
                Ok(heuristic(
                    estimate_f_extrema(spec, rho, c.lattice, c.execution)?.max,
                ))
            }
        }
    }

    pub fn f_lower(&self, spec: &ProblemSpec, rho: f64) -> Result<BoundValue> {
        match &self.declared.f_lower {
            Some(e) => declared_value(e, rho, "f_lower"),
            None => {
                let c = self.sampling("f_lower")?;
                Ok(heuristic(
                    estimate_f_extrema(spec, rho, c.lattice, c.execution)?.min,
                ))
            }
        }
    }

    /// Bound on `H_{i,ρ}`, `i ∈ {0, 1}`.
    pub fn h_upper(&self, spec: &ProblemSpec, i: usize, rho: f64) -> Result<BoundValue> {
        let name = if i == 0 { "H1" } else { "H2" };
        match &self.declared.h_upper[i] {
            Some(e) => declared_value(e, rho, name),
            None => {
                let c = self.sampling(name)?;
                let est = estimate_h(spec, i, rho, c.h_samples, c.seed, c.execution)?;
                Ok(heuristic(est.value))
            }
        }
    }

    pub fn resolve(&self, spec: &ProblemSpec, r: f64, big_r: f64) -> Result<ResolvedBounds> {
        if !(r > 0.0 && r < big_r && big_r.is_finite()) {
            return Err(Error::Parameter(format!(
                "need 0 < r < R, got r = {r}, R = {big_r}"
            )));
        }
        let resolved = ResolvedBounds {
            r,
            big_r,
            f_upper: self.f_upper(spec, big_r)?,
            f_lower: self.f_lower(spec, r)?,
            h_upper: [self.h_upper(spec, 0, big_r)?, self.h_upper(spec, 1, big_r)?],
            inflation: self.sampling.map(|c| c.inflation).unwrap_or_default(),
            seed: None,
        };
        let seed = (resolved.rigor() == Rigor::Heuristic)
            .then(|| self.sampling.map(|c| c.seed))
            .flatten();
        Ok(ResolvedBounds { seed, ..resolved })
    }

    /// Checks the declared entries for sign, ordering and monotonicity in
    /// `rho` over the given radii (ascending). Returns one message per
    /// problem found.
    pub fn check_invariants(&self, radii: &[f64]) -> Result<Vec<String>> {
        let mut issues = Vec::new();
        let eval = |e: &Option<Expression>, rho| e.as_ref().map(|e| e.eval_bound(rho)).transpose();
        let mut prev: Option<(f64, Option<f64>, Option<f64>)> = None;
        for &rho in radii {
            let up = eval(&self.declared.f_upper, rho)?;
            let lo = eval(&self.declared.f_lower, rho)?;
            let hs = [
                eval(&self.declared.h_upper[0], rho)?,
                eval(&self.declared.h_upper[1], rho)?,
            ];
            for (name, x) in [
                ("f_upper", up),
                ("f_lower", lo),
                ("H1", hs[0]),
                ("H2", hs[1]),
            ] {
                if let Some(x) = x {
                    if !(x >= 0.0) {
                        issues.push(format!("{name}({rho}) = {x} is negative"));
                    }
                }
            }
            if let (Some(u), Some(l)) = (up, lo) {
                if u < l {
                    issues.push(format!("f_upper({rho}) = {u} < f_lower({rho}) = {l}"));
                }
            }
            if let Some((p_rho, p_up, p_lo)) = prev {
                if let (Some(a), Some(b)) = (p_up, up) {
                    if b < a {
                        issues.push(format!("f_upper decreases between rho = {p_rho} and {rho}"));
                    }
                }
                if let (Some(a), Some(b)) = (p_lo, lo) {
                    if b > a {
                        issues.push(format!("f_lower increases between rho = {p_rho} and {rho}"));
                    }
                }
            }
            prev = Some((rho, up, lo));
        }
        Ok(issues)
    }
}

/// Sampled extremes of `f` over `[0,1]×[0,ρ]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FExtrema {
    pub max: f64,
    pub argmax: [f64; 3],
    pub min: f64,
    pub argmin: [f64; 3],
}

impl FExtrema {
    fn absorb(&mut self, x: f64, p: [f64; 3]) {
        if x > self.max {
            self.max = x;
            self.argmax = p;
        }
        if x < self.min {
            self.min = x;
            self.argmin = p;
        }
    }

    fn merge(&mut self, other: &FExtrema) {
        if other.max > self.max {
            self.max = other.max;
            self.argmax = other.argmax;
        }
        if other.min < self.min {
            self.min = other.min;
            self.argmin = other.argmin;
        }
    }

    fn empty() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            argmax: [f64::NAN; 3],
            min: f64::INFINITY,
            argmin: [f64::NAN; 3],
        }
    }
}

fn lattice_point(a: usize, m: usize, scale: f64) -> f64 {
    if a + 1 == m {
        scale
    } else {
        scale * a as f64 / (m - 1) as f64
    }
}

/// Extremes of `f` over the `m × m × m` lattice on `[0,1]×[0,ρ]²`, with no
/// refinement.
pub fn lattice_extrema(
    spec: &ProblemSpec,
    rho: f64,
    m: usize,
    exec: Execution,
) -> Result<FExtrema> {
    if !(rho > 0.0) || m < 2 {
        return Err(Error::Parameter(format!(
            "need rho > 0 and m >= 2, got rho = {rho}, m = {m}"
        )));
    }
    let slabs = par::try_map_indices(exec, m, |a| {
        let t = lattice_point(a, m, 1.0);
        let mut ext = FExtrema::empty();
        for b in 0..m {
            let u = lattice_point(b, m, rho);
            for c in 0..m {
                let v = lattice_point(c, m, rho);
                ext.absorb(spec.eval_f(t, u, v)?, [t, u, v]);
            }
        }
        Ok::<_, Error>(ext)
    })?;
    let mut ext = FExtrema::empty();
    for s in &slabs {
        ext.merge(s);
    }
    Ok(ext)
}

/// Lattice scan followed by one refinement pass on a finer local lattice
/// around the best max and min cells. Heuristic: `max` never exceeds the
/// true `f̄_ρ` and `min` is never below the true `f_ρ`.
pub fn estimate_f_extrema(
    spec: &ProblemSpec,
    rho: f64,
    m: usize,
    exec: Execution,
) -> Result<FExtrema> {
    let mut ext = lattice_extrema(spec, rho, m, exec)?;
    let half = [
        1.0 / (m - 1) as f64,
        rho / (m - 1) as f64,
        rho / (m - 1) as f64,
    ];
    let hi = [1.0, rho, rho];
    const SUB: usize = 9;
    for centre in [ext.argmax, ext.argmin] {
        let axis = |k: usize, i: usize| {
            let lo = (centre[k] - half[k]).max(0.0);
            let up = (centre[k] + half[k]).min(hi[k]);
            lo + (up - lo) * i as f64 / (SUB - 1) as f64
        };
        for a in 0..SUB {
            for b in 0..SUB {
                for c in 0..SUB {
                    let p = [axis(0, a), axis(1, b), axis(2, c)];
                    ext.absorb(spec.eval_f(p[0], p[1], p[2])?, p);
                }
            }
        }
    }
    Ok(ext)
}

/// Sampled lower estimate of `H_{i,ρ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HEstimate {
    pub value: f64,
    /// Number of sphere members evaluated.
    pub members: usize,
}

/// The deterministic part of the sampling family: affine members
/// `a + (ρ - a)t` from `ρt` to the constant `ρ`, and `ρ tᵖ / p`.
pub fn structured_sphere_members(spec: &ProblemSpec, rho: f64) -> Vec<GridFunction> {
    let grid = *spec.grid();
    let mut out = Vec::new();
    for k in 0..=4 {
        let a = rho * k as f64 / 4.0;
        out.push(GridFunction::from_fn(
            grid,
            |t| a + (rho - a) * t,
            |_| rho - a,
        ));
    }
    for p in [2.0, 3.0, 5.0] {
        out.push(GridFunction::from_fn(
            grid,
            |t| rho * t.powf(p) / p,
            |t| rho * t.powf(p - 1.0),
        ));
    }
    out
}

fn member_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Seeded random cone function with `c1_norm = rho`. Independent of how
/// many other members are drawn or in which order.
pub fn sphere_member(spec: &ProblemSpec, rho: f64, seed: u64, index: usize) -> GridFunction {
    GridFunction::random_cone(*spec.grid(), &mut member_rng(seed, index), rho)
}

/// Max of `hᵢ` (`i ∈ {0, 1}`) over cone functions on the sphere
/// `‖u‖ = ρ`: the structured members plus `samples` random ones.
pub fn estimate_h(
    spec: &ProblemSpec,
    i: usize,
    rho: f64,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<HEstimate> {
    if !(rho > 0.0) || i > 1 {
        return Err(Error::Parameter(format!(
            "need rho > 0 and i in {{0,1}}, got {rho}, {i}"
        )));
    }
    let h = spec.functional(i);
    let mut best = f64::NEG_INFINITY;
    let structured = structured_sphere_members(spec, rho);
    for u in &structured {
        best = best.max(h.eval_functional(u)?);
    }
    let random = par::try_map_indices(exec, samples, |k| {
        h.eval_functional(&sphere_member(spec, rho, seed, k))
    })?;
    for x in random {
        best = best.max(x);
    }
    Ok(HEstimate {
        value: best,
        members: structured.len() + samples,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `f(t,u,v)` outside `[0, τu]`.
    Nonlinearity {
        t: f64,
        u: f64,
        v: f64,
        value: f64,
        bound: f64,
    },
    /// `hᵢ[u] > ξᵢ‖u‖∞` for a sampled cone function.
    Functional {
        index: usize,
        c1_norm: f64,
        sup_norm: f64,
        value: f64,
        bound: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Nonlinearity { t, u, v, value, bound } => {
                write!(f, "f({t}, {u}, {v}) = {value} not in [0, {bound}]")
            }
            Violation::Functional {
                index,
                c1_norm,
                sup_norm,
                value,
                bound,
            } => write!(
                f,
                "h{}[u] = {value} > {bound} for a cone function with ||u|| = {c1_norm}, ||u||_inf = {sup_norm}",
                index + 1
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Falsification {
    Consistent { points: usize },
    Counterexample(Violation),
}

impl Falsification {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Falsification::Consistent { .. })
    }
}

/// Boxes `2^-8 ..= 2^8` by default.
pub const DEFAULT_FALSIFY_BUDGET: usize = 8;

fn slack(bound: f64) -> f64 {
    1e-9 * bound.abs().max(1.0)
}

/// Searches for a violation of `0 ≤ f ≤ τu` and `hᵢ[u] ≤ ξᵢ‖u‖∞` over boxes
/// `[0, ρ_k]²` with `ρ_k = 2^k`, `k = -budget..=budget`: a 9³ lattice plus 64
/// random points for `f`, and 8 random cone functions of norm `ρ_k` for each
/// `hᵢ`. Returns the first violation in box order.
pub fn falsify_linear_growth(
    spec: &ProblemSpec,
    w: &LinearGrowthWitness,
    budget: usize,
    seed: u64,
    exec: Execution,
) -> Result<Falsification> {
    if budget == 0 {
        return Err(Error::Parameter(
            "falsification budget must be at least 1".into(),
        ));
    }
    let budget = budget.min(60) as i32;
    let boxes: Vec<f64> = (-budget..=budget).map(|k| 2f64.powi(k)).collect();
    const M: usize = 9;
    const RANDOM_POINTS: usize = 64;
    const CONE_SAMPLES: usize = 8;

    let per_box = par::try_map_indices(exec, boxes.len(), |bi| {
        let rho = boxes[bi];
        let mut checked = 0usize;
        let check_f = |t: f64, u: f64, v: f64| -> Result<Option<Violation>> {
            let value = spec.eval_f(t, u, v)?;
            let bound = w.tau * u;
            Ok(
                (!(value >= -slack(0.0) && value <= bound + slack(bound))).then_some(
                    Violation::Nonlinearity {
                        t,
                        u,
                        v,
                        value,
                        bound,
                    },
                ),
            )
        };
        for a in 0..M {
            for b in 0..M {
                for c in 0..M {
                    checked += 1;
                    let p = (
                        lattice_point(a, M, 1.0),
                        lattice_point(b, M, rho),
                        lattice_point(c, M, rho),
                    );
                    if let Some(v) = check_f(p.0, p.1, p.2)? {
                        return Ok((Some(v), checked));
                    }
                }
            }
        }
        let mut rng = member_rng(seed, bi);
        for _ in 0..RANDOM_POINTS {
            checked += 1;
            let t = rng.gen::<f64>();
            let u = rho * rng.gen::<f64>();
            let v = rho * rng.gen::<f64>();
            if let Some(v) = check_f(t, u, v)? {
                return Ok((Some(v), checked));
            }
        }
        let grid = *spec.grid();
        let mut members = vec![GridFunction::from_fn(grid, |t| rho * t, |_| rho)];
        members.extend((0..CONE_SAMPLES).map(|_| GridFunction::random_cone(grid, &mut rng, rho)));
        for u in &members {
            for i in 0..2 {
                checked += 1;
                let value = spec.functional(i).eval_functional(u)?;
                let bound = w.xi[i] * u.sup_norm();
                if value > bound + slack(bound) {
                    let v = Violation::Functional {
                        index: i,
                        c1_norm: u.c1_norm(),
                        sup_norm: u.sup_norm(),
                        value,
                        bound,
                    };
                    return Ok((Some(v), checked));
                }
            }
        }
        Ok::<_, Error>((None, checked))
    })?;

    let mut points = 0;
    for (violation, checked) in per_box {
        points += checked;
        if let Some(v) = violation {
            return Ok(Falsification::Counterexample(v));
        }
    }
    Ok(Falsification::Consistent { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    const EXAMPLE1: &str = include_str!("../../../problems/example1.prob");
    const EXAMPLE2: &str = include_str!("../../../problems/example2.prob");

    fn spec(text: &str, n: usize) -> ProblemSpec {
        ProblemSpec::parse(text, Grid::new(n).unwrap()).unwrap()
    }

    fn with_f_h(f: &str, h1: &str, h2: &str) -> ProblemSpec {
        let text = EXAMPLE1
            .replace("f = exp(t*(u+v))", &format!("f = {f}"))
            .replace("h1 = U(0.25) + DU(0.75)^2", &format!("h1 = {h1}"))
            .replace("h2 = INT(U(s)^3 + DU(s))", &format!("h2 = {h2}"));
        spec(&text, 64)
    }

    #[test]
    fn f_extrema_of_example1() {
        let s = spec(EXAMPLE1, 32);
        let e = estimate_f_extrema(&s, 1.0, 64, Execution::default()).unwrap();
        assert_eq!(e.max, 2f64.exp());
        assert_eq!(e.argmax, [1.0, 1.0, 1.0]);
        assert_eq!(e.min, 1.0);
        assert_eq!(e.argmin[0], 0.0);
    }

    #[test]
    fn constant_f_extrema() {
        let s = with_f_h("2.5", "0", "0");
        let e = estimate_f_extrema(&s, 3.0, 5, Execution::Sequential).unwrap();
        assert_eq!((e.max, e.min), (2.5, 2.5));
    }

    #[test]
    fn f_extrema_of_example2_against_dense_scan() {
        let s = spec(EXAMPLE2, 32);
        let e = estimate_f_extrema(&s, 1.0, 64, Execution::default()).unwrap();
        // independent dense scan
        let m = 200;
        let mut dense_max = f64::NEG_INFINITY;
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    let (t, u, v) = (
                        a as f64 / (m - 1) as f64,
                        b as f64 / (m - 1) as f64,
                        c as f64 / (m - 1) as f64,
                    );
                    dense_max = dense_max.max(u * (2.0 - t * (u * v).sin()));
                }
            }
        }
        assert!(e.max <= 3.0);
        assert!((e.max - dense_max).abs() < 1e-3, "{} vs {dense_max}", e.max);
        assert_eq!(e.min, 0.0);
        assert_eq!(e.argmin[1], 0.0);
    }

    #[test]
    fn lattice_extrema_monotone_under_refinement() {
        let s = spec(EXAMPLE2, 16);
        for (m1, m2) in [(3, 5), (5, 9), (9, 17), (17, 33)] {
            let a = lattice_extrema(&s, 1.7, m1, Execution::Sequential).unwrap();
            let b = lattice_extrema(&s, 1.7, m2, Execution::Parallel).unwrap();
            assert!(b.max >= a.max && b.min <= a.min);
        }
    }

    #[test]
    fn h_estimates() {
        let s = with_f_h("1", "U(1)", "0");
        let e = estimate_h(&s, 0, 1.0, 32, 0, Execution::default()).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(
            estimate_h(&s, 1, 1.0, 32, 0, Execution::default())
                .unwrap()
                .value,
            0.0
        );

        let s = spec(EXAMPLE1, 256);
        let h1 = estimate_h(&s, 0, 1.0, 256, 0, Execution::default()).unwrap();
        // u = t gives 1.25 and is always among the members
        assert!(h1.value <= 2.0 && h1.value >= 1.25, "{}", h1.value);
        let declared = BoundSet::declared(&s).h_upper(&s, 0, 1.0).unwrap();
        assert_eq!(
            declared,
            BoundValue {
                value: 2.0,
                rigor: Rigor::Certified
            }
        );
        assert!(h1.value <= declared.value);
        let h2 = estimate_h(&s, 1, 1.0, 256, 0, Execution::default()).unwrap();
        assert!(h2.value <= BoundSet::declared(&s).h_upper(&s, 1, 1.0).unwrap().value);
    }

    #[test]
    fn sphere_members_are_cone_functions_of_exact_norm() {
        let s = spec(EXAMPLE1, 128);
        for rho in [0.05, 1.0, 7.5] {
            let mut members = structured_sphere_members(&s, rho);
            members.extend((0..50).map(|k| sphere_member(&s, rho, 3, k)));
            for u in members {
                assert!((u.c1_norm() - rho).abs() <= 1e-9, "{}", u.c1_norm());
                assert!(u.in_cone());
            }
        }
    }

    #[test]
    fn estimates_are_deterministic_across_execution() {
        let s = spec(EXAMPLE1, 64);
        let a = estimate_h(&s, 1, 0.7, 100, 9, Execution::Sequential).unwrap();
        let b = estimate_h(&s, 1, 0.7, 100, 9, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn heuristic_estimates_stay_below_declared_bounds() {
        for text in [EXAMPLE1, EXAMPLE2] {
            let s = spec(text, 128);
            let declared = BoundSet::declared(&s);
            let sampled = BoundSet::sampled_only(SamplingConfig {
                lattice: 24,
                h_samples: 64,
                ..SamplingConfig::default()
            });
            for rho in [0.05, 0.5, 1.0] {
                assert!(
                    sampled.f_upper(&s, rho).unwrap().value
                        <= declared.f_upper(&s, rho).unwrap().value
                );
                assert!(
                    sampled.f_lower(&s, rho).unwrap().value
                        >= declared.f_lower(&s, rho).unwrap().value
                );
                for i in 0..2 {
                    assert!(
                        sampled.h_upper(&s, i, rho).unwrap().value
                            <= declared.h_upper(&s, i, rho).unwrap().value
                    );
                }
            }
            let radii: Vec<f64> = (1..40).map(|k| k as f64 * 0.1).collect();
            assert!(declared.check_invariants(&radii).unwrap().is_empty());
        }
    }

    #[test]
    fn resolve_reports_rigor_and_missing_entries() {
        let s = spec(EXAMPLE1, 64);
        let r = BoundSet::declared(&s).resolve(&s, 0.05, 1.0).unwrap();
        assert_eq!(r.rigor(), Rigor::Certified);
        assert_eq!(r.seed, None);
        assert!(BoundSet::declared(&s).resolve(&s, 1.0, 0.5).is_err());

        let bare = spec(&EXAMPLE1.replace("H2 = rho^3 + rho\n", ""), 64);
        assert!(matches!(
            BoundSet::declared(&bare).resolve(&bare, 0.05, 1.0),
            Err(Error::IncompleteBounds(ref w)) if w == "H2"
        ));
        let r = BoundSet::with_sampling(
            &bare,
            SamplingConfig {
                seed: 42,
                ..Default::default()
            },
        )
        .resolve(&bare, 0.05, 1.0)
        .unwrap();
        assert_eq!(r.rigor(), Rigor::Heuristic);
        assert_eq!(r.h_upper[0].rigor, Rigor::Certified);
        assert_eq!(r.seed, Some(42));
    }

    #[test]
    fn check_invariants_flags_bad_declarations() {
        let s = spec(&EXAMPLE1.replace("f_lower = 1", "f_lower = 10*rho"), 16);
        let issues = BoundSet::declared(&s)
            .check_invariants(&[0.1, 1.0, 2.0])
            .unwrap();
        assert!(issues.iter().any(|m| m.contains("f_lower increases")));
        assert!(issues.iter().any(|m| m.contains("< f_lower")));
    }

    #[test]
    fn falsification_examples() {
        let w = LinearGrowthWitness::new(3.0, [1.0, 1.0]).unwrap();
        let s2 = spec(EXAMPLE2, 64);
        assert!(falsify_linear_growth(&s2, &w, 10, 0, Execution::default())
            .unwrap()
            .is_consistent());

        let s1 = spec(EXAMPLE1, 64);
        match falsify_linear_growth(&s1, &w, 10, 0, Execution::default()).unwrap() {
            Falsification::Counterexample(Violation::Nonlinearity { value, bound, .. }) => {
                assert!(value > bound)
            }
            other => panic!("{other:?}"),
        }
        // the specific point: f(1, 0, 1) = e > 0 = τ·0
        assert_eq!(s1.eval_f(1.0, 0.0, 1.0).unwrap(), std::f64::consts::E);

        let zero = with_f_h("0", "0", "0");
        let w0 = LinearGrowthWitness::new(0.0, [0.0, 0.0]).unwrap();
        assert!(
            falsify_linear_growth(&zero, &w0, 4, 0, Execution::default())
                .unwrap()
                .is_consistent()
        );
    }

    #[test]
    fn falsification_finds_functional_violations() {
        let s = with_f_h("u", "2*U(1)", "0");
        let w = LinearGrowthWitness::new(1.0, [1.0, 0.0]).unwrap();
        match falsify_linear_growth(&s, &w, 3, 0, Execution::default()).unwrap() {
            Falsification::Counterexample(Violation::Functional { index: 0, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn witness_rejects_negative_entries() {
        assert!(LinearGrowthWitness::new(-1.0, [1.0, 1.0]).is_err());
        assert!(LinearGrowthWitness::new(1.0, [1.0, f64::NAN]).is_err());
    }
}
