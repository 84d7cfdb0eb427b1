//! Uniform grids on `[0, 1]`, sampled `C¹` candidates and trapezoidal
//! quadrature.

use rand::Rng;

use crate::error::{Error, Result};

/// Tolerance below which negative samples still count as cone members.
pub const EPS_CONE: f64 = 1e-9;

/// Default number of subintervals used when solving.
pub const DEFAULT_N: usize = 256;

/// Tolerance for `|u(t_j) - u(0) - ∫₀^{t_j} u'|`, tracking trapezoid order.
pub fn consistency_tolerance(n: usize) -> f64 {
    10.0 / (n as f64 * n as f64)
}

/// Uniform grid `t_j = j / n`, `j = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Grid(format!(
                "need at least 2 subintervals, got {n}"
            )));
        }
        Ok(Self { n })
    }

    /// Number of subintervals.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of nodes, `n + 1`.
    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.n {
            1.0
        } else {
            j as f64 / self.n as f64
        }
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n + 1).map(move |j| self.node(j))
    }

    /// Index of the node at `a`, if `a` lies on one (up to rounding).
    pub fn node_index(&self, a: f64) -> Option<usize> {
        let x = a * self.n as f64;
        let r = x.round();
        ((x - r).abs() <= 1e-9 && r >= 0.0 && r <= self.n as f64).then_some(r as usize)
    }

    fn check_len(&self, samples: &[f64]) -> Result<()> {
        if samples.len() != self.len() {
            return Err(Error::Shape {
                expected: self.len(),
                got: samples.len(),
            });
        }
        Ok(())
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Composite trapezoidal rule for `∫₀¹` of nodal samples.
pub fn integrate(samples: &[f64], grid: &Grid) -> Result<f64> {
    integrate_tail(samples, grid, 0)
}

/// Composite trapezoidal rule for `∫_{t_j}^1` of nodal samples.
pub fn integrate_tail(samples: &[f64], grid: &Grid, j: usize) -> Result<f64> {
    grid.check_len(samples)?;
    let n = grid.n();
    if j > n {
        return Err(Error::Shape {
            expected: n,
            got: j,
        });
    }
    if j == n {
        return Ok(0.0);
    }
    let ends = 0.5 * (samples[j] + samples[n]);
    let inner = samples[j + 1..n].iter().copied();
    Ok(compensated_sum(std::iter::once(ends).chain(inner)) / n as f64)
}

/// Running trapezoidal integrals `∫₀^{t_j}` for every node.
pub fn cumulative_integral(samples: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    grid.check_len(samples)?;
    let h = grid.step();
    let mut out = Vec::with_capacity(samples.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in samples.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    Ok(out)
}

/// A candidate solution: samples of `u` and `u'` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
    dvalues: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>, dvalues: Vec<f64>) -> Result<Self> {
        grid.check_len(&values)?;
        grid.check_len(&dvalues)?;
        Ok(Self {
            grid,
            values,
            dvalues,
        })
    }

    pub fn zero(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            dvalues: vec![0.0; grid.len()],
        }
    }

    /// Samples `u` and its (separately supplied) derivative at the nodes.
    pub fn from_fn(grid: Grid, u: impl Fn(f64) -> f64, du: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: grid.nodes().map(&u).collect(),
            dvalues: grid.nodes().map(&du).collect(),
        }
    }

    /// A random non-negative, non-decreasing function with `c1_norm` equal to
    /// `norm`. `u'` is piecewise linear with knots on grid nodes and `u` is
    /// its running trapezoidal integral, so the pair is exactly consistent.
    pub fn random_cone<R: Rng + ?Sized>(grid: Grid, rng: &mut R, norm: f64) -> Self {
        let n = grid.n();
        let mut knots: Vec<usize> = (0..rng.gen_range(1..=6))
            .map(|_| rng.gen_range(1..n))
            .collect();
        knots.push(0);
        knots.push(n);
        knots.sort_unstable();
        knots.dedup();
        let heights: Vec<f64> = knots
            .iter()
            .map(|_| {
                if rng.gen_bool(0.2) {
                    0.0
                } else {
                    rng.gen::<f64>()
                }
            })
            .collect();
        let mut dvalues = vec![0.0; grid.len()];
        for (w, hw) in knots.windows(2).zip(heights.windows(2)) {
            let (a, b) = (w[0], w[1]);
            for (j, d) in dvalues.iter_mut().enumerate().take(b + 1).skip(a) {
                let s = (j - a) as f64 / (b - a) as f64;
                *d = hw[0] * (1.0 - s) + hw[1] * s;
            }
        }
        let start = if rng.gen_bool(0.3) {
            0.0
        } else {
            rng.gen::<f64>()
        };
        let values: Vec<f64> = cumulative_integral(&dvalues, &grid)
            .expect("length matches grid")
            .into_iter()
            .map(|x| start + x)
            .collect();
        let u = Self {
            grid,
            values,
            dvalues,
        };
        let c1 = u.c1_norm();
        if c1 > 0.0 {
            u.scaled(norm / c1)
        } else {
            Self::from_fn(grid, |t| norm * t, |_| norm)
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dvalues(&self) -> &[f64] {
        &self.dvalues
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn deriv_sup_norm(&self) -> f64 {
        self.dvalues.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Grid approximation of `max{‖u‖∞, ‖u'‖∞}`.
    pub fn c1_norm(&self) -> f64 {
        self.sup_norm().max(self.deriv_sup_norm())
    }

    /// `c1_norm(self - other)`.
    pub fn c1_distance(&self, other: &GridFunction) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Shape {
                expected: self.grid.len(),
                got: other.grid.len(),
            });
        }
        let d = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
        };
        Ok(d(&self.values, &other.values).max(d(&self.dvalues, &other.dvalues)))
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|x| alpha * x).collect(),
            dvalues: self.dvalues.iter().map(|x| alpha * x).collect(),
        }
    }

    fn interpolate(&self, samples: &[f64], a: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::Domain { value: a });
        }
        if let Some(j) = self.grid.node_index(a) {
            return Ok(samples[j]);
        }
        let n = self.grid.n();
        let x = a * n as f64;
        let j = (x.floor() as usize).min(n - 1);
        let frac = x - j as f64;
        Ok(samples[j] * (1.0 - frac) + samples[j + 1] * frac)
    }

    /// Linear interpolation of `u` at `a`; exact at nodes.
    pub fn eval_at(&self, a: f64) -> Result<f64> {
        self.interpolate(&self.values, a)
    }

    /// Linear interpolation of `u'` at `a`; exact at nodes.
    pub fn eval_deriv_at(&self, a: f64) -> Result<f64> {
        self.interpolate(&self.dvalues, a)
    }

    /// Describes the first cone violation found, if any: a sample of `u` or
    /// `u'` below `-eps`, or a decrease of `u` by more than `eps`.
    pub fn cone_violation(&self, eps: f64) -> Option<String> {
        if let Some(j) = self.values.iter().position(|&x| !(x >= -eps)) {
            return Some(format!("u({}) = {}", self.grid.node(j), self.values[j]));
        }
        if let Some(j) = self.dvalues.iter().position(|&x| !(x >= -eps)) {
            return Some(format!("u'({}) = {}", self.grid.node(j), self.dvalues[j]));
        }
        if let Some(j) = self.values.windows(2).position(|w| w[1] < w[0] - eps) {
            return Some(format!(
                "u decreases between t = {} and t = {}",
                self.grid.node(j),
                self.grid.node(j + 1)
            ));
        }
        None
    }

    pub fn in_cone(&self) -> bool {
        self.cone_violation(EPS_CONE).is_none()
    }

    /// `max_j |u(t_j) - u(0) - ∫₀^{t_j} u'|` with the trapezoidal integral.
    pub fn consistency_defect(&self) -> f64 {
        let cum = cumulative_integral(&self.dvalues, &self.grid).expect("length matches grid");
        let u0 = self.values[0];
        self.values
            .iter()
            .zip(&cum)
            .fold(0.0, |m, (u, c)| m.max((u - u0 - c).abs()))
    }
}
