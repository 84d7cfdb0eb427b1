//! Pointwise classification of a `(λ, η₁, η₂)` lattice.
//!
//! Each cell is a single parameter point. Nothing is claimed about the space
//! between lattice points.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::bounds::{BoundSet, LinearGrowthWitness, Rigor};
use crate::certificate::{
    check_nonexistence, existence_from_resolved, ExistenceCertificate, NonexistenceCertificate,
    WitnessStatus,
};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::problem::{Params, ProblemSpec};

/// `a:b:k`, `k` evenly spaced points from `a` to `b` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(start: f64, end: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Parameter("axis needs at least one step".into()));
        }
        for x in [start, end] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::Parameter(format!(
                    "axis bounds must be finite and non-negative, got {x}"
                )));
            }
        }
        if end < start {
            return Err(Error::Parameter(format!(
                "axis end {end} is below start {start}"
            )));
        }
        Ok(Self { start, end, steps })
    }

    pub fn point(start: f64) -> Result<Self> {
        Self::new(start, start, 1)
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.steps == 1 {
            return self.start;
        }
        if i + 1 == self.steps {
            return self.end;
        }
        self.start + (self.end - self.start) * i as f64 / (self.steps - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.value(i)).collect()
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parameter(format!("expected a:b:k, got '{s}'"));
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        match parts.as_slice() {
            [a] => Axis::point(a.parse().map_err(|_| bad())?),
            [a, b, k] => Axis::new(
                a.parse().map_err(|_| bad())?,
                b.parse().map_err(|_| bad())?,
                k.parse().map_err(|_| bad())?,
            ),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Existence,
    Nonexistence,
    BothFail,
    /// Both tests passed. Cannot happen with consistent bounds.
    Conflict,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Existence => "existence",
            Classification::Nonexistence => "nonexistence",
            Classification::BothFail => "both-fail",
            Classification::Conflict => "conflict",
        }
    }

    fn from_tests(existence: bool, nonexistence: bool) -> Self {
        match (existence, nonexistence) {
            (true, true) => Classification::Conflict,
            (true, false) => Classification::Existence,
            (false, true) => Classification::Nonexistence,
            (false, false) => Classification::BothFail,
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub params: Params,
    pub classification: Classification,
    pub existence: ExistenceCertificate,
    pub nonexistence: Option<NonexistenceCertificate>,
}

impl SweepCell {
    pub fn rigor(&self) -> Rigor {
        self.existence.rigor
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepBox {
    pub lambda: Axis,
    pub eta1: Axis,
    pub eta2: Axis,
}

impl SweepBox {
    pub fn len(&self) -> usize {
        self.lambda.steps * self.eta1.steps * self.eta2.steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lattice point `index` in lexicographic `(λ, η₁, η₂)` order.
    pub fn params(&self, index: usize) -> Params {
        let k = index % self.eta2.steps;
        let rest = index / self.eta2.steps;
        let j = rest % self.eta1.steps;
        let i = rest / self.eta1.steps;
        Params::new(self.lambda.value(i), self.eta1.value(j), self.eta2.value(k))
    }
}

/// Classifies every lattice point of `cube`. Bounds are resolved once (they do
/// not depend on the parameters); the witness, when given, comes with the
/// status of its falsification run.
pub fn run_sweep(
    spec: &ProblemSpec,
    cube: &SweepBox,
    bounds: &BoundSet,
    witness: Option<(&LinearGrowthWitness, &WitnessStatus)>,
    r: f64,
    big_r: f64,
    exec: Execution,
) -> Result<Vec<SweepCell>> {
    let resolved = bounds.resolve(spec, r, big_r)?;
    par::try_map_indices(exec, cube.len(), |index| {
        let params = cube.params(index);
        let at = spec.with_params(params)?;
        let existence = existence_from_resolved(&at, &resolved);
        let nonexistence = witness.map(|(w, status)| check_nonexistence(&at, w, status.clone()));
        let classification = Classification::from_tests(
            existence.verdict.passed(),
            nonexistence.as_ref().is_some_and(|c| c.passed),
        );
        Ok(SweepCell {
            params,
            classification,
            existence,
            nonexistence,
        })
    })
}

pub fn count(cells: &[SweepCell], class: Classification) -> usize {
    cells.iter().filter(|c| c.classification == class).count()
}

pub const CSV_HEADER: &str =
    "lambda,eta1,eta2,classification,value_branch,deriv_branch,idx0,nonexistence_lhs,rigor";

/// One row per cell, header first. A missing non-existence test leaves its
/// column empty.
pub fn write_csv<W: Write>(mut out: W, cells: &[SweepCell]) -> std::io::Result<()> {
    writeln!(
        out,
        "# classifications hold at the listed lattice points only"
    )?;
    writeln!(out, "{CSV_HEADER}")?;
    for c in cells {
        let lhs = c
            .nonexistence
            .as_ref()
            .map(|n| n.lhs.to_string())
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.params.lambda,
            c.params.eta1,
            c.params.eta2,
            c.classification,
            c.existence.lhs_value_branch,
            c.existence.lhs_deriv_branch,
            c.existence.lhs_idx0,
            lhs,
            c.rigor()
        )?;
    }
    Ok(())
}
