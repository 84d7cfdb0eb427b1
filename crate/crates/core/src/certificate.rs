//! Existence and non-existence certificates.
//!
//! Existence in the annulus `r ≤ ‖u‖ ≤ R` holds when
//!
//! ```text
//! max{ λ f̄_R K  + Σ ηᵢ γᵢ(1)   H_{i,R},
//!      λ f̄_R K* + Σ ηᵢ ‖γᵢ'‖∞  H_{i,R} } ≤ R        (outer)
//! λ f_r min{K, K*} ≥ r                               (inner)
//! ```
//!
//! and only the zero solution exists in the cone when `0 ≤ f ≤ τu`,
//! `hᵢ[u] ≤ ξᵢ‖u‖∞` and `λτK + Σ ηᵢξᵢγᵢ(1) < 1`.
//!
//! Comparisons are exact: `≤` and `≥` above are non-strict, `< 1` is strict.

use std::fmt;

use crate::bounds::{BoundSet, Falsification, LinearGrowthWitness, ResolvedBounds, Rigor};
use crate::error::{Error, Result};
use crate::problem::{Params, ProblemSpec};
use crate::record::{Record, ToRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Both inequalities hold with declared bounds only.
    Certified,
    /// Both inequalities hold, but some input was sampled.
    HeuristicPass,
    Fail,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self != Verdict::Fail
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Certified => "certified",
            Verdict::HeuristicPass => "heuristic-pass",
            Verdict::Fail => "fail",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "certified" => Verdict::Certified,
            "heuristic-pass" => Verdict::HeuristicPass,
            "fail" => Verdict::Fail,
            _ => return None,
        })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExistenceCertificate {
    pub params: Params,
    pub r: f64,
    pub big_r: f64,
    /// Left side of the outer inequality, sup-norm branch.
    pub lhs_value_branch: f64,
    /// Left side of the outer inequality, derivative branch.
    pub lhs_deriv_branch: f64,
    /// Left side of the inner inequality.
    pub lhs_idx0: f64,
    /// The three left sides without heuristic inflation (equal to the above
    /// when every bound is certified).
    pub raw_value_branch: f64,
    pub raw_deriv_branch: f64,
    pub raw_idx0: f64,
    pub rigor: Rigor,
    pub verdict: Verdict,
    pub seed: Option<u64>,
}

impl ExistenceCertificate {
    /// `R - max(value branch, derivative branch)`; non-negative on pass.
    pub fn margin_outer(&self) -> f64 {
        self.big_r - self.lhs_value_branch.max(self.lhs_deriv_branch)
    }

    /// `lhs_idx0 - r`; non-negative on pass.
    pub fn margin_inner(&self) -> f64 {
        self.lhs_idx0 - self.r
    }
}

/// Evaluates the existence test at the problem's parameters.
pub fn check_existence(
    spec: &ProblemSpec,
    bounds: &BoundSet,
    r: f64,
    big_r: f64,
) -> Result<ExistenceCertificate> {
    let resolved = bounds.resolve(spec, r, big_r)?;
    Ok(existence_from_resolved(spec, &resolved))
}

struct Sides {
    value: f64,
    deriv: f64,
    inner: f64,
}

fn sides(spec: &ProblemSpec, f_up: f64, f_lo: f64, h: [f64; 2]) -> Sides {
    let Params { lambda, .. } = spec.params();
    let eta = spec.params().eta();
    let (k, kstar) = (spec.k_const(), spec.kstar());
    let mut value = lambda * f_up * k;
    let mut deriv = lambda * f_up * kstar;
    for i in 0..2 {
        let g = spec.gamma(i);
        value += eta[i] * g.at_one * h[i];
        deriv += eta[i] * g.deriv_sup * h[i];
    }
    Sides {
        value,
        deriv,
        inner: lambda * f_lo * k.min(kstar),
    }
}

/// Existence test with bounds already resolved at `(r, R)`; the sweep calls
/// this once per lattice point.
pub fn existence_from_resolved(spec: &ProblemSpec, b: &ResolvedBounds) -> ExistenceCertificate {
    let inflate = |v: &crate::bounds::BoundValue, factor: f64| match v.rigor {
        Rigor::Certified => v.value,
        Rigor::Heuristic => v.value * factor,
    };
    let up = b.inflation.upper;
    let raw = sides(
        spec,
        b.f_upper.value,
        b.f_lower.value,
        [b.h_upper[0].value, b.h_upper[1].value],
    );
    let adj = sides(
        spec,
        inflate(&b.f_upper, up),
        inflate(&b.f_lower, b.inflation.lower),
        [inflate(&b.h_upper[0], up), inflate(&b.h_upper[1], up)],
    );
    let rigor = b.rigor();
    let pass = adj.value.max(adj.deriv) <= b.big_r && adj.inner >= b.r;
    let verdict = match (pass, rigor) {
        (false, _) => Verdict::Fail,
        (true, Rigor::Certified) => Verdict::Certified,
        (true, Rigor::Heuristic) => Verdict::HeuristicPass,
    };
    ExistenceCertificate {
        params: spec.params(),
        r: b.r,
        big_r: b.big_r,
        lhs_value_branch: adj.value,
        lhs_deriv_branch: adj.deriv,
        lhs_idx0: adj.inner,
        raw_value_branch: raw.value,
        raw_deriv_branch: raw.deriv,
        raw_idx0: raw.inner,
        rigor,
        verdict,
        seed: b.seed,
    }
}

/// How the linear-growth witness was checked before use.
#[derive(Debug, Clone, PartialEq)]
pub enum WitnessStatus {
    /// Sampling found no violation.
    Consistent,
    /// The user skipped falsification.
    Skipped,
    /// Sampling found a violation; the test cannot apply.
    Refuted(String),
}

impl WitnessStatus {
    pub fn from_falsification(f: &Falsification) -> Self {
        match f {
            Falsification::Consistent { .. } => WitnessStatus::Consistent,
            Falsification::Counterexample(v) => WitnessStatus::Refuted(v.to_string()),
        }
    }

    fn label(&self) -> &'static str {
        match self {
            WitnessStatus::Consistent => "consistent",
            WitnessStatus::Skipped => "skipped",
            WitnessStatus::Refuted(_) => "refuted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonexistenceCertificate {
    pub params: Params,
    /// `λτK + Σ ηᵢξᵢγᵢ(1)`.
    pub lhs: f64,
    pub witness: LinearGrowthWitness,
    pub witness_status: WitnessStatus,
    /// `lhs < 1` and the witness was not refuted.
    pub passed: bool,
}

impl NonexistenceCertificate {
    /// `1 - lhs`; positive on pass.
    pub fn margin(&self) -> f64 {
        1.0 - self.lhs
    }
}

/// `λτK + Σ ηᵢξᵢγᵢ(1)`, independent of any falsification.
pub fn nonexistence_lhs(spec: &ProblemSpec, w: &LinearGrowthWitness) -> f64 {
    let p = spec.params();
    let eta = p.eta();
    let mut lhs = p.lambda * w.tau * spec.k_const();
    for (i, (e, xi)) in eta.iter().zip(w.xi).enumerate() {
        lhs += e * xi * spec.gamma(i).at_one;
    }
    lhs
}

pub fn check_nonexistence(
    spec: &ProblemSpec,
    w: &LinearGrowthWitness,
    status: WitnessStatus,
) -> NonexistenceCertificate {
    let lhs = nonexistence_lhs(spec, w);
    let passed = lhs < 1.0 && !matches!(status, WitnessStatus::Refuted(_));
    NonexistenceCertificate {
        params: spec.params(),
        lhs,
        witness: *w,
        witness_status: status,
        passed,
    }
}

fn push_params(rec: &mut Record, p: &Params) {
    rec.push("lambda", p.lambda)
        .push("eta1", p.eta1)
        .push("eta2", p.eta2);
}

fn read_params(rec: &Record) -> Result<Params> {
    Ok(Params::new(
        rec.parse_field("lambda")?,
        rec.parse_field("eta1")?,
        rec.parse_field("eta2")?,
    ))
}

fn expect_kind(rec: &Record, kind: &str) -> Result<()> {
    if rec.kind() != kind {
        return Err(Error::Record {
            line: 0,
            msg: format!("expected a `{kind}` record, found `{}`", rec.kind()),
        });
    }
    Ok(())
}

impl ToRecord for ExistenceCertificate {
    fn to_record(&self) -> Record {
        let mut rec = Record::new("existence");
        push_params(&mut rec, &self.params);
        rec.push("r", self.r)
            .push("R", self.big_r)
            .push("value_branch", self.lhs_value_branch)
            .push("deriv_branch", self.lhs_deriv_branch)
            .push("idx0", self.lhs_idx0)
            .push("raw_value_branch", self.raw_value_branch)
            .push("raw_deriv_branch", self.raw_deriv_branch)
            .push("raw_idx0", self.raw_idx0)
            .push("margin_outer", self.margin_outer())
            .push("margin_inner", self.margin_inner())
            .push("rigor", self.rigor)
            .push("verdict", self.verdict)
            .push(
                "seed",
                self.seed.map_or("none".to_string(), |s| s.to_string()),
            );
        rec
    }

    fn from_record(rec: &Record) -> Result<Self> {
        expect_kind(rec, "existence")?;
        let bad = |key: &str| Error::Record {
            line: 0,
            msg: format!("invalid `{key}`"),
        };
        Ok(Self {
            params: read_params(rec)?,
            r: rec.parse_field("r")?,
            big_r: rec.parse_field("R")?,
            lhs_value_branch: rec.parse_field("value_branch")?,
            lhs_deriv_branch: rec.parse_field("deriv_branch")?,
            lhs_idx0: rec.parse_field("idx0")?,
            raw_value_branch: rec.parse_field("raw_value_branch")?,
            raw_deriv_branch: rec.parse_field("raw_deriv_branch")?,
            raw_idx0: rec.parse_field("raw_idx0")?,
            rigor: Rigor::parse(rec.require("rigor")?).ok_or_else(|| bad("rigor"))?,
            verdict: Verdict::parse(rec.require("verdict")?).ok_or_else(|| bad("verdict"))?,
            seed: rec.parse_optional("seed")?,
        })
    }
}

impl ToRecord for NonexistenceCertificate {
    fn to_record(&self) -> Record {
        let mut rec = Record::new("nonexistence");
        push_params(&mut rec, &self.params);
        rec.push("tau", self.witness.tau)
            .push("xi1", self.witness.xi[0])
            .push("xi2", self.witness.xi[1])
            .push("lhs", self.lhs)
            .push("margin", self.margin())
            .push("witness", self.witness_status.label());
        if let WitnessStatus::Refuted(why) = &self.witness_status {
            rec.push("counterexample", why);
        }
        rec.push("verdict", if self.passed { "pass" } else { "fail" });
        rec
    }

    fn from_record(rec: &Record) -> Result<Self> {
        expect_kind(rec, "nonexistence")?;
        let witness_status = match rec.require("witness")? {
            "consistent" => WitnessStatus::Consistent,
            "skipped" => WitnessStatus::Skipped,
            "refuted" => WitnessStatus::Refuted(rec.require("counterexample")?.to_string()),
            other => {
                return Err(Error::Record {
                    line: 0,
                    msg: format!("invalid witness status `{other}`"),
                })
            }
        };
        let passed = match rec.require("verdict")? {
            "pass" => true,
            "fail" => false,
            other => {
                return Err(Error::Record {
                    line: 0,
                    msg: format!("invalid verdict `{other}`"),
                })
            }
        };
        Ok(Self {
            params: read_params(rec)?,
            lhs: rec.parse_field("lhs")?,
            witness: LinearGrowthWitness::new(
                rec.parse_field("tau")?,
                [rec.parse_field("xi1")?, rec.parse_field("xi2")?],
            )?,
            witness_status,
            passed,
        })
    }
}
