//! Problem file format.
//!
//! ```text
//! # comment
//! [kernel]
//! name = focal              # or `expr` with k, dk and optional phi, psi
//!
//! [gamma]
//! gamma1 = 1
//! dgamma1 = 0
//! gamma2 = t
//! dgamma2 = 1
//!
//! [functionals]
//! h1 = U(0.25) + DU(0.75)^2
//! h2 = INT(U(s)^3 + DU(s))
//!
//! [nonlinearity]
//! f = exp(t*(u+v))
//!
//! [parameters]
//! lambda = 1/10
//! eta1 = 1/11
//! eta2 = 1/12
//!
//! [bounds]                  # optional; expressions in rho
//! f_upper = exp(2*rho)
//! f_lower = 1
//! H1 = rho + rho^2
//! H2 = rho^3 + rho
//! tau = 3                   # optional linear-growth witness
//! xi1 = 1
//! xi2 = 1
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::bounds::{DeclaredBounds, LinearGrowthWitness};
use crate::error::{Error, Result};
use crate::expr::{Expression, Role};
use crate::kernel::{ExprKernel, FocalKernel, Kernel};

use super::Params;

/// A parsed, not yet validated problem file.
#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub kernel: Arc<dyn Kernel>,
    pub gamma: [Expression; 2],
    pub dgamma: [Expression; 2],
    pub h: [Expression; 2],
    pub f: Expression,
    pub params: Params,
    pub bounds: DeclaredBounds,
    pub witness: Option<LinearGrowthWitness>,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("kernel", &["name", "k", "dk", "phi", "psi"]),
    ("gamma", &["gamma1", "dgamma1", "gamma2", "dgamma2"]),
    ("functionals", &["h1", "h2"]),
    ("nonlinearity", &["f"]),
    ("parameters", &["lambda", "eta1", "eta2"]),
    (
        "bounds",
        &["f_upper", "f_lower", "H1", "H2", "tau", "xi1", "xi2"],
    ),
];

struct Entries {
    map: BTreeMap<(String, String), (usize, String)>,
}

impl Entries {
    fn get(&self, section: &str, key: &str) -> Option<(usize, &str)> {
        self.map
            .get(&(section.to_string(), key.to_string()))
            .map(|(l, v)| (*l, v.as_str()))
    }

    fn required(&self, section: &str, key: &str) -> Result<(usize, &str)> {
        self.get(section, key).ok_or_else(|| Error::ProblemFile {
            line: 0,
            msg: format!("missing `{key}` in [{section}]"),
        })
    }

    fn expr(&self, section: &str, key: &str, role: Role) -> Result<Option<Expression>> {
        self.get(section, key)
            .map(|(line, text)| at_line(line, key, Expression::parse(text, role)))
            .transpose()
    }

    fn required_expr(&self, section: &str, key: &str, role: Role) -> Result<Expression> {
        let (line, text) = self.required(section, key)?;
        at_line(line, key, Expression::parse(text, role))
    }

    fn number(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.expr(section, key, Role::Constant)?
            .map(|e| {
                let line = self.get(section, key).map_or(0, |(l, _)| l);
                at_line(line, key, e.eval_constant())
            })
            .transpose()
    }
}

fn at_line<T>(line: usize, key: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::ProblemFile {
        line,
        msg: format!("`{key}`: {e}"),
    })
}

fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(a, _)| a).trim()
}

fn collect_entries(text: &str) -> Result<Entries> {
    let mut map = BTreeMap::new();
    let mut section: Option<&str> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = strip_comment(raw);
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| Error::ProblemFile {
                line,
                msg: "unterminated section header".into(),
            })?;
            let name = name.trim();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return Err(Error::ProblemFile {
                    line,
                    msg: format!("unknown section [{name}]"),
                });
            }
            section = Some(SECTIONS.iter().find(|(s, _)| *s == name).unwrap().0);
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::ProblemFile {
            line,
            msg: "expected `key = value`".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section.ok_or_else(|| Error::ProblemFile {
            line,
            msg: "entry before any section header".into(),
        })?;
        let keys = SECTIONS.iter().find(|(s, _)| *s == sec).unwrap().1;
        if !keys.contains(&key) {
            return Err(Error::ProblemFile {
                line,
                msg: format!("unknown key `{key}` in [{sec}]"),
            });
        }
        if value.is_empty() {
            return Err(Error::ProblemFile {
                line,
                msg: format!("empty value for `{key}`"),
            });
        }
        if map
            .insert(
                (sec.to_string(), key.to_string()),
                (line, value.to_string()),
            )
            .is_some()
        {
            return Err(Error::ProblemFile {
                line,
                msg: format!("duplicate key `{key}` in [{sec}]"),
            });
        }
    }
    Ok(Entries { map })
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let e = collect_entries(text)?;

        let kernel: Arc<dyn Kernel> = match e.get("kernel", "name") {
            None | Some((_, "focal")) => {
                for key in ["k", "dk", "phi", "psi"] {
                    if let Some((line, _)) = e.get("kernel", key) {
                        return Err(Error::ProblemFile {
                            line,
                            msg: format!("`{key}` requires `name = expr`"),
                        });
                    }
                }
                Arc::new(FocalKernel)
            }
            Some((_, "expr")) => {
                let k = e.required_expr("kernel", "k", Role::Kernel)?;
                let dk = e.required_expr("kernel", "dk", Role::Kernel)?;
                let mut kernel = ExprKernel::new(k, dk)?;
                match (
                    e.expr("kernel", "phi", Role::Kernel)?,
                    e.expr("kernel", "psi", Role::Kernel)?,
                ) {
                    (Some(phi), Some(psi)) => kernel = kernel.with_dominators(phi, psi),
                    (None, None) => {}
                    _ => {
                        return Err(Error::ProblemFile {
                            line: 0,
                            msg: "`phi` and `psi` must be given together".into(),
                        })
                    }
                }
                Arc::new(kernel)
            }
            Some((line, other)) => {
                return Err(Error::ProblemFile {
                    line,
                    msg: format!("unknown kernel `{other}` (expected `focal` or `expr`)"),
                })
            }
        };

        let coefficient = |key| e.required_expr("gamma", key, Role::Coefficient);
        let gamma = [coefficient("gamma1")?, coefficient("gamma2")?];
        let dgamma = [coefficient("dgamma1")?, coefficient("dgamma2")?];
        let h = [
            e.required_expr("functionals", "h1", Role::Functional)?,
            e.required_expr("functionals", "h2", Role::Functional)?,
        ];
        let f = e.required_expr("nonlinearity", "f", Role::Nonlinearity)?;

        let param = |key| -> Result<f64> {
            e.number("parameters", key)?
                .ok_or_else(|| Error::ProblemFile {
                    line: 0,
                    msg: format!("missing `{key}` in [parameters]"),
                })
        };
        let params = Params {
            lambda: param("lambda")?,
            eta1: param("eta1")?,
            eta2: param("eta2")?,
        };

        let bound = |key| e.expr("bounds", key, Role::Bound);
        let bounds = DeclaredBounds {
            f_upper: bound("f_upper")?,
            f_lower: bound("f_lower")?,
            h_upper: [bound("H1")?, bound("H2")?],
        };

        let witness = match (
            e.number("bounds", "tau")?,
            e.number("bounds", "xi1")?,
            e.number("bounds", "xi2")?,
        ) {
            (Some(tau), Some(xi1), Some(xi2)) => Some(LinearGrowthWitness::new(tau, [xi1, xi2])?),
            (None, None, None) => None,
            _ => {
                return Err(Error::ProblemFile {
                    line: 0,
                    msg: "witness needs all of `tau`, `xi1`, `xi2`".into(),
                })
            }
        };

        Ok(Self {
            kernel,
            gamma,
            dgamma,
            h,
            f,
            params,
            bounds,
            witness,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
[gamma]
gamma1 = 1
dgamma1 = 0
gamma2 = t
dgamma2 = 1
[functionals]
h1 = 0
h2 = 0
[nonlinearity]
f = 0
[parameters]
lambda = 0
eta1 = 0
eta2 = 0
";

    fn line_of(text: &str) -> usize {
        match ProblemFile::parse(text) {
            Err(Error::ProblemFile { line, .. }) => line,
            other => panic!("expected problem file error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_file_defaults_to_focal_kernel() {
        let p = ProblemFile::parse(MINIMAL).unwrap();
        assert_eq!(p.kernel.name(), "focal");
        assert!(p.witness.is_none());
        assert!(p.bounds.f_upper.is_none());
    }

    #[test]
    fn errors_point_at_lines() {
        assert_eq!(line_of(&format!("{MINIMAL}[bogus]\n")), 16);
        assert_eq!(line_of(&format!("{MINIMAL}foo = 1\n")), 16);
        assert_eq!(line_of(&format!("{MINIMAL}lambda = 2\n")), 16);
        assert_eq!(line_of(&MINIMAL.replace("f = 0", "f = U(0)")), 11);
        assert_eq!(line_of(&MINIMAL.replace("lambda = 0", "lambda = t")), 13);
        assert_eq!(line_of("x = 1\n"), 1);
        assert_eq!(line_of(&MINIMAL.replace("h2 = 0\n", "")), 0);
    }

    #[test]
    fn expression_kernel_section() {
        let text = format!("[kernel]\nname = expr\nk = t*s\ndk = s\nphi = s\npsi = 1\n{MINIMAL}");
        let p = ProblemFile::parse(&text).unwrap();
        assert!(p.kernel.name().contains("t * s"));
        assert!(p.kernel.dominators(0.5).is_some());
        let text = format!("[kernel]\nname = focal\nk = t\n{MINIMAL}");
        assert_eq!(line_of(&text), 3);
    }

    #[test]
    fn witness_must_be_complete() {
        let text = format!("{MINIMAL}[bounds]\ntau = 3\n");
        assert!(ProblemFile::parse(&text).is_err());
        let text = format!("{MINIMAL}[bounds]\ntau = 3\nxi1 = 1\nxi2 = 1/2\n");
        let w = ProblemFile::parse(&text).unwrap().witness.unwrap();
        assert_eq!(w.xi, [1.0, 0.5]);
    }
}
