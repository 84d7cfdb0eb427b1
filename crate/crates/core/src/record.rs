//! Line-oriented `key = value` records.
//!
//! ```text
//! record = existence
//! r = 0.05
//! R = 1
//! verdict = certified
//!
//! record = nonexistence
//! ...
//! ```
//!
//! Each record starts with a `record = <kind>` line; records are separated by
//! blank lines; lines starting with `#` are comments. Floating-point values
//! are written in the shortest form that parses back to the same `f64`.

use std::fmt::{self, Display};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    kind: String,
    fields: Vec<(String, String)>,
}

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && k.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

impl Record {
    pub fn new(kind: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            fields: Vec::new(),
        }
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    pub fn fields(&self) -> &[(String, String)] {
        &self.fields
    }

    /// Appends a field. Keys are `[A-Za-z0-9_.]+`; values are single-line.
    pub fn push(&mut self, key: &str, value: impl Display) -> &mut Self {
        debug_assert!(valid_key(key) && key != "record", "bad key {key}");
        let v = value.to_string().replace(['\n', '\r'], " ");
        self.fields.push((key.to_string(), v.trim().to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Record {
            line: 0,
            msg: format!("`{}` record has no `{key}`", self.kind),
        })
    }

    pub fn parse_field<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.require(key)?;
        raw.parse().map_err(|_| Error::Record {
            line: 0,
            msg: format!("cannot parse `{key} = {raw}`"),
        })
    }

    /// Optional field; the literal `none` means absent.
    pub fn parse_optional<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None | Some("none") => Ok(None),
            Some(_) => self.parse_field(key).map(Some),
        }
    }

    pub fn parse_all(text: &str) -> Result<Vec<Record>> {
        let mut out: Vec<Record> = Vec::new();
        let mut open = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                open = false;
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Record {
                line: i + 1,
                msg: "expected `key = value`".into(),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if !valid_key(k) {
                return Err(Error::Record {
                    line: i + 1,
                    msg: format!("invalid key `{k}`"),
                });
            }
            if k == "record" {
                out.push(Record::new(v));
                open = true;
            } else if open {
                out.last_mut()
                    .expect("open record")
                    .fields
                    .push((k.into(), v.into()));
            } else {
                return Err(Error::Record {
                    line: i + 1,
                    msg: "field outside of a record".into(),
                });
            }
        }
        Ok(out)
    }
}

impl Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "record = {}", self.kind)?;
        for (k, v) in &self.fields {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// Writes several records separated by blank lines.
pub fn write_records(records: &[Record]) -> String {
    records
        .iter()
        .map(Record::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}

/// Types with a record form that reads back to an equal value.
pub trait ToRecord: Sized {
    fn to_record(&self) -> Record;
    fn from_record(record: &Record) -> Result<Self>;
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn multiple_records() {
        let mut a = Record::new("alpha");
        a.push("x", 0.1).push("name", "two words");
        let mut b = Record::new("beta");
        b.push("y", f64::INFINITY);
        let text = write_records(&[a.clone(), b.clone()]);
        assert_eq!(Record::parse_all(&text).unwrap(), vec![a, b]);
    }

    #[test]
    fn malformed_input() {
        assert!(matches!(
            Record::parse_all("x = 1\n"),
            Err(Error::Record { line: 1, .. })
        ));
        assert!(Record::parse_all("record = a\nnot a field\n").is_err());
        assert!(Record::parse_all("record = a\nbad key = 1\n").is_err());
    }

    proptest! {
        #[test]
        fn floats_round_trip(xs in proptest::collection::vec(any::<f64>(), 1..20)) {
            let mut r = Record::new("floats");
            for (i, x) in xs.iter().enumerate() {
                r.push(&format!("x{i}"), x);
            }
            let back = &Record::parse_all(&r.to_string()).unwrap()[0];
            for (i, x) in xs.iter().enumerate() {
                let y: f64 = back.parse_field(&format!("x{i}")).unwrap();
                prop_assert!(y == *x || (y.is_nan() && x.is_nan()));
            }
        }
    }
}
