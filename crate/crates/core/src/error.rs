use thiserror::Error;

/// Errors produced by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {value} outside the domain [0, 1]")]
    Domain { value: f64 },

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("variable `{name}` at position {pos} is not allowed in a {role} expression")]
    IllegalVariable {
        name: String,
        role: &'static str,
        pos: usize,
    },

    #[error("nested INT at position {pos}")]
    NestedIntegral { pos: usize },

    #[error("evaluation failed: {msg} at {point}")]
    Eval { msg: String, point: String },

    #[error("parameter `{name}` must be non-negative, got {value}")]
    NegativeParameter { name: String, value: f64 },

    #[error("declared derivative `{name}` does not match finite differences at t = {t}: expected {fd}, declared {declared}")]
    DerivativeMismatch {
        name: String,
        t: f64,
        fd: f64,
        declared: f64,
    },

    #[error("problem file line {line}: {msg}")]
    ProblemFile { line: usize, msg: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("function is not in the cone: {0}")]
    NotInCone(String),

    #[error("incomplete bounds: no declared value for {0} (enable sampled bounds to estimate it)")]
    IncompleteBounds(String),

    #[error("{path}: {msg}")]
    Io { path: String, msg: String },

    #[error("malformed record line {line}: {msg}")]
    Record { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
