use thiserror::Error;

/// Errors produced by parsing, evaluation, chart construction and sampling.
#[derive(Debug, Error)]
pub enum ExprError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("undeclared identifier `{name}` at byte {pos}")]
    Undeclared { pos: usize, name: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("division by near-zero denominator")]
    DivisionNearZero,
    #[error("all {attempts} sampling attempts rejected; last failing guard: `{guard}`")]
    AllSamplesRejected { attempts: usize, guard: String },
    #[error("chart dimension must be even and at least 4, got {0}")]
    BadDimension(usize),
    #[error("duplicate or reserved symbol `{0}`")]
    BadSymbol(String),
    #[error("invalid sampling range for `{name}`: [{min}, {max}]")]
    BadRange { name: String, min: f64, max: f64 },
    #[error("variable index {0} outside chart environment")]
    EnvMismatch(u32),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, ExprError>;
