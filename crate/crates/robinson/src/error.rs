use thiserror::Error;

#[derive(Debug, Error)]
pub enum RobinsonError {
    #[error(transparent)]
    Expr(#[from] fieldexpr::ExprError),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("coframe is ill-conditioned at a sample (cond {cond:.3e} exceeds {limit:.1e})")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("metric has wrong signature at a sample: {negative} negative eigenvalues out of {dim}")]
    Signature { negative: usize, dim: usize },

    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, RobinsonError>;
