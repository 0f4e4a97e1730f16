use thiserror::Error;

/// Errors raised by the library. CLI exit codes are derived from the variant.
#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus {0} is not an odd prime below 2^32")]
    InvalidModulus(u64),

    #[error("elements belong to different fields (q = {0} vs q = {1})")]
    ContextMismatch(u64, u64),

    #[error("division by zero")]
    DivisionByZero,

    #[error("gcd(0, 0) is undefined")]
    GcdOfZeros,

    #[error("zero polynomial is not allowed here")]
    ZeroPolynomial,

    #[error("polynomial must be monic")]
    NotMonic,

    #[error("polynomial must have degree at least 1")]
    ConstantPolynomial,

    #[error("modulus polynomial is not irreducible")]
    NotIrreducible,

    #[error("invalid discriminant: {0}")]
    InvalidCharacter(String),

    #[error("enumeration of {needed} polynomials exceeds the budget of {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("root finder did not converge (max residual {max_residual:e})")]
    NoConvergence { max_residual: f64 },

    #[error("level-crossing scan is inconsistent at level {level}: {detail}")]
    MissedCrossing { level: f64, detail: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
