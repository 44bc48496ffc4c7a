use thiserror::Error;

/// Crate-wide error type. Variants carry enough context to name the offending
/// input without holding references into caller data.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("point outside domain: {constraint}")]
    DomainViolation { constraint: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix conditioning beyond threshold: condition estimate {cond:.3e} > {limit:.1e}")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("kernel `{kernel}` cannot {capability}")]
    Capability {
        kernel: &'static str,
        capability: &'static str,
    },

    #[error("snapshot map has no stored image for the queried source point")]
    UnknownSource,

    #[error("trajectory diverged: |x| exceeded the overflow guard at t = {t:.6}")]
    Divergence { t: f64 },

    #[error("degenerate dictionary: no Gram eigenvalue above the truncation threshold")]
    DegenerateDictionary,

    #[error("pullback pair inconsistent: |phi_inv(phi(y)) - y| = {defect:.3e} at a probe")]
    InconsistentInverse { defect: f64 },

    #[error("relation shape error: {0}")]
    RelationShape(String),

    #[error("expression parse error at byte {pos}: {msg}")]
    ExprParse { pos: usize, msg: String },

    #[error("evaluation failed at atom {index}: {source}")]
    AtomEval {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("quadratic form is negative beyond the clip threshold: {value:.3e}")]
    NegativeForm { value: f64 },

    #[error("eigensolver did not converge")]
    EigenFailure,

    #[error("map is not invertible in closed form")]
    NotInvertible,
}

pub type Result<T> = std::result::Result<T, Error>;
