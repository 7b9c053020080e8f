//! Crate-wide error type.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A latent vector violates its box bounds.
    #[error("bounds violation: {0}")]
    Bounds(String),

    /// Invalid configuration (counts, rates, infeasible boxes, ...).
    #[error("config error: {0}")]
    Config(String),

    /// Degenerate or inconsistent geometry (open contour, inverted
    /// triangle, self-intersection, ...).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A linear system could not be solved (singular influence matrix,
    /// coincident RBF controls, ...).
    #[error("singular system: {0}")]
    Singular(String),

    /// Under-constrained stiffness matrix or other constraint defects.
    #[error("constraint error: {0}")]
    Constraint(String),

    /// Tensor/feature dimension mismatch.
    #[error("shape error: {0}")]
    Shape(String),

    /// Too few samples for the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    /// Kernel matrix not positive definite after jitter escalation.
    #[error("conditioning error: {0}")]
    Conditioning(String),

    /// Truncated or malformed model/dataset file.
    #[error("corrupt file: {0}")]
    CorruptFile(String),

    /// Model file written by an incompatible format version.
    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
