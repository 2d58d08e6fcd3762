use thiserror::Error;

/// Errors shared across the tensor, network, and pipeline layers.
#[derive(Debug, Error)]
pub enum QpdeError {
    /// Axis extents disagree in a contraction or chain assembly.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Singular spectrum is identically zero; no truncation basis exists.
    #[error("degenerate singular spectrum: {0}")]
    SingularSpectrumDegenerate(String),

    /// Polar factor is not defined on rank-deficient input.
    #[error("polar decomposition of rank-deficient matrix: {0}")]
    PolarDegenerate(String),

    /// Branch weight |a0|^2 is 0 or 1, so the interference signal vanishes.
    #[error("degenerate ancilla branch: |a0|^2 = {0}")]
    DegenerateBranch(f64),

    /// Not enough samples to build the requested pencil matrices.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// No spectral mode survived estimation.
    #[error("no signal: {0}")]
    NoSignal(String),

    /// Problem size exceeds the desk-scale resource bounds.
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// Requested run configuration is invalid.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Dense factorization backend failed to converge.
    #[error("linear algebra backend: {0}")]
    Backend(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QpdeError>;
