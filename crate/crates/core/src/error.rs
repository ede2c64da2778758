use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScatterError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("did not converge: {0}")]
    Convergence(String),

    #[error("integral diverges: {0}")]
    Divergence(String),

    #[error("ill-conditioned: {0}")]
    Numerical(String),

    /// Mass reached the outer edge of the grid; the run is invalid.
    #[error("edge reflection: {0}")]
    Reflection(String),

    #[error("empty spectral window: {0}")]
    Window(String),

    #[error("too close to a discrete eigenvalue: {0}")]
    ResonanceProximity(String),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, ScatterError>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(ScatterError::Parameter(msg.into()))
}
