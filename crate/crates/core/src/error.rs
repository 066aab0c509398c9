use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate system: {0}")]
    DegenerateSystem(String),

    #[error("non-finite shooting state at u = {u}")]
    NumericOverflow { u: f64 },

    #[error("bracket [{lo}, {hi}] does not contain eigenvalue index {index}")]
    InvalidBracket { lo: f64, hi: f64, index: usize },

    #[error("eigenfunction {index} has {nodes} interior nodes; the spectrum is mis-ordered")]
    MisorderedSpectrum { index: usize, nodes: usize },

    #[error("quadratic fit failed: {0}")]
    Fit(String),

    #[error("packet under-resolved: only {points} grid points within ±3σ (need at least 10)")]
    UnderResolvedPacket { points: usize },

    #[error("incompatible grids: {0}")]
    IncompatibleGrid(String),

    #[error("pattern has {peaks} peaks; at least 3 are needed")]
    InsufficientPattern { peaks: usize },

    #[error("configuration error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
