use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("unknown letter `{0}`")]
    UnknownLetter(String),

    #[error("Gromov product undefined: {0}")]
    UndefinedProduct(String),

    #[error("cylinder `{cylinder}` too shallow: value not constant, need depth {required}")]
    Ambiguous { cylinder: String, required: usize },

    #[error("visual distance undefined between overlapping cylinders `{0}` and `{1}`")]
    Overlapping(String, String),

    #[error("exponent {alpha} is below the critical exponent {critical}: normalization diverges")]
    DivergentNormalization { alpha: f64, critical: f64 },

    #[error("measure is not conformal for the requested exponent: {0}")]
    NotConformal(String),

    #[error("exact arithmetic unavailable: {0}")]
    Inexact(String),

    #[error("degenerate spike: {0}")]
    DegenerateSpike(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("unsupported closed form: {0}")]
    Unsupported(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
