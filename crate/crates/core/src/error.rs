use thiserror::Error;

/// Errors raised by the model, sampling and fitting routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the region where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set violates its invariants.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no finite critical radius: binding energy {binding_energy} eV is too strong for this cluster model")]
    NoCriticalRadius { binding_energy: f64 },

    /// Case (i)/(ii) window flux is infinite when the source touches the window.
    #[error("flux diverges at contact (g = 0) for {0}")]
    DivergentAtContact(&'static str),

    #[error("model kind {0} has no single limiting angle")]
    UnsupportedKind(&'static str),

    #[error("flux at the normalization point g = {g_norm} mm is zero for {kind}")]
    ZeroNormalization { kind: &'static str, g_norm: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    /// Malformed input data, tagged with the 1-based line of the offending row.
    #[error("line {line}: {message}")]
    Data { line: u64, message: String },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
