use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a precondition (non-coprime pair, bad chart, arguments
    /// that do not sum to a lattice point, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An argument of `zeta` reduced to within `min_separation` of a lattice
    /// point, where the function has a simple pole.
    #[error("pole proximity: reduced distance {distance:e} is below the guard {min_separation:e}")]
    Pole { distance: f64, min_separation: f64 },

    /// Matrix shapes do not match the chain they are supposed to act on.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A truncation window `(a, b)` outside `0 <= a <= b <= m`.
    #[error("invalid window: {0}")]
    Window(String),

    /// Unparseable textual input (tau strings, rational strings, chart files).
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Short machine-readable kind, used as the `"error"` field of JSON
    /// error objects emitted by the CLI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Pole { .. } => "pole",
            Error::Shape(_) => "shape",
            Error::Window(_) => "window",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
