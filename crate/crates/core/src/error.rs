use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite result while computing {0}")]
    Overflow(&'static str),

    /// The diffusivity (and everything derived from it) is undefined on the interface.
    #[error("quantity evaluated at the interface point x = {0}")]
    InvalidPoint(f64),

    #[error("domain error: {0}")]
    Domain(String),

    /// An adaptive procedure ran out of budget before reaching the requested tolerance.
    #[error("{what}: achieved tolerance {achieved:.3e} (requested {requested:.3e})")]
    Accuracy {
        what: &'static str,
        achieved: f64,
        requested: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Accuracy { .. } | Error::Numerical(_) | Error::Overflow(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
