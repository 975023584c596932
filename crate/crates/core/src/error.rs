use std::fmt;

use thiserror::Error;

/// Which end of the link an error or quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum End {
    Tx,
    Rx,
}

impl fmt::Display for End {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            End::Tx => f.write_str("tx"),
            End::Rx => f.write_str("rx"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{end} is not in front of the surface (local z = {local_z:e})")]
    FrontSideViolation { end: End, local_z: f64 },

    #[error("{end} coincides with element {element}")]
    ZeroDistance { end: End, element: usize },

    #[error("directivity angle undefined: {end} coincides with the surface origin")]
    UndefinedAngle { end: End },

    #[error("tx and rx directions cancel; no bisecting surface normal exists")]
    DegenerateBisector,

    #[error("element amplitude {0} outside [0, 1]")]
    AmplitudeOutOfRange(f64),

    #[error("quadrature under-resolved: {phase_per_interval:.3} rad of phase per interval exceeds pi/2")]
    QuadratureUnderresolved { phase_per_interval: f64 },

    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("configuration has {got} elements, surface has {expected}")]
    ConfigurationLength { expected: usize, got: usize },

    #[error("element index {index} out of range for {count} elements")]
    ElementIndex { index: usize, count: usize },

    #[error("sweep point {index}: {source}")]
    AtSweepPoint { index: usize, source: Box<Error> },

    #[error("non-finite value in {operation} at element {element}")]
    NonFinite { element: usize, operation: &'static str },
}

impl Error {
    /// Innermost error, skipping sweep-point context.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtSweepPoint { source, .. } => source.root(),
            other => other,
        }
    }

    /// Whether the error comes from an invalid transceiver placement.
    pub fn is_scene_violation(&self) -> bool {
        matches!(
            self.root(),
            Error::FrontSideViolation { .. }
                | Error::ZeroDistance { .. }
                | Error::UndefinedAngle { .. }
                | Error::DegenerateBisector
                | Error::NonFinite { .. }
        )
    }

    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
