use thiserror::Error;

use crate::dyadic::DyadicInterval;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A label refinement would exceed [`crate::dyadic::MAX_DEPTH`].
    #[error("label depth {depth} exceeds the supported maximum of {max}")]
    DepthOverflow { depth: u32, max: u32 },

    /// The caller tried to insert a value outside the structure's root label.
    #[error("value {value} lies outside the label {label}")]
    NotContained { value: f64, label: DyadicInterval },

    #[error("capacity of {capacity} elements exceeded")]
    CapacityExceeded { capacity: usize },

    #[error("invalid parameter {name}={value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: String,
        reason: String,
    },

    #[error("value {value} is outside the admissible range {range}")]
    ValueOutOfRange { value: f64, range: &'static str },

    #[error("unknown workload kind `{0}`")]
    UnknownWorkload(String),

    /// A guarantee of the insertion algorithms did not hold. Always a bug.
    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: impl ToString, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            value: value.to_string(),
            reason: reason.into(),
        }
    }
}
