use thiserror::Error;

/// Errors raised by the size models and distance estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{quantity} must be strictly positive, got {value}")]
    NonPositive { quantity: &'static str, value: f64 },
}

pub(crate) fn require_positive(quantity: &'static str, value: f64) -> Result<f64, ModelError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ModelError::NonPositive { quantity, value })
    }
}

/// Packet-level failures of the VLC codec.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PacketError {
    #[error("packet has {got} bits, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("preamble mismatch")]
    Preamble,
    #[error("crc mismatch: computed {computed:#x}, received {received:#x}")]
    Crc { computed: u8, received: u8 },
    #[error("unknown command code {0:#04x}")]
    UnknownCommand(u16),
    #[error("command code {code:#x} does not fit in {bits} payload bits")]
    PayloadOverflow { code: u16, bits: u8 },
}

/// Burst smoothing failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BurstError {
    #[error("burst delivered {got} of {expected} readings")]
    Short { expected: usize, got: usize },
}

/// Scenario validation and parse failures.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported schema_version {0}")]
    SchemaVersion(u32),
    #[error("field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("event #{index} references unknown actor `{actor}`")]
    UnknownActor { index: usize, actor: String },
    #[error("exactly one signaling modality must be active, found {0}")]
    Modalities(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl ScenarioError {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<serde_json::Error> for ScenarioError {
    fn from(err: serde_json::Error) -> Self {
        ScenarioError::Syntax {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}
