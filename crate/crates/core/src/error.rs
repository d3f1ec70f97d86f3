use std::fmt;

/// Stable error categories surfaced by the library and mapped to exit codes by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    Shape,
    Hermiticity,
    AmplitudeBound,
    SamplingParity,
    StepTooLarge,
    StateMachine,
    Config,
    Domain,
    Io,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Shape => "shape",
            ErrorCode::Hermiticity => "hermiticity",
            ErrorCode::AmplitudeBound => "amplitude-bound",
            ErrorCode::SamplingParity => "sampling-parity",
            ErrorCode::StepTooLarge => "step-too-large",
            ErrorCode::StateMachine => "state-machine",
            ErrorCode::Config => "config",
            ErrorCode::Domain => "domain",
            ErrorCode::Io => "io",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index {index} out of range for batch of {count} matrices")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("matrix `{name}` is not Hermitian (max asymmetry {asymmetry:e}, tolerance {tolerance:e})")]
    NotHermitian {
        name: String,
        asymmetry: f64,
        tolerance: f64,
    },

    #[error("control amplitude {value} at sample {sample}, control {control} lies outside [-1, 1]")]
    AmplitudeBound {
        sample: usize,
        control: usize,
        value: f64,
    },

    #[error("{0}")]
    SamplingParity(String),

    #[error(
        "exponent norm bound {norm:.6} exceeds the {capability:.6} reachable with m_max = {m_max}; \
         reduce the time step by at least a factor {shrink:.3}"
    )]
    StepTooLarge {
        norm: f64,
        capability: f64,
        m_max: usize,
        shrink: f64,
    },

    #[error("context is in state {state}, cannot {action}")]
    StateMachine {
        state: &'static str,
        action: &'static str,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("argument outside supported domain: {0}")]
    Domain(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    pub fn code(&self) -> ErrorCode {
        match self {
            Error::Shape(_) | Error::IndexOutOfRange { .. } => ErrorCode::Shape,
            Error::NotHermitian { .. } => ErrorCode::Hermiticity,
            Error::AmplitudeBound { .. } => ErrorCode::AmplitudeBound,
            Error::SamplingParity(_) => ErrorCode::SamplingParity,
            Error::StepTooLarge { .. } => ErrorCode::StepTooLarge,
            Error::StateMachine { .. } => ErrorCode::StateMachine,
            Error::Config(_) | Error::Parse(_) => ErrorCode::Config,
            Error::Domain(_) => ErrorCode::Domain,
            Error::Io { .. } => ErrorCode::Io,
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
