//! Command-line drivers for `batchprop`.

pub mod bench;
pub mod converge;
pub mod propagate;
pub mod table1;

use batchprop::{Error, ErrorCode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CAPABILITY: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

/// Process exit status for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err.code() {
        ErrorCode::StepTooLarge => EXIT_CAPABILITY,
        ErrorCode::StateMachine => EXIT_INTERNAL,
        ErrorCode::Shape
        | ErrorCode::Hermiticity
        | ErrorCode::AmplitudeBound
        | ErrorCode::SamplingParity
        | ErrorCode::Config
        | ErrorCode::Domain
        | ErrorCode::Io => EXIT_INPUT,
    }
}
