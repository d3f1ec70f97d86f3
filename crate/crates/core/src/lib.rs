pub mod chebyshev;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod magnus;
pub mod manifest;
pub mod propagator;

pub use error::{Error, ErrorCode, Result};
pub use propagator::{Config, IntegratorContext, Mode, PropagatorResult, Reduction};
