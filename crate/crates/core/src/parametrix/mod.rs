//! Microlocal parametrix for the covariant wave operator with a free connection.

pub mod checks;
pub mod connection;
pub mod operator;
pub mod phase;
pub mod surrogate;

pub use connection::{default_gap, AnnulusCutoff, FreeConnection};
pub use phase::{build_phase, PhaseField, PhaseSpec};
