//! Numerical toolkit for second-order and exponential strong converse bounds
//! on classical-quantum degraded broadcast channels.
//!
//! Everything is dense, finite dimensional and measured in nats.

pub mod entropic;
pub mod error;
pub mod operator;
pub mod random;
pub mod region;
pub mod channel_spec;
pub mod codesim;
pub mod converse;
pub mod semigroup;
pub mod suites;

pub use error::{Error, Result};
