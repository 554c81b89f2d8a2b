//! Random double rotations on the circle and the torus.
//!
//! Exact displacement functions decide whether `1/φ_A` is integrable. The
//! seeded simulators then measure synchronization or the stationary law of
//! the difference chain.

pub mod analysis;
pub mod diffchain;
pub mod displacement;
pub mod error;
pub mod rds;
pub mod sets;
pub mod stats;
pub mod torus;

pub use error::{Error, Result};
