use thiserror::Error;

/// Errors raised by the geometric kernels, estimators and simulators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cantor depth {0} is not representable (removal length underflows)")]
    UnrepresentableDepth(u32),

    /// Every near-zero displacement value vanished, which points at a
    /// translational symmetry of the set.
    #[error("degenerate exponent fit: {0}")]
    DegenerateFit(String),

    #[error("1/phi is not integrable for this set (verdict: {0})")]
    NotIntegrable(String),

    #[error("displacement value {0} is not a probability")]
    InvalidProbability(f64),

    #[error("statistical test is underpowered: {0}")]
    Underpowered(String),

    #[error("capacity exceeded at step {step}: {components} components (cap {cap})")]
    Capacity {
        step: u64,
        components: usize,
        cap: usize,
        /// Checkpoints that completed before the cap was hit, when produced
        /// by the attractor tracker.
        partial: Option<Box<crate::rds::AttractorReport>>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
