use alloc::string::String;

use crate::covariance::ModeLabel;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("working point did not converge after {iterations} iterations (last step {last_step:e})")]
    NonConvergence { iterations: usize, last_step: f64 },

    #[error("drive is off the blue sideband by {mismatch:e} rad/s (tolerance {tolerance:e})")]
    OffResonance { mismatch: f64, tolerance: f64 },

    #[error("cavity damping rates differ: kappa1 = {kappa1:e}, kappa2 = {kappa2:e}")]
    AsymmetricDamping { kappa1: f64, kappa2: f64 },

    #[error("net gain G = G1 + G2 - gamma must be positive, got {net_gain:e}")]
    GainNotPositive { net_gain: f64 },

    #[error("degenerate variance {variance:e} in conditional-variance formula")]
    DegenerateVariance { variance: f64 },

    #[error("variance of the measured quadrature is {variance:e}, too small to condition on")]
    ZeroVariance { variance: f64 },

    #[error("integrator step underflow at t = {time:e} (step {step:e})")]
    IntegratorFailure { time: f64, step: f64 },

    #[error("Monte Carlo standard error {achieved:e} exceeds the requested bound {bound:e}")]
    InsufficientTrajectories { achieved: f64, bound: f64 },

    #[error("mode {0:?} is missing from the covariance matrix")]
    MissingModes(ModeLabel),

    #[error("no threshold: {0}")]
    NoThreshold(String),
}
