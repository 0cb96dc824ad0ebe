//! Collective EPR steering of a mechanical oscillator by two cavity modes in
//! pulsed optomechanics.
//!
//! The crate is `no_std` (it needs `alloc`) and is organized bottom-up:
//!
//! * [`model`] turns device parameters into the linearized, rotating-frame
//!   three-mode model (working point, effective couplings, gain rates).
//! * [`closedform`] evaluates the analytic output moments, the cavity cross
//!   correlation and the steering parameters.
//! * [`dynamics`] is an independent numeric oracle: it builds the full and
//!   adiabatically reduced linear Langevin models, propagates second moments
//!   through temporal-mode filters and cross-checks everything by Monte Carlo.
//! * [`steering`] computes Reid-type inference variances and steering products
//!   from arbitrary covariance matrices and searches thresholds.
//!
//! Conventions: quadratures `X = (a + a†)/√2`, `P = (a − a†)/(√2 i)`,
//! symmetric ordering, vacuum variance 1/2, all rates in rad/s.

#![no_std]
// `!(x > 0.0)` deliberately rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod closedform;
pub mod covariance;
pub mod dynamics;
mod error;
pub mod model;
pub mod roots;
pub mod steering;

pub use error::{Error, Result};

pub use closedform::MomentSet;
pub use covariance::{ModeLabel, OutputCovariance, Quadrature};
pub use model::{DerivedQuantities, PhysicalParams, ReducedParams, WorkingPoint};
pub use steering::{SteeringReport, ThresholdResult};

/// Which of the two cavity modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cavity {
    One,
    Two,
}

impl Cavity {
    pub const BOTH: [Cavity; 2] = [Cavity::One, Cavity::Two];

    /// Zero-based index (0 for cavity 1).
    pub fn index(self) -> usize {
        match self {
            Cavity::One => 0,
            Cavity::Two => 1,
        }
    }

    /// `(-1)^j` for cavity `j`.
    pub fn parity(self) -> f64 {
        match self {
            Cavity::One => -1.0,
            Cavity::Two => 1.0,
        }
    }

    pub fn other(self) -> Cavity {
        match self {
            Cavity::One => Cavity::Two,
            Cavity::Two => Cavity::One,
        }
    }
}
