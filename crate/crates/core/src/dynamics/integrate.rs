//! Adaptive Dormand–Prince 5(4) integration of `y' = f(t, y)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Give up after this many accepted plus rejected steps.
    pub max_steps: usize,
}

impl StepControl {
    pub fn new(tol: f64) -> StepControl {
        StepControl { rtol: tol, atol: tol, max_steps: 2_000_000 }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// Integrate from `t0` to `t1` (`t1 > t0`) and return `y(t1)`.
pub fn dormand_prince<F>(mut f: F, t0: f64, t1: f64, y0: Vec<f64>, ctl: StepControl) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(y0);
    }
    let mut y = y0;
    let mut k: [Vec<f64>; 7] = core::array::from_fn(|_| vec![0.0; n]);
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut t = t0;
    let mut h = span * 1e-3;
    let min_step = span * 1e-13;
    f(t, &y, &mut k[0]);
    for _ in 0..ctl.max_steps {
        if t >= t1 {
            return Ok(y);
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                stage[i] = y[i] + h * acc;
            }
            f(t + C[s] * h, &stage, &mut k[s]);
            if s == 6 {
                y_new.copy_from_slice(&stage);
            }
        }
        let mut err = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            let scale = ctl.atol + ctl.rtol * y[i].abs().max(y_new[i].abs());
            let ratio = h * e / scale;
            err += ratio * ratio;
        }
        let err = libm::sqrt(err / n.max(1) as f64);
        if !err.is_finite() {
            return Err(Error::IntegratorFailure { time: t, step: h });
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            core::mem::swap(&mut y, &mut y_new);
            // first-same-as-last: stage 7 is f at the new point
            k.swap(0, 6);
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < min_step && t < t1 {
            return Err(Error::IntegratorFailure { time: t, step: h });
        }
    }
    Err(Error::IntegratorFailure { time: t, step: h })
}
