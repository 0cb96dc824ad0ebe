//! Scalar bracketing and minimization.

use crate::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Returns the final bracket `(lo, hi)` with `hi − lo ≤ tol`, keeping the
/// sign of `f(lo)` on the left end.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)> {
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok((lo, lo));
    }
    if f_hi == 0.0 {
        return Ok((hi, hi));
    }
    if (f_lo < 0.0) == (f_hi < 0.0) {
        return Err(Error::InvalidParams(alloc::format!("no sign change on [{lo}, {hi}]: f = {f_lo}, {f_hi}")));
    }
    let left_negative = f_lo < 0.0;
    // 2^-200 of any finite bracket is below f64 resolution
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok((mid, mid));
        }
        if (fm < 0.0) == left_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Golden-section search for a minimum of a unimodal `f` on `[a, b]`.
/// Returns `(x, f(x))`.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // the interior probes can beat the midpoint on flat tails
    [(x, fx), (c, fc), (d, fd)].into_iter().fold((x, fx), |best, p| if p.1 < best.1 { p } else { best })
}

/// Minimize over a coarse grid, then refine between the neighbours of the
/// best grid point with golden-section search.
pub fn grid_refine_min<F: FnMut(f64) -> f64>(mut f: F, grid: &[f64], tol: f64) -> (f64, f64) {
    assert!(!grid.is_empty(), "empty search grid");
    let (mut best, mut best_val) = (0, f64::INFINITY);
    for (i, &x) in grid.iter().enumerate() {
        let v = f(x);
        if v < best_val {
            best = i;
            best_val = v;
        }
    }
    if grid.len() == 1 {
        return (grid[0], best_val);
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let refined = golden_section_min(&mut f, lo, hi, tol);
    if refined.1 < best_val {
        refined
    } else {
        (grid[best], best_val)
    }
}
