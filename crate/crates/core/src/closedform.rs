//! Analytic output moments and steering parameters of the reduced model.
//!
//! With the cavities in vacuum and the mirror thermal (`n₀`), the outputs of a
//! pulse of area `r = Gτ` have isotropic single-mode blocks
//! (`ΔX² = ΔP²`) and purely `X–P` correlations with the mirror
//! (`⟨X_m, P_j⟩ = ⟨P_m, X_j⟩`). Steering parameters follow from the moments by
//! the conditional-variance rule; because of that symmetry the product of the
//! two inferred standard deviations equals a single conditional variance.
//!
//! The steering parameters are evaluated in a form with the leading
//! `e^{4r}` terms cancelled analytically and every term scaled by `e^{−2r}`,
//! so they stay accurate (and finite) for arbitrarily long pulses. The
//! direct conditional-variance route is kept on [`MomentSet`] for
//! cross-checking.

use crate::model::DerivedQuantities;
use crate::{Cavity, Error, Result};

/// Below this `r` the removable singularities use their Taylor series.
const SERIES_CROSSOVER: f64 = 1e-4;

/// `u / (eᵘ − 1)`, finite at `u = 0`.
fn u_over_expm1(u: f64) -> f64 {
    if u.abs() < 2.0 * SERIES_CROSSOVER {
        let u2 = u * u;
        1.0 - 0.5 * u + u2 / 12.0 - u2 * u2 / 720.0 + u2 * u2 * u2 / 30240.0
    } else {
        u / libm::expm1(u)
    }
}

/// `(sinh u − u)/u`, accurate for small `u`.
fn sinh_excess_over_u(u: f64) -> f64 {
    if u.abs() < 0.1 {
        let u2 = u * u;
        // u^2/3! + u^4/5! + u^6/7! + u^8/9! + u^10/11!
        u2 / 6.0 * (1.0 + u2 / 20.0 * (1.0 + u2 / 42.0 * (1.0 + u2 / 72.0 * (1.0 + u2 / 110.0))))
    } else {
        libm::sinh(u) / u - 1.0
    }
}

/// Pulse-area dependent building blocks shared by all formulas.
#[derive(Debug, Clone, Copy)]
struct Pulse {
    r: f64,
    /// `e^{2r}`
    x: f64,
    /// `e^{2r} − 1`
    y: f64,
    /// `e^{−2r}`
    inv_x: f64,
    /// `1 − e^{−2r}`
    w: f64,
    /// `2r/(e^{2r} − 1)`
    k: f64,
    /// `2r e^{2r}/(e^{2r} − 1)`
    m: f64,
}

impl Pulse {
    fn new(r: f64) -> Pulse {
        let k = u_over_expm1(2.0 * r);
        Pulse {
            r,
            x: libm::exp(2.0 * r),
            y: libm::expm1(2.0 * r),
            inv_x: libm::exp(-2.0 * r),
            w: -libm::expm1(-2.0 * r),
            k,
            m: k + 2.0 * r,
        }
    }
}

/// Noise and loss coefficients: `a = n₀ + 1`, `b = (γ/G)(n + 1)`, `h = ½ + b`.
#[derive(Debug, Clone, Copy)]
struct Noise {
    n0: f64,
    g: f64,
    a: f64,
    b: f64,
    h: f64,
}

fn check(dq: &DerivedQuantities, n0: f64, n: f64) -> Result<(Pulse, Noise)> {
    if !(dq.net_gain > 0.0) {
        return Err(Error::GainNotPositive { net_gain: dq.net_gain });
    }
    let r = dq.squeezing;
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidParams(alloc::format!("squeezing parameter must be >= 0, got {r}")));
    }
    if !(n0 >= 0.0 && n >= 0.0 && n0.is_finite() && n.is_finite()) {
        return Err(Error::InvalidParams(alloc::format!("occupations must be >= 0, got n0 = {n0}, n = {n}")));
    }
    let g = dq.gamma_over_gain();
    let b = g * (n + 1.0);
    Ok((Pulse::new(r), Noise { n0, g, a: n0 + 1.0, b, h: 0.5 + b }))
}

/// Second moments of the output modes.
///
/// `P` variances equal the `X` variances and `⟨P_m, X_j⟩ = ⟨X_m, P_j⟩`;
/// only one of each pair is stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub var_xm_out: f64,
    pub var_x1_out: f64,
    pub var_x2_out: f64,
    pub var_xw_out: f64,
    pub cov_xm_p1: f64,
    pub cov_xm_p2: f64,
    pub cov_xm_pw: f64,
}

impl MomentSet {
    pub fn var_x_out(&self, c: Cavity) -> f64 {
        match c {
            Cavity::One => self.var_x1_out,
            Cavity::Two => self.var_x2_out,
        }
    }

    pub fn cov_xm_p(&self, c: Cavity) -> f64 {
        match c {
            Cavity::One => self.cov_xm_p1,
            Cavity::Two => self.cov_xm_p2,
        }
    }

    /// `ΔX_m² − ⟨X_m, P_W⟩²/ΔP_W²`, evaluated directly from the moments.
    pub fn collective_conditional_variance(&self) -> Result<f64> {
        conditional(self.var_xm_out, self.cov_xm_pw, self.var_xw_out)
    }

    /// `ΔX_m² − ⟨X_m, P_j⟩²/ΔP_j²`, evaluated directly from the moments.
    pub fn single_conditional_variance(&self, c: Cavity) -> Result<f64> {
        conditional(self.var_xm_out, self.cov_xm_p(c), self.var_x_out(c))
    }
}

fn conditional(var: f64, cov: f64, var_party: f64) -> Result<f64> {
    if !(var_party > 0.0) {
        return Err(Error::DegenerateVariance { variance: var_party });
    }
    Ok(var - cov * cov / var_party)
}

pub fn moment_set(dq: &DerivedQuantities, n0: f64, n: f64) -> Result<MomentSet> {
    let (p, z) = check(dq, n0, n)?;
    let Noise { g, a, b, h, .. } = z;
    let var_xm_out = a * p.x + b * p.y - 0.5;
    let var_xj = |rho: f64| 0.5 + rho * (a * p.y + b * (p.y - 2.0 * (p.m - 1.0)));
    let e_r = libm::exp(p.r);
    let sqrt_y = libm::sqrt(p.y);
    let cov_xm_pj = |rho: f64| -libm::sqrt(rho) * sqrt_y * e_r * (a + b * (1.0 - p.k));
    let var_xw_out = (1.0 + g) * (1.0 + g) * ((a + b) * p.x - (z.n0 + 0.5)) + g * h * (g - 2.0 * (1.0 + g) * p.m);
    // 2r e^r / sqrt(e^{2r} - 1) = e^r sqrt(2r k)
    let cov_xm_pw = e_r * (-(1.0 + g) * sqrt_y * (a + b) + g * h * libm::sqrt(2.0 * p.r * p.k));
    let rho1 = dq.gain1 / dq.net_gain;
    let rho2 = dq.gain2 / dq.net_gain;
    Ok(MomentSet {
        var_xm_out,
        var_x1_out: var_xj(rho1),
        var_x2_out: var_xj(rho2),
        var_xw_out,
        cov_xm_p1: cov_xm_pj(rho1),
        cov_xm_p2: cov_xm_pj(rho2),
        cov_xm_pw,
    })
}

/// `|⟨A₁^out† A₂^out⟩|`, the mutual coherence of the two output cavity modes.
pub fn cross_correlation(dq: &DerivedQuantities, n0: f64, n: f64) -> Result<f64> {
    let (p, z) = check(dq, n0, n)?;
    let weight = libm::sqrt(dq.gain1 * dq.gain2) / dq.net_gain;
    // e^{2r}(sinh 2r - 2r)/(e^{2r} - 1) = m (sinh 2r - 2r)/(2r)
    let damping = 2.0 * z.b * sinh_excess_over_u(2.0 * p.r) * p.m;
    Ok(weight * (z.a * p.y + damping))
}

/// Collective steering parameter `E_{m|W}` of the mirror by the symmetric
/// cavity mode.
pub fn steering_collective(dq: &DerivedQuantities, n0: f64, n: f64) -> Result<f64> {
    let (p, z) = check(dq, n0, n)?;
    let Noise { n0, g, a, b, h } = z;
    let g2 = g * g;
    let two_n0_1 = 2.0 * n0 + 1.0;
    // r^2 / w = r m / 2
    let tail =
        4.0 * g2 * h * p.r * p.m + 2.0 * g * (1.0 + g) * two_n0_1 * p.m - two_n0_1 * (1.0 + 2.0 * g) - 2.0 * g2 * n0;
    let numerator = 0.5 * h * (2.0 * g2 * b * p.w + 2.0 * g2 * a - tail * p.inv_x);
    let var_w =
        (1.0 + g) * (1.0 + g) * ((a + b) - (n0 + 0.5) * p.inv_x) + g * h * (g - 2.0 * (1.0 + g) * p.m) * p.inv_x;
    if !(var_w > 0.0) {
        return Err(Error::DegenerateVariance { variance: var_w });
    }
    Ok(numerator / var_w)
}

/// Bipartite steering parameter `E_{m|j}` of the mirror by cavity `j` alone.
pub fn steering_single(dq: &DerivedQuantities, n0: f64, n: f64, j: Cavity) -> Result<f64> {
    let (p, z) = check(dq, n0, n)?;
    let Noise { n0, a, b, .. } = z;
    let rho = dq.gain(j) / dq.net_gain;
    let lead = b * b * rho + b * rho * (n0 + 0.5) + 0.5 * b + 0.5 * (1.0 - rho) * a;
    let tail = b * b * rho * (p.m * p.m * p.w + 1.0) + b * rho * p.m * (2.0 * n0 + 1.0) - b * rho * (n0 + 0.5)
        + 0.5 * b
        - 0.5 * a * rho
        + 0.25;
    let numerator = lead - tail * p.inv_x;
    let var_j = 0.5 * p.inv_x + rho * (a * p.w + b * (1.0 + p.inv_x - 2.0 * p.m * p.inv_x));
    if !(var_j > 0.0) {
        return Err(Error::DegenerateVariance { variance: var_j });
    }
    Ok(numerator / var_j)
}

/// Minimal pulse area for collective steering of a mirror with initial
/// occupation `n₀` in the undamped limit, `½ ln[(2n₀ + 1)/(n₀ + 1)]`.
pub fn threshold_r(n0: f64) -> f64 {
    0.5 * libm::log1p(n0 / (n0 + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Design;
    use core::f64::consts::E;
    use proptest::prelude::*;

    fn dq(r: f64, gamma_over_gain: f64, gain_ratio: f64) -> DerivedQuantities {
        Design::new(r, gamma_over_gain, gain_ratio, 0.0, 0.0).derived().unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn zero_pulse_area_leaves_inputs_untouched() {
        for (n0, n) in [(0.0, 0.0), (2.5, 40.0)] {
            let d = dq(1.0, 0.1, 1.0).with_squeezing(0.0);
            let m = moment_set(&d, n0, n).unwrap();
            assert!((m.var_xm_out - (n0 + 0.5)).abs() < 1e-12);
            assert!((m.var_x1_out - 0.5).abs() < 1e-12);
            assert!(m.cov_xm_pw.abs() < 1e-12);
            assert_eq!(cross_correlation(&d, n0, n).unwrap(), 0.0);
            assert!((steering_collective(&d, n0, n).unwrap() - (n0 + 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn undamped_moments_at_unit_pulse_area() {
        // frozen from the reduced-model moment propagation
        let m = moment_set(&dq(1.0, 0.0, 1.0), 0.0, 0.0).unwrap();
        assert!(rel(m.var_xm_out, 6.889_056_098_930_313) < 1e-12);
        assert!(rel(m.var_x1_out, 3.694_528_049_464_934) < 1e-12);
        assert!(rel(m.cov_xm_pw, -6.870_887_419_701_034) < 1e-12);
        assert!(rel(m.cov_xm_pw, -E * libm::sqrt(E * E - 1.0)) < 1e-14);
    }

    #[test]
    fn damped_moments_match_oracle_values() {
        // G1 = G2 = 1, gamma = 0.2, frozen from moment propagation
        let d = Design::new(1.0, 0.2 / 1.8, 1.0, 0.0, 0.0).derived().unwrap();
        let m = moment_set(&d, 0.0, 0.0).unwrap();
        assert!(rel(m.var_xm_out, 7.598_951_221_033_742) < 1e-10);
        assert!(rel(m.var_x1_out, 4.281_758_667_796_375) < 1e-10);
        assert!(rel(m.var_xw_out, 9.177_122_383_436_302) < 1e-10);
        assert!(rel(m.cov_xm_p1, -5.512_159_659_830_531) < 1e-10);
        assert!(rel(m.cov_xm_pw, -8.336_533_035_089_902) < 1e-10);
    }

    #[test]
    fn cross_correlation_values() {
        let c = cross_correlation(&dq(1.0, 0.0, 1.0), 0.0, 0.0).unwrap();
        assert!(rel(c, 0.5 * (E * E - 1.0)) < 1e-14);
        assert!(rel(c, 3.19453) < 1e-5);
        let damped = Design::new(1.0, 0.2 / 1.8, 1.0, 0.0, 0.0).derived().unwrap();
        let c = cross_correlation(&damped, 0.0, 0.0).unwrap();
        assert!(rel(c, 3.781_758_667_796_375_5) < 1e-10);
    }

    #[test]
    fn damping_increases_coherence() {
        for r in [0.1, 0.5, 1.0, 2.0] {
            let undamped = cross_correlation(&dq(r, 0.0, 1.0), 0.0, 0.0).unwrap();
            let damped = cross_correlation(&dq(r, 0.05, 1.0), 0.0, 0.0).unwrap();
            assert!(damped > undamped);
        }
    }

    #[test]
    fn collective_steering_values() {
        let e = steering_collective(&dq(1.0, 0.0, 1.0), 0.0, 0.0).unwrap();
        assert!(rel(e, 1.0 / (2.0 * (2.0 * E * E - 1.0))) < 1e-13);
        assert!(rel(e, 0.036_290) < 2e-5);
        let e = steering_collective(&dq(1.0, 0.0, 1.0), 5.0, 0.0).unwrap();
        assert!(rel(e, 5.5 / (12.0 * (E * E - 1.0) + 1.0)) < 1e-13);
        assert!(rel(e, 0.070_815) < 2e-5);
    }

    #[test]
    fn equal_gains_forbid_bipartite_steering() {
        for r in [0.01, 0.3, 1.0, 4.0, 15.0] {
            for j in Cavity::BOTH {
                let e = steering_single(&dq(r, 0.0, 1.0), 0.0, 0.0, j).unwrap();
                assert!((e - 0.5).abs() < 1e-13, "r = {r}: {e}");
            }
        }
    }

    #[test]
    fn uncoupled_cavity_cannot_steer() {
        // G1 = 0: E = 1/2 + (n0 + 1)(e^{2r} - 1) + n0
        let d = DerivedQuantities {
            gain1: 0.0,
            gain2: 1.0,
            net_gain: 1.0,
            gamma: 0.0,
            shift: 0.0,
            phase: core::f64::consts::FRAC_PI_4,
            squeezing: 0.7,
            tau: 0.7,
        };
        let n0 = 1.5;
        let e = steering_single(&d, n0, 0.0, Cavity::One).unwrap();
        let expected = 0.5 + (n0 + 1.0) * libm::expm1(1.4) + n0;
        assert!(rel(e, expected) < 1e-13);
    }

    #[test]
    fn unequal_gains_allow_bipartite_steering() {
        // frozen from reduced-model propagation with g1 = sqrt(2) g2
        let e = steering_single(&dq(1.0, 0.0, 2.0), 0.0, 0.0, Cavity::One).unwrap();
        assert!(rel(e, 0.276_263_976_273_867) < 1e-12);
        let y = E * E - 1.0;
        assert!(rel(e, 0.5 - (y / 3.0) / (4.0 * y / 3.0 + 1.0)) < 1e-13);
        let other = steering_single(&dq(1.0, 0.0, 2.0), 0.0, 0.0, Cavity::Two).unwrap();
        assert!(other > 0.5);
    }

    #[test]
    fn threshold_values() {
        assert_eq!(threshold_r(0.0), 0.0);
        assert!((threshold_r(1e6) - core::f64::consts::LN_2 / 2.0).abs() < 1e-6);
        // bisection oracle on E - 1/2 in the undamped limit
        let f = |r: f64| steering_collective(&dq(r.max(1e-12), 0.0, 1.0), 5.0, 0.0).unwrap() - 0.5;
        let (mut lo, mut hi) = (1e-6, 2.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((threshold_r(5.0) - 0.5 * (lo + hi)).abs() < 1e-12);
        assert!((threshold_r(5.0) - 0.5 * libm::log(11.0 / 6.0)).abs() < 1e-15);
    }

    #[test]
    fn threshold_is_where_collective_steering_starts() {
        for n0 in [0.5, 5.0, 50.0] {
            let e = steering_collective(&dq(threshold_r(n0), 0.0, 1.0), n0, 0.0).unwrap();
            assert!((e - 0.5).abs() < 1e-9, "n0 = {n0}: {e}");
        }
    }

    #[test]
    fn long_pulses_stay_finite() {
        let e = steering_collective(&dq(400.0, 0.1, 1.0), 0.0, 100.0).unwrap();
        assert!(e.is_finite());
        // asymptote h g^2 / (1 + g)^2
        let g: f64 = 0.1;
        let h = 0.5 + g * 101.0;
        assert!(rel(e, h * g * g / ((1.0 + g) * (1.0 + g))) < 1e-12);
        let s = steering_single(&dq(400.0, 0.1, 2.0), 0.0, 100.0, Cavity::One).unwrap();
        assert!(s.is_finite());
    }

    #[test]
    fn series_and_direct_agree_at_crossover() {
        let below = u_over_expm1(2.0 * SERIES_CROSSOVER * (1.0 - 1e-9));
        let above = u_over_expm1(2.0 * SERIES_CROSSOVER * (1.0 + 1e-9));
        assert!((below - above).abs() < 1e-10);
        for r in [SERIES_CROSSOVER * 0.999_999, SERIES_CROSSOVER * 1.000_001] {
            let d = dq(r, 0.1, 1.0);
            let m = moment_set(&d, 1.0, 10.0).unwrap();
            let c = m.collective_conditional_variance().unwrap();
            assert!((steering_collective(&d, 1.0, 10.0).unwrap() - c).abs() < 1e-10);
        }
        assert!((sinh_excess_over_u(0.1 - 1e-12) - sinh_excess_over_u(0.1 + 1e-12)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn undamped_collective_identity(r in 0.0f64..6.0, n0 in 0.0f64..200.0) {
            let e = steering_collective(&dq(r, 0.0, 1.0), n0, 0.0).unwrap();
            let expected = (n0 + 0.5) / (2.0 * (n0 + 1.0) * libm::expm1(2.0 * r) + 1.0);
            prop_assert!(rel(e, expected) < 1e-12);
        }

        #[test]
        fn stable_forms_match_conditional_variance(
            r in 0.01f64..3.0, g in 0.0f64..2.0, ratio in 0.1f64..10.0,
            n0 in 0.0f64..20.0, n in 0.0f64..200.0,
        ) {
            let d = dq(r, g, ratio);
            let m = moment_set(&d, n0, n).unwrap();
            let scale = m.var_xm_out;
            let direct = m.collective_conditional_variance().unwrap();
            let stable = steering_collective(&d, n0, n).unwrap();
            prop_assert!((direct - stable).abs() < 1e-10 * scale.max(1.0));
            for j in Cavity::BOTH {
                let direct = m.single_conditional_variance(j).unwrap();
                let stable = steering_single(&d, n0, n, j).unwrap();
                prop_assert!((direct - stable).abs() < 1e-10 * scale.max(1.0));
            }
        }

        #[test]
        fn undamped_collective_is_decreasing(r in 0.0f64..8.0, dr in 1e-3f64..1.0, n0 in 0.0f64..50.0) {
            let a = steering_collective(&dq(r, 0.0, 1.0), n0, 0.0).unwrap();
            let b = steering_collective(&dq(r + dr, 0.0, 1.0), n0, 0.0).unwrap();
            prop_assert!(b < a);
        }

        #[test]
        fn single_steering_swap_symmetry(r in 0.01f64..5.0, g in 0.0f64..1.0, ratio in 0.1f64..10.0, n0 in 0.0f64..5.0, n in 0.0f64..50.0) {
            let a = steering_single(&dq(r, g, ratio), n0, n, Cavity::One).unwrap();
            let b = steering_single(&dq(r, g, 1.0 / ratio), n0, n, Cavity::Two).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn variances_grow_with_noise(r in 0.01f64..4.0, g in 0.0f64..1.0, n0 in 0.0f64..20.0, n in 0.0f64..200.0, dn in 0.0f64..10.0) {
            let d = dq(r, g, 1.5);
            let base = moment_set(&d, n0, n).unwrap();
            for bumped in [moment_set(&d, n0 + dn, n).unwrap(), moment_set(&d, n0, n + dn).unwrap()] {
                prop_assert!(bumped.var_xm_out >= base.var_xm_out);
                prop_assert!(bumped.var_x1_out >= base.var_x1_out);
                prop_assert!(bumped.var_x2_out >= base.var_x2_out);
                prop_assert!(bumped.var_xw_out >= base.var_xw_out);
            }
            prop_assert!(base.var_xm_out >= 0.5);
        }
    }
}
