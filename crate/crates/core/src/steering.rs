//! Reid-type steering witnesses and threshold searches.
//!
//! Mode `i` is steered by party `j` when the product of the inferred
//! standard deviations of two conjugate quadratures of `i`, each estimated
//! linearly from a measurement on `j`, falls below the uncertainty bound:
//! `E_{i|j} = Δ_inf X_i · Δ_inf P_i < ½`. The best linear gain is analytic,
//! `u = −⟨X_i, O_j⟩/Δ²O_j`, which leaves the conditional variance.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;

use crate::closedform::steering_collective;
use crate::covariance::{ModeLabel, OutputCovariance, Quadrature};
use crate::model::{derived_quantities, DerivedQuantities, Design};
use crate::roots::{bisect, golden_section_min};
use crate::{Error, Result};

/// Below this the measured quadrature carries no usable information.
pub const MIN_PARTY_VARIANCE: f64 = 1e-15;

/// Steering bound on the inferred-deviation product.
pub const STEERING_BOUND: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferredVariance {
    /// `Var(steered) − Cov²/Var(party)`.
    pub variance: f64,
    /// Minimizing gain `u = −Cov/Var(party)`.
    pub gain: f64,
}

/// Minimum over `u` of `Var(steered + u·party)`.
pub fn inferred_variance(oc: &OutputCovariance, steered: Quadrature, party: Quadrature) -> Result<InferredVariance> {
    let var_party = oc.variance(party)?;
    if !(var_party >= MIN_PARTY_VARIANCE) {
        return Err(Error::ZeroVariance { variance: var_party });
    }
    let cov = oc.covariance(steered, party)?;
    let var = oc.variance(steered)?;
    Ok(InferredVariance { variance: var - cov * cov / var_party, gain: -cov / var_party })
}

/// `Var(q) − cᵀS⁻¹c`, the inference from the best linear combination of both
/// quadratures of `party`.
pub fn optimal_inferred_variance(oc: &OutputCovariance, steered: Quadrature, party: ModeLabel) -> Result<f64> {
    let s = oc.mode_block(party)?;
    let c = nalgebra::Vector2::new(
        oc.covariance(steered, Quadrature::x(party))?,
        oc.covariance(steered, Quadrature::p(party))?,
    );
    let det = s.determinant();
    if !(det >= MIN_PARTY_VARIANCE * MIN_PARTY_VARIANCE) {
        return Err(Error::ZeroVariance { variance: det });
    }
    let inv = s.try_inverse().ok_or(Error::ZeroVariance { variance: det })?;
    Ok(oc.variance(steered)? - c.dot(&(inv * c)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringReport {
    /// `E = Δ_inf X · Δ_inf P` (product of standard deviations).
    pub value: f64,
    pub steered: ModeLabel,
    pub party: ModeLabel,
    /// Gains applied to the party observables for the two inferences.
    pub gain_x: f64,
    pub gain_p: f64,
    /// Angle `θ` of the steered pair `(X_θ, X_{θ+π/2})`.
    pub angle_steered: f64,
    /// Party quadrature angles used to infer `X_θ` and `X_{θ+π/2}`.
    pub angle_party_x: f64,
    pub angle_party_p: f64,
    /// `value < ½`; exactly ½ counts as no steering.
    pub is_steering: bool,
}

fn report(
    oc: &OutputCovariance,
    steered: ModeLabel,
    party: ModeLabel,
    theta: f64,
    psi_x: f64,
    psi_p: f64,
) -> Result<SteeringReport> {
    let ix = inferred_variance(oc, Quadrature::at(steered, theta), Quadrature::at(party, psi_x))?;
    let ip = inferred_variance(oc, Quadrature::at(steered, theta + FRAC_PI_2), Quadrature::at(party, psi_p))?;
    let value = libm::sqrt(ix.variance.max(0.0)) * libm::sqrt(ip.variance.max(0.0));
    Ok(SteeringReport {
        value,
        steered,
        party,
        gain_x: ix.gain,
        gain_p: ip.gain,
        angle_steered: theta,
        angle_party_x: psi_x,
        angle_party_p: psi_p,
        is_steering: value < STEERING_BOUND,
    })
}

const ANGLE_GRID: usize = 64;
const ANGLE_TOL: f64 = 1e-10;

/// Minimum of a `period`-periodic function: 64-point scan, then golden
/// section between the neighbours of the best point.
fn periodic_min<F: FnMut(f64) -> f64>(mut f: F, period: f64) -> (f64, f64) {
    let step = period / ANGLE_GRID as f64;
    let (mut best, mut best_val) = (0.0, f64::INFINITY);
    for k in 0..ANGLE_GRID {
        let x = k as f64 * step;
        let v = f(x);
        if v < best_val {
            best = x;
            best_val = v;
        }
    }
    let (x, v) = golden_section_min(&mut f, best - step, best + step, ANGLE_TOL);
    if v < best_val {
        (x - period * libm::floor(x / period), v)
    } else {
        (best, best_val)
    }
}

/// Steering of `steered` by `party`.
///
/// With `optimize_angles == false` the quadratures are `X_i` inferred from
/// `P_j` and `P_i` from `X_j`. Otherwise the steered angle and both party
/// angles are optimized; the party optimization over angles with the optimal
/// gain covers every linear estimate.
pub fn steering_product(
    oc: &OutputCovariance,
    steered: ModeLabel,
    party: ModeLabel,
    optimize_angles: bool,
) -> Result<SteeringReport> {
    if !optimize_angles {
        return report(oc, steered, party, 0.0, FRAC_PI_2, 0.0);
    }
    // surface missing modes and degenerate parties as errors up front
    report(oc, steered, party, 0.0, FRAC_PI_2, 0.0)?;
    let best_party = |theta: f64| -> (f64, f64, f64) {
        let infer = |q: Quadrature| {
            periodic_min(
                |psi| match inferred_variance(oc, q, Quadrature::at(party, psi)) {
                    Ok(v) => v.variance,
                    Err(_) => f64::INFINITY,
                },
                PI,
            )
        };
        let (psi_x, vx) = infer(Quadrature::at(steered, theta));
        let (psi_p, vp) = infer(Quadrature::at(steered, theta + FRAC_PI_2));
        (libm::sqrt(vx.max(0.0)) * libm::sqrt(vp.max(0.0)), psi_x, psi_p)
    };
    let (theta, _) = periodic_min(|t| best_party(t).0, FRAC_PI_2);
    let (_, psi_x, psi_p) = best_party(theta);
    let optimized = report(oc, steered, party, theta, psi_x, psi_p)?;
    let fixed = report(oc, steered, party, 0.0, FRAC_PI_2, 0.0)?;
    // rounding-level gains must not flip the strict comparison at ½
    Ok(if optimized.value < fixed.value * (1.0 - 1e-12) { optimized } else { fixed })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonogamyReport {
    pub parties: [ModeLabel; 2],
    /// `E_{i|j}` for each party, with optimal linear estimates.
    pub values: [f64; 2],
    /// Not both parties steer.
    pub holds: bool,
}

/// Single-party witnesses of `steered` by each of two parties, each using the
/// best linear estimate from both party quadratures.
pub fn monogamy_check(oc: &OutputCovariance, steered: ModeLabel, parties: [ModeLabel; 2]) -> Result<MonogamyReport> {
    let mut values = [0.0; 2];
    for (v, &party) in values.iter_mut().zip(&parties) {
        let x = optimal_inferred_variance(oc, Quadrature::x(steered), party)?;
        let p = optimal_inferred_variance(oc, Quadrature::p(steered), party)?;
        *v = libm::sqrt(x.max(0.0)) * libm::sqrt(p.max(0.0));
    }
    Ok(MonogamyReport { parties, values, holds: !(values[0] < STEERING_BOUND && values[1] < STEERING_BOUND) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    /// `"n"` or `"r"`.
    pub variable: String,
    pub value: f64,
    pub bracket: (f64, f64),
    /// For noise thresholds, the `r` where `E` peaks at the threshold.
    pub sup_location: Option<f64>,
}

/// `E_{m|W}` at `(r, γ/G, n₀, n)` from the closed form.
pub fn collective_at(r: f64, gamma_over_gain: f64, n0: f64, n: f64) -> Result<f64> {
    if r == 0.0 {
        return Ok(n0 + 0.5);
    }
    let dq = Design::new(r, gamma_over_gain, 1.0, n0, n).derived()?;
    steering_collective(&dq, n0, n)
}

/// Supremum of `E_{m|W}` over `r ∈ (0, r_max]`: 128 log-spaced points from
/// `10⁻³ r_max`, refined by golden section. Returns `(r, E)`.
pub fn collective_supremum(gamma_over_gain: f64, n0: f64, n: f64, r_max: f64) -> Result<(f64, f64)> {
    const POINTS: usize = 128;
    let lo = libm::log(r_max * 1e-3);
    let hi = libm::log(r_max);
    let grid: Vec<f64> = (0..POINTS).map(|k| libm::exp(lo + (hi - lo) * k as f64 / (POINTS - 1) as f64)).collect();
    let mut best = (0, f64::NEG_INFINITY);
    for (k, &r) in grid.iter().enumerate() {
        let e = collective_at(r, gamma_over_gain, n0, n)?;
        if e > best.1 {
            best = (k, e);
        }
    }
    let a = grid[best.0.saturating_sub(1)];
    let b = grid[(best.0 + 1).min(POINTS - 1)];
    let (r, neg) =
        golden_section_min(|r| -collective_at(r, gamma_over_gain, n0, n).unwrap_or(f64::NEG_INFINITY), a, b, 1e-9 * b);
    if -neg > best.1 {
        Ok((r, -neg))
    } else {
        Ok((grid[best.0], best.1))
    }
}

/// Largest bath occupation `n` for which `sup_r E_{m|W} ≤ ½`.
pub const NOISE_SEARCH_CAP: f64 = 1e6;

pub fn noise_threshold(gamma_over_gain: f64, n0: f64, r_max: f64, tol: f64) -> Result<ThresholdResult> {
    if !(gamma_over_gain > 0.0 && gamma_over_gain < 1.0) {
        return Err(Error::InvalidParams(alloc::format!("gamma/G must lie in (0, 1), got {gamma_over_gain}")));
    }
    if !(r_max > 0.0 && tol > 0.0 && n0 >= 0.0) {
        return Err(Error::InvalidParams("r_max and tol must be positive and n0 non-negative".into()));
    }
    let excess = |n: f64| collective_supremum(gamma_over_gain, n0, n, r_max).map(|(_, e)| e - STEERING_BOUND);
    if excess(0.0)? > 0.0 {
        return Err(Error::NoThreshold(alloc::format!(
            "no steering over (0, {r_max}] even without bath noise (gamma/G = {gamma_over_gain}, n0 = {n0})"
        )));
    }
    let mut hi = 1.0;
    while excess(hi)? <= 0.0 {
        if hi >= NOISE_SEARCH_CAP {
            return Err(Error::NoThreshold(alloc::format!(
                "steering persists up to n = {NOISE_SEARCH_CAP:e} at gamma/G = {gamma_over_gain}"
            )));
        }
        hi = (2.0 * hi).min(NOISE_SEARCH_CAP);
    }
    let lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
    let mut failure = None;
    let (lo, hi) = bisect(
        |n| match excess(n) {
            // a zero excess is still "no steering lost"
            Ok(e) if e <= 0.0 => -1.0,
            Ok(_) => 1.0,
            Err(err) => {
                failure.get_or_insert(err);
                1.0
            }
        },
        lo,
        hi,
        tol,
    )?;
    if let Some(err) = failure {
        return Err(err);
    }
    let (sup_r, _) = collective_supremum(gamma_over_gain, n0, lo, r_max)?;
    Ok(ThresholdResult { variable: "n".into(), value: lo, bracket: (lo, hi), sup_location: Some(sup_r) })
}

/// First pulse area in `(0, r_max]` where `E_{m|W}` drops below ½ (or rises
/// above it, whichever sign change comes first), to `tol`.
pub fn collective_crossing(gamma_over_gain: f64, n0: f64, n: f64, r_max: f64, tol: f64) -> Result<ThresholdResult> {
    const POINTS: usize = 512;
    let f = |r: f64| collective_at(r, gamma_over_gain, n0, n).map(|e| e - STEERING_BOUND);
    let mut prev_r = 0.0;
    let mut prev = f(0.0)?;
    for k in 1..=POINTS {
        let r = r_max * k as f64 / POINTS as f64;
        let v = f(r)?;
        if (prev < 0.0) != (v < 0.0) {
            let (lo, hi) = bisect(|r| f(r).unwrap_or(f64::NAN), prev_r, r, tol)?;
            return Ok(ThresholdResult {
                variable: "r".into(),
                value: 0.5 * (lo + hi),
                bracket: (lo, hi),
                sup_location: None,
            });
        }
        prev_r = r;
        prev = v;
    }
    Err(Error::NoThreshold(alloc::format!("E - 1/2 does not change sign on (0, {r_max}]")))
}

/// `E_{m|W}` over a grid and the `E = ½` contour.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringMap {
    pub r: Vec<f64>,
    pub gamma_over_gain: Vec<f64>,
    /// `values[(i, j)]` at `gamma_over_gain[i]`, `r[j]`.
    pub values: DMatrix<f64>,
    /// Points `(r, γ/G)` where `E = ½`, by linear interpolation along grid
    /// edges.
    pub contour: Vec<(f64, f64)>,
}

pub fn steering_region(r_grid: &[f64], gamma_grid: &[f64], n0: f64, n: f64) -> Result<SteeringMap> {
    if r_grid.is_empty() || gamma_grid.is_empty() {
        return Err(Error::InvalidParams("steering region needs non-empty grids".into()));
    }
    if r_grid.iter().chain(gamma_grid).any(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::InvalidParams("grid values must be finite and non-negative".into()));
    }
    let mut values = DMatrix::zeros(gamma_grid.len(), r_grid.len());
    for (i, &g) in gamma_grid.iter().enumerate() {
        for (j, &r) in r_grid.iter().enumerate() {
            values[(i, j)] = collective_at(r, g, n0, n)?;
        }
    }
    let contour = half_contour(r_grid, gamma_grid, &values);
    Ok(SteeringMap { r: r_grid.to_vec(), gamma_over_gain: gamma_grid.to_vec(), values, contour })
}

/// Crossings of `E = ½` along the edges of a grid of values.
pub fn half_contour(r_grid: &[f64], gamma_grid: &[f64], values: &DMatrix<f64>) -> Vec<(f64, f64)> {
    let mut contour = Vec::new();
    let lerp = |a: f64, b: f64, fa: f64, fb: f64| a + (b - a) * (STEERING_BOUND - fa) / (fb - fa);
    let steer = |v: f64| v < STEERING_BOUND;
    for i in 0..gamma_grid.len() {
        for j in 0..r_grid.len() {
            let v = values[(i, j)];
            if j + 1 < r_grid.len() && steer(v) != steer(values[(i, j + 1)]) {
                contour.push((lerp(r_grid[j], r_grid[j + 1], v, values[(i, j + 1)]), gamma_grid[i]));
            }
            if i + 1 < gamma_grid.len() && steer(v) != steer(values[(i + 1, j)]) {
                contour.push((r_grid[j], lerp(gamma_grid[i], gamma_grid[i + 1], v, values[(i + 1, j)])));
            }
        }
    }
    contour
}

/// Collective and single-party witnesses from a covariance containing
/// `A_m^out`, `A₁^out`, `A₂^out` and `W_out`.
pub fn witnesses(oc: &OutputCovariance) -> Result<[SteeringReport; 3]> {
    use crate::Cavity;
    Ok([
        steering_product(oc, ModeLabel::MirrorOut, ModeLabel::WOut, false)?,
        steering_product(oc, ModeLabel::MirrorOut, ModeLabel::CavityOut(Cavity::One), false)?,
        steering_product(oc, ModeLabel::MirrorOut, ModeLabel::CavityOut(Cavity::Two), false)?,
    ])
}

/// Rates for `(r, γ/G, G₁/G₂)` at unit net gain.
pub fn design_rates(r: f64, gamma_over_gain: f64, gain_ratio: f64) -> Result<DerivedQuantities> {
    derived_quantities(&Design::new(r, gamma_over_gain, gain_ratio, 0.0, 0.0).reduced()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedform::{steering_single, threshold_r};
    use crate::covariance::symplectic_form;
    use crate::dynamics::{standard_output_covariance, ModelKind};
    use crate::model::ReducedParams;
    use crate::Cavity;
    use proptest::prelude::*;

    fn tmsv(s: f64) -> OutputCovariance {
        let (ch, sh) = (libm::cosh(2.0 * s) / 2.0, libm::sinh(2.0 * s) / 2.0);
        #[rustfmt::skip]
        let sigma = DMatrix::from_row_slice(4, 4, &[
            ch, 0.0, sh, 0.0,
            0.0, ch, 0.0, -sh,
            sh, 0.0, ch, 0.0,
            0.0, -sh, 0.0, ch,
        ]);
        OutputCovariance::canonical(alloc::vec![ModeLabel::MirrorOut, ModeLabel::WOut], sigma)
    }

    fn vacuum() -> OutputCovariance {
        OutputCovariance::canonical(alloc::vec![ModeLabel::MirrorOut, ModeLabel::WOut], DMatrix::identity(4, 4) * 0.5)
    }

    fn oracle(r: f64, g: f64, ratio: f64, n0: f64, n: f64) -> OutputCovariance {
        let rp: ReducedParams = Design::new(r, g, ratio, n0, n).reduced().unwrap();
        standard_output_covariance(&rp, ModelKind::Reduced, 1e-11).unwrap()
    }

    #[test]
    fn uncorrelated_modes_infer_nothing() {
        let v =
            inferred_variance(&vacuum(), Quadrature::x(ModeLabel::MirrorOut), Quadrature::p(ModeLabel::WOut)).unwrap();
        assert_eq!(v.variance, 0.5);
        assert_eq!(v.gain, 0.0);
        let rep = steering_product(&vacuum(), ModeLabel::MirrorOut, ModeLabel::WOut, true).unwrap();
        assert!((rep.value - 0.5).abs() < 1e-15);
        assert!(!rep.is_steering);
    }

    #[test]
    fn two_mode_squeezing_reaches_epr_limit() {
        for s in [0.5, 1.0, 3.0] {
            let oc = tmsv(s);
            let v =
                inferred_variance(&oc, Quadrature::x(ModeLabel::MirrorOut), Quadrature::x(ModeLabel::WOut)).unwrap();
            assert!((v.variance - 0.5 / libm::cosh(2.0 * s)).abs() < 1e-12);
            let rep = steering_product(&oc, ModeLabel::MirrorOut, ModeLabel::WOut, true).unwrap();
            assert!((rep.value - 0.5 / libm::cosh(2.0 * s)).abs() < 1e-10);
        }
        let far = inferred_variance(&tmsv(10.0), Quadrature::x(ModeLabel::MirrorOut), Quadrature::x(ModeLabel::WOut))
            .unwrap();
        assert!(far.variance < 1e-8);
    }

    #[test]
    fn degenerate_party_is_an_error() {
        let mut sigma = DMatrix::identity(4, 4) * 0.5;
        sigma[(3, 3)] = 0.0;
        let oc = OutputCovariance::new(alloc::vec![ModeLabel::MirrorOut, ModeLabel::WOut], sigma, symplectic_form(2));
        assert!(matches!(
            inferred_variance(&oc, Quadrature::x(ModeLabel::MirrorOut), Quadrature::p(ModeLabel::WOut)),
            Err(Error::ZeroVariance { .. })
        ));
    }

    #[test]
    fn oracle_collective_inference_matches_closed_form() {
        let oc = oracle(1.0, 0.0, 1.0, 0.0, 0.0);
        let v = inferred_variance(&oc, Quadrature::x(ModeLabel::MirrorOut), Quadrature::p(ModeLabel::WOut)).unwrap();
        let e2 = core::f64::consts::E * core::f64::consts::E;
        assert!(((v.variance - 1.0 / (2.0 * (2.0 * e2 - 1.0))) / v.variance).abs() < 1e-6);

        let oc = oracle(1.0, 0.1, 1.0, 0.0, 0.0);
        let rep = steering_product(&oc, ModeLabel::MirrorOut, ModeLabel::WOut, false).unwrap();
        let cf = collective_at(1.0, 0.1, 0.0, 0.0).unwrap();
        assert!(((rep.value - cf) / cf).abs() < 1e-6);
        let opt = steering_product(&oc, ModeLabel::MirrorOut, ModeLabel::WOut, true).unwrap();
        assert!((opt.value - rep.value).abs() < 1e-8);
    }

    #[test]
    fn equal_gains_single_cavity_cannot_steer() {
        for r in [0.25, 1.0, 2.0] {
            let oc = oracle(r, 0.0, 1.0, 0.0, 0.0);
            for c in Cavity::BOTH {
                let rep = steering_product(&oc, ModeLabel::MirrorOut, ModeLabel::CavityOut(c), false).unwrap();
                assert!(rep.value >= 0.5 - 1e-8, "r = {r}: {}", rep.value);
            }
        }
    }

    #[test]
    fn fixed_quadratures_are_optimal_for_model_states() {
        for (r, g, ratio, n0, n) in [(0.5, 0.0, 1.0, 0.0, 0.0), (1.0, 0.1, 2.0, 0.5, 5.0), (2.0, 0.05, 0.5, 5.0, 100.0)]
        {
            let oc = oracle(r, g, ratio, n0, n);
            for party in [ModeLabel::WOut, ModeLabel::CavityOut(Cavity::One), ModeLabel::CavityOut(Cavity::Two)] {
                let fixed = steering_product(&oc, ModeLabel::MirrorOut, party, false).unwrap();
                let opt = steering_product(&oc, ModeLabel::MirrorOut, party, true).unwrap();
                assert!((fixed.value - opt.value).abs() < 1e-8 * fixed.value.max(1.0), "{party}");
                let x = optimal_inferred_variance(&oc, Quadrature::x(ModeLabel::MirrorOut), party).unwrap();
                let p = optimal_inferred_variance(&oc, Quadrature::p(ModeLabel::MirrorOut), party).unwrap();
                assert!((libm::sqrt(x * p) - fixed.value).abs() < 1e-8 * fixed.value.max(1.0));
            }
        }
    }

    #[test]
    fn gain_scan_never_beats_analytic_gain() {
        let oc = oracle(1.0, 0.1, 2.0, 0.5, 5.0);
        let (s, o) = (Quadrature::x(ModeLabel::MirrorOut), Quadrature::p(ModeLabel::WOut));
        let best = inferred_variance(&oc, s, o).unwrap();
        let (vs, vo, c) = (oc.variance(s).unwrap(), oc.variance(o).unwrap(), oc.covariance(s, o).unwrap());
        for k in -200..=200 {
            let u = best.gain * (1.0 + k as f64 * 1e-3);
            let v = vs + 2.0 * u * c + u * u * vo;
            assert!(v >= best.variance - 1e-10 * vs);
        }
    }

    #[test]
    fn monogamy_holds_for_model_states() {
        let oc = oracle(1.0, 0.0, 2.0, 0.0, 0.0);
        let m = monogamy_check(
            &oc,
            ModeLabel::MirrorOut,
            [ModeLabel::CavityOut(Cavity::One), ModeLabel::CavityOut(Cavity::Two)],
        )
        .unwrap();
        assert!(m.values[0] < 0.5);
        assert!(m.values[1] > 0.5);
        assert!(m.holds);
        let dq = design_rates(1.0, 0.0, 2.0).unwrap();
        assert!((m.values[0] - steering_single(&dq, 0.0, 0.0, Cavity::One).unwrap()).abs() < 1e-6);
        let eq = oracle(1.0, 0.0, 1.0, 0.0, 0.0);
        let m = monogamy_check(
            &eq,
            ModeLabel::MirrorOut,
            [ModeLabel::CavityOut(Cavity::One), ModeLabel::CavityOut(Cavity::Two)],
        )
        .unwrap();
        assert!(m.values.iter().all(|&v| v >= 0.5 - 1e-8));
    }

    #[test]
    fn collective_starts_at_initial_noise() {
        for (g, n0, n) in [(0.0, 0.0, 0.0), (0.1, 5.0, 5.0), (0.3, 0.5, 100.0)] {
            assert_eq!(collective_at(0.0, g, n0, n).unwrap(), n0 + 0.5);
            assert!((collective_at(1e-9, g, n0, n).unwrap() - (n0 + 0.5)).abs() < 1e-6);
        }
    }

    #[test]
    fn undamped_crossing_is_threshold_r() {
        for n0 in [0.5, 5.0, 50.0] {
            let t = collective_crossing(0.0, n0, 0.0, 2.0, 1e-12).unwrap();
            assert!((t.value - threshold_r(n0)).abs() < 1e-9);
        }
    }

    #[test]
    fn noise_threshold_near_six_hundred() {
        let t = noise_threshold(0.1, 0.0, 10.0, 0.5).unwrap();
        assert!(t.value > 500.0 && t.value < 700.0, "{t:?}");
        assert!(t.bracket.1 - t.bracket.0 <= 0.5);
        let (_, e) = collective_supremum(0.1, 0.0, t.value, 10.0).unwrap();
        assert!(e <= 0.5 && e > 0.5 - 1e-3);
    }

    #[test]
    fn tiny_damping_has_no_noise_threshold() {
        assert!(matches!(noise_threshold(1e-5, 0.0, 10.0, 0.5), Err(Error::NoThreshold(_))));
        assert!(matches!(noise_threshold(0.1, 1.0, 10.0, 0.5), Err(Error::NoThreshold(_))));
    }

    #[test]
    fn region_row_without_damping_is_closed_form() {
        let r: Vec<f64> = (1..=20).map(|k| 0.15 * k as f64).collect();
        let map = steering_region(&r, &[0.0, 0.5], 0.0, 0.0).unwrap();
        for (j, &rj) in r.iter().enumerate() {
            let expected = 0.5 / (2.0 * libm::expm1(2.0 * rj) + 1.0);
            assert!((map.values[(0, j)] - expected).abs() < 1e-12 * expected);
        }
        assert!(map.values.row(0).iter().all(|&v| v < 0.5));
    }

    #[test]
    fn contour_separates_regions() {
        let r = [1.0, 3.0, 6.0];
        let g = [0.1, 2.0];
        let map = steering_region(&r, &g, 0.0, 0.0).unwrap();
        assert!(map.values[(0, 0)] < 0.5);
        assert!(map.values[(1, 2)] > 0.5);
        assert!(!map.contour.is_empty());
        for &(rc, gc) in &map.contour {
            assert!((collective_at(rc, gc, 0.0, 0.0).unwrap() - 0.5).abs() < 0.2);
        }
    }

    proptest! {
        #[test]
        fn collective_region_ignores_gain_split(r in 0.01f64..5.0, g in 0.0f64..2.0, ratio in 0.1f64..10.0) {
            let a = steering_collective(&Design::new(r, g, 1.0, 0.0, 0.0).derived().unwrap(), 0.0, 0.0).unwrap();
            let b = steering_collective(&Design::new(r, g, ratio, 0.0, 0.0).derived().unwrap(), 0.0, 0.0).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn undamped_collective_decreasing(r in 0.0f64..8.0, dr in 1e-3f64..1.0, n0 in 0.0f64..20.0) {
            prop_assert!(collective_at(r + dr, 0.0, n0, 0.0).unwrap() < collective_at(r, 0.0, n0, 0.0).unwrap());
        }
    }
}
