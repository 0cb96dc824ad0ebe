//! Device parameters, classical working point and the linearized
//! rotating-frame model.
//!
//! The drive sits on the blue sideband of the mean cavity frequency,
//! `ω_L = (ω₁ + ω₂)/2 + ω_m`. After linearizing around the classical working
//! point and dropping counter-rotating terms, the fluctuations obey a
//! three-mode two-mode-squeezing model parameterized by [`ReducedParams`].
//! Eliminating the cavities adiabatically leaves a single mirror equation
//! whose rates are collected in [`DerivedQuantities`].

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;
use core::fmt;

use num_complex::Complex64;

use crate::{Cavity, Error, Result};

/// Raw device parameters. Angular frequencies and rates in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub omega1: f64,
    pub omega2: f64,
    pub omega_m: f64,
    pub omega_l: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub gamma: f64,
    /// Single-photon couplings.
    pub g01: f64,
    pub g02: f64,
    /// Drive amplitudes.
    pub e1: f64,
    pub e2: f64,
    /// Initial mirror occupation.
    pub n0: f64,
    /// Bath occupation.
    pub n: f64,
    /// Pulse duration in seconds.
    pub tau: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("omega_m", self.omega_m),
            ("omega_L", self.omega_l),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("gamma", self.gamma),
            ("tau", self.tau),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative =
            [("g01", self.g01), ("g02", self.g02), ("E1", self.e1), ("E2", self.e2), ("n0", self.n0), ("n", self.n)];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Bare detuning `Δ₀ⱼ = ωⱼ − ω_L`.
    pub fn bare_detuning(&self, c: Cavity) -> f64 {
        match c {
            Cavity::One => self.omega1 - self.omega_l,
            Cavity::Two => self.omega2 - self.omega_l,
        }
    }

    pub fn kappa(&self, c: Cavity) -> f64 {
        match c {
            Cavity::One => self.kappa1,
            Cavity::Two => self.kappa2,
        }
    }

    pub fn single_photon_coupling(&self, c: Cavity) -> f64 {
        match c {
            Cavity::One => self.g01,
            Cavity::Two => self.g02,
        }
    }

    pub fn drive(&self, c: Cavity) -> f64 {
        match c {
            Cavity::One => self.e1,
            Cavity::Two => self.e2,
        }
    }

    /// Effective detuning for a given static mirror displacement.
    fn shifted_detuning(&self, c: Cavity, x_s: f64) -> f64 {
        self.bare_detuning(c) + SQRT_2 * self.single_photon_coupling(c) * x_s
    }

    fn amplitude(&self, c: Cavity, x_s: f64) -> Complex64 {
        Complex64::new(self.drive(c), 0.0) / Complex64::new(self.kappa(c), self.shifted_detuning(c, x_s))
    }

    /// Right-hand side of the displacement self-consistency `x_s = F(x_s)`.
    fn displacement_map(&self, x_s: f64) -> f64 {
        let force: f64 =
            Cavity::BOTH.iter().map(|&c| self.single_photon_coupling(c) * self.amplitude(c, x_s).norm_sqr()).sum();
        -SQRT_2 * force / self.omega_m
    }

    /// Drive amplitudes that produce the requested effective couplings
    /// `gⱼ = g₀ⱼ|αⱼ|`. The working point is explicit once `|αⱼ|` is fixed.
    pub fn drives_for_couplings(&self, couplings: [f64; 2]) -> Result<[f64; 2]> {
        let mut amp = [0.0; 2];
        for c in Cavity::BOTH {
            let g = couplings[c.index()];
            let g0 = self.single_photon_coupling(c);
            if g < 0.0 || !g.is_finite() {
                return Err(Error::InvalidParams(format!("coupling must be non-negative, got {g}")));
            }
            if g > 0.0 && g0 <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "cavity {:?} has no single-photon coupling, cannot reach g = {g}",
                    c
                )));
            }
            amp[c.index()] = if g == 0.0 { 0.0 } else { g / g0 };
        }
        let x_s = -SQRT_2 * (self.g01 * amp[0] * amp[0] + self.g02 * amp[1] * amp[1]) / self.omega_m;
        let mut drives = [0.0; 2];
        for c in Cavity::BOTH {
            let k = self.kappa(c);
            let d = self.shifted_detuning(c, x_s);
            drives[c.index()] = amp[c.index()] * libm::hypot(k, d);
        }
        Ok(drives)
    }
}

/// Classical mean fields around which the dynamics is linearized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkingPoint {
    pub alpha: [Complex64; 2],
    pub x_s: f64,
    pub p_s: f64,
    /// Effective detunings including the radiation-pressure shift.
    pub detuning: [f64; 2],
    /// Effective couplings `g₀ⱼ|αⱼ|`.
    pub coupling: [f64; 2],
}

impl WorkingPoint {
    fn at(p: &PhysicalParams, x_s: f64) -> WorkingPoint {
        let alpha = Cavity::BOTH.map(|c| p.amplitude(c, x_s));
        WorkingPoint {
            alpha,
            x_s,
            p_s: 0.0,
            detuning: Cavity::BOTH.map(|c| p.shifted_detuning(c, x_s)),
            coupling: Cavity::BOTH.map(|c| p.single_photon_coupling(c) * alpha[c.index()].norm()),
        }
    }

    /// Absolute residuals of the three defining equations
    /// (displacement, amplitudes, detunings), each maximized over cavities.
    pub fn residuals(&self, p: &PhysicalParams) -> [f64; 3] {
        let force: f64 =
            Cavity::BOTH.iter().map(|&c| p.single_photon_coupling(c) * self.alpha[c.index()].norm_sqr()).sum();
        let r_x = (self.x_s + SQRT_2 * force / p.omega_m).abs();
        let mut r_alpha: f64 = 0.0;
        let mut r_delta: f64 = 0.0;
        for c in Cavity::BOTH {
            let i = c.index();
            let expected = Complex64::new(p.drive(c), 0.0) / Complex64::new(p.kappa(c), self.detuning[i]);
            r_alpha = r_alpha.max((self.alpha[i] - expected).norm());
            r_delta = r_delta
                .max((self.detuning[i] - p.bare_detuning(c) - SQRT_2 * p.single_photon_coupling(c) * self.x_s).abs());
        }
        [r_x, r_alpha, r_delta]
    }
}

/// Solve the classical self-consistency for the mirror displacement.
///
/// Damped fixed-point iteration first; if that has not settled after
/// `max_iter` steps, bisection on `x − F(x)` over `[F_min, 0]`, where the root
/// is always bracketed because `F` is non-positive and bounded below.
pub fn derive_working_point(p: &PhysicalParams, tol: f64, max_iter: usize) -> Result<WorkingPoint> {
    p.validate()?;
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidParams(format!(
            "need tol > 0 and max_iter >= 1, got tol = {tol}, max_iter = {max_iter}"
        )));
    }

    const DAMPING: f64 = 0.5;
    let mut x = 0.0;
    let mut last_step = f64::INFINITY;
    for _ in 0..max_iter {
        let fx = p.displacement_map(x);
        last_step = fx - x;
        if last_step.abs() < tol {
            return Ok(WorkingPoint::at(p, x));
        }
        x += DAMPING * last_step;
        if !x.is_finite() {
            break;
        }
    }

    // F(x) >= -sqrt2 * sum g0 E^2 / kappa^2 / omega_m
    let floor = -SQRT_2
        * Cavity::BOTH
            .iter()
            .map(|&c| {
                p.single_photon_coupling(c) * {
                    let x = p.drive(c) / p.kappa(c);
                    x * x
                }
            })
            .sum::<f64>()
        / p.omega_m;
    let h = |x: f64| x - p.displacement_map(x);
    let (mut lo, mut hi) = (floor, 0.0);
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let hm = h(mid);
        if hm.abs() < tol {
            return Ok(WorkingPoint::at(p, mid));
        }
        if hm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        last_step = hi - lo;
    }
    Err(Error::NonConvergence { iterations: max_iter, last_step })
}

/// Parameters of the linearized rotating-frame model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedParams {
    pub g1: f64,
    pub g2: f64,
    pub kappa: f64,
    /// Half the cavity frequency difference, `(ω₁ − ω₂)/2`.
    pub splitting: f64,
    pub gamma: f64,
    pub n0: f64,
    pub n: f64,
    pub tau: f64,
}

impl ReducedParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("kappa", self.kappa), ("tau", self.tau)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("g1", self.g1), ("g2", self.g2), ("gamma", self.gamma), ("n0", self.n0), ("n", self.n)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !self.splitting.is_finite() {
            return Err(Error::InvalidParams(format!("splitting must be finite, got {}", self.splitting)));
        }
        Ok(())
    }

    pub fn coupling(&self, c: Cavity) -> f64 {
        match c {
            Cavity::One => self.g1,
            Cavity::Two => self.g2,
        }
    }

    /// Build parameters from dimensionless ratios (see [`Design`]).
    pub fn from_design(d: &Design) -> Result<ReducedParams> {
        d.validate()?;
        let scale = d.gain_scale;
        let total = (1.0 + d.gamma_over_gain) * scale;
        let share1 = if d.gain_ratio.is_infinite() { 1.0 } else { d.gain_ratio / (1.0 + d.gain_ratio) };
        let gain1 = share1 * total;
        let gain2 = total - gain1;
        let lorentz = 1.0 + d.splitting_over_kappa * d.splitting_over_kappa;
        // G1 = g1^2 kappa / (kappa^2 (1 + s^2)) with g1 = kappa / q
        let kappa = gain1 * d.kappa_over_g1 * d.kappa_over_g1 * lorentz;
        Ok(ReducedParams {
            g1: libm::sqrt(gain1 * kappa * lorentz),
            g2: libm::sqrt(gain2 * kappa * lorentz),
            kappa,
            splitting: d.splitting_over_kappa * kappa,
            gamma: d.gamma_over_gain * scale,
            n0: d.n0,
            n: d.n,
            tau: d.squeezing / scale,
        })
    }

    /// Inverse of [`ReducedParams::from_design`].
    pub fn design(&self) -> Result<Design> {
        let dq = derived_quantities(self)?;
        if self.g1 <= 0.0 {
            return Err(Error::InvalidParams("design ratios need g1 > 0".into()));
        }
        Ok(Design {
            squeezing: dq.squeezing,
            gamma_over_gain: dq.gamma_over_gain(),
            gain_ratio: dq.gain1 / dq.gain2,
            kappa_over_g1: self.kappa / self.g1,
            splitting_over_kappa: self.splitting / self.kappa,
            n0: self.n0,
            n: self.n,
            gain_scale: dq.net_gain,
        })
    }
}

/// Dimensionless parameterization used by sweeps and figures.
///
/// `gain_scale` is the net gain `G` in rad/s; every other field is a ratio.
/// A `gain_ratio` of `+∞` means cavity 2 is uncoupled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Design {
    /// `r = Gτ`.
    pub squeezing: f64,
    pub gamma_over_gain: f64,
    /// `G₁/G₂`.
    pub gain_ratio: f64,
    pub kappa_over_g1: f64,
    /// `Δ/κ`.
    pub splitting_over_kappa: f64,
    pub n0: f64,
    pub n: f64,
    pub gain_scale: f64,
}

impl Design {
    /// Unit net gain, bad-cavity defaults (`κ/g₁ = 1000`, `Δ = κ`).
    pub fn new(squeezing: f64, gamma_over_gain: f64, gain_ratio: f64, n0: f64, n: f64) -> Design {
        Design {
            squeezing,
            gamma_over_gain,
            gain_ratio,
            kappa_over_g1: 1000.0,
            splitting_over_kappa: 1.0,
            n0,
            n,
            gain_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("r", self.squeezing >= 0.0 && self.squeezing.is_finite()),
            ("gamma/G", self.gamma_over_gain >= 0.0 && self.gamma_over_gain.is_finite()),
            ("G1/G2", self.gain_ratio >= 0.0 && !self.gain_ratio.is_nan()),
            ("kappa/g1", self.kappa_over_g1 > 0.0 && self.kappa_over_g1.is_finite()),
            ("Delta/kappa", self.splitting_over_kappa.is_finite()),
            ("n0", self.n0 >= 0.0 && self.n0.is_finite()),
            ("n", self.n >= 0.0 && self.n.is_finite()),
            ("G", self.gain_scale > 0.0 && self.gain_scale.is_finite()),
        ];
        for (name, ok) in checks {
            if !ok {
                return Err(Error::InvalidParams(format!("design ratio {name} out of range")));
            }
        }
        if self.squeezing == 0.0 {
            return Err(Error::InvalidParams("r must be positive to define a pulse duration".into()));
        }
        Ok(())
    }

    pub fn reduced(&self) -> Result<ReducedParams> {
        ReducedParams::from_design(self)
    }

    pub fn derived(&self) -> Result<DerivedQuantities> {
        derived_quantities(&self.reduced()?)
    }
}

/// Thresholds for the non-fatal `g ≪ κ ≪ ω_m` regime warnings and for the
/// hard resonance and damping-symmetry checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReduceConfig {
    /// Allowed `|ω_L − ω₀ − ω_m|`, relative to `ω_m`.
    pub resonance_tolerance: f64,
    /// Allowed relative difference between `κ₁` and `κ₂`.
    pub damping_tolerance: f64,
    /// Warn when `gⱼ/κ` exceeds this.
    pub coupling_ratio: f64,
    /// Warn when `κ/ω_m` exceeds this.
    pub damping_ratio: f64,
}

impl Default for ReduceConfig {
    fn default() -> Self {
        ReduceConfig { resonance_tolerance: 1e-6, damping_tolerance: 0.01, coupling_ratio: 0.2, damping_ratio: 0.2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegimeWarning {
    /// `gⱼ/κ` above the configured ratio; adiabatic elimination degrades.
    StrongCoupling { cavity: Cavity, ratio: f64 },
    /// `κ/ω_m` above the configured ratio; the rotating-wave approximation degrades.
    UnresolvedSideband { ratio: f64 },
}

impl fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegimeWarning::StrongCoupling { cavity, ratio } => {
                write!(f, "g/kappa = {ratio:.3} for cavity {:?}; adiabatic elimination is marginal", cavity)
            }
            RegimeWarning::UnresolvedSideband { ratio } => {
                write!(f, "kappa/omega_m = {ratio:.3}; sideband is poorly resolved")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub params: ReducedParams,
    pub warnings: Vec<RegimeWarning>,
}

/// Reduce device parameters plus a working point to the rotating-frame model.
pub fn reduce(p: &PhysicalParams, wp: &WorkingPoint, cfg: &ReduceConfig) -> Result<Reduction> {
    reduce_with_couplings(p, wp.coupling, cfg)
}

/// As [`reduce`], but with the effective couplings given directly.
pub fn reduce_with_couplings(p: &PhysicalParams, couplings: [f64; 2], cfg: &ReduceConfig) -> Result<Reduction> {
    p.validate()?;
    let omega0 = 0.5 * (p.omega1 + p.omega2);
    let mismatch = p.omega_l - omega0 - p.omega_m;
    let tolerance = cfg.resonance_tolerance * p.omega_m;
    if mismatch.abs() > tolerance {
        return Err(Error::OffResonance { mismatch, tolerance });
    }
    let kappa = 0.5 * (p.kappa1 + p.kappa2);
    if (p.kappa1 - p.kappa2).abs() > cfg.damping_tolerance * kappa {
        return Err(Error::AsymmetricDamping { kappa1: p.kappa1, kappa2: p.kappa2 });
    }

    let mut warnings = Vec::new();
    for c in Cavity::BOTH {
        let ratio = couplings[c.index()] / kappa;
        if ratio > cfg.coupling_ratio {
            warnings.push(RegimeWarning::StrongCoupling { cavity: c, ratio });
        }
    }
    let ratio = kappa / p.omega_m;
    if ratio > cfg.damping_ratio {
        warnings.push(RegimeWarning::UnresolvedSideband { ratio });
    }

    let params = ReducedParams {
        g1: couplings[0],
        g2: couplings[1],
        kappa,
        splitting: 0.5 * (p.omega1 - p.omega2),
        gamma: p.gamma,
        n0: p.n0,
        n: p.n,
        tau: p.tau,
    };
    params.validate()?;
    Ok(Reduction { params, warnings })
}

/// Rates of the adiabatically reduced mirror equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedQuantities {
    /// `G₁ = g₁²κ/(κ² + Δ²)`.
    pub gain1: f64,
    pub gain2: f64,
    /// `G = G₁ + G₂ − γ`.
    pub net_gain: f64,
    pub gamma: f64,
    /// `δ = (g₁² − g₂²)Δ/(κ² + Δ²)`.
    pub shift: f64,
    /// `φ = arctan(Δ/κ)`.
    pub phase: f64,
    /// `r = Gτ`.
    pub squeezing: f64,
    pub tau: f64,
}

impl DerivedQuantities {
    pub fn gain(&self, c: Cavity) -> f64 {
        match c {
            Cavity::One => self.gain1,
            Cavity::Two => self.gain2,
        }
    }

    pub fn gamma_over_gain(&self) -> f64 {
        self.gamma / self.net_gain
    }

    /// Same rates at a different pulse area.
    pub fn with_squeezing(&self, r: f64) -> DerivedQuantities {
        DerivedQuantities { squeezing: r, tau: r / self.net_gain, ..*self }
    }
}

pub fn derived_quantities(rp: &ReducedParams) -> Result<DerivedQuantities> {
    rp.validate()?;
    let lorentz = rp.kappa * rp.kappa + rp.splitting * rp.splitting;
    let gain1 = rp.g1 * rp.g1 * rp.kappa / lorentz;
    let gain2 = rp.g2 * rp.g2 * rp.kappa / lorentz;
    let net_gain = gain1 + gain2 - rp.gamma;
    if !(net_gain > 0.0) {
        return Err(Error::GainNotPositive { net_gain });
    }
    Ok(DerivedQuantities {
        gain1,
        gain2,
        net_gain,
        gamma: rp.gamma,
        shift: (rp.g1 * rp.g1 - rp.g2 * rp.g2) * rp.splitting / lorentz,
        phase: libm::atan(rp.splitting / rp.kappa),
        squeezing: net_gain * rp.tau,
        tau: rp.tau,
    })
}
