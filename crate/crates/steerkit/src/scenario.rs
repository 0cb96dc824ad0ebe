//! Scenario documents: one JSON object per run.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "mode": "curve",
//!   "params": { "kind": "design", "r": 1.0, "gamma_over_G": 0.1, "n0": 0.0, "n": 0.0 },
//!   "sweep": { "variable": "r", "lo": 0.0, "hi": 3.0, "points": 301 },
//!   "engine": "closedform"
//! }
//! ```

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use steerkit_core::model::{
    derive_working_point, reduce, reduce_with_couplings, Design, PhysicalParams, ReduceConfig, ReducedParams,
    WorkingPoint,
};

use crate::error::{CliError, CliResult};
use crate::units::{Duration, Frequency};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub mode: Mode,
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    /// Second axis of a heatmap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep2: Option<Sweep>,
    /// Parameter overrides, one curve (or column group) each.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<Series>,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloSettings>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Curve,
    Heatmap,
    NThreshold,
    ValidateOracle,
    ValidateAdiabatic,
    WorkingPoint,
    CrossCorrelation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Closedform,
    Oracle,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Params {
    Design(DesignParams),
    Reduced(ReducedBlock),
    Physical(PhysicalBlock),
}

fn one() -> f64 {
    1.0
}

fn thousand() -> f64 {
    1000.0
}

/// Dimensionless parameters at unit net gain `G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct DesignParams {
    pub r: f64,
    pub gamma_over_G: f64,
    #[serde(default = "one")]
    pub G1_over_G2: f64,
    pub n0: f64,
    pub n: f64,
    #[serde(default = "thousand")]
    pub kappa_over_g1: f64,
    #[serde(default = "one")]
    pub Delta_over_kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct ReducedBlock {
    pub g1: Frequency,
    pub g2: Frequency,
    pub kappa: Frequency,
    /// Half the cavity frequency difference.
    pub Delta: Frequency,
    pub gamma: Frequency,
    pub n0: f64,
    pub n: f64,
    pub tau: Duration,
}

/// Device parameters. Give either drives `E1`, `E2` (with `g01`, `g02`) or
/// the effective couplings `g1`, `g2` directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct PhysicalBlock {
    pub omega1: Frequency,
    pub omega2: Frequency,
    pub omega_m: Frequency,
    pub omega_L: Frequency,
    pub kappa1: Frequency,
    pub kappa2: Frequency,
    pub gamma: Frequency,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g01: Option<Frequency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g02: Option<Frequency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub E1: Option<Frequency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub E2: Option<Frequency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g1: Option<Frequency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g2: Option<Frequency>,
    pub n0: f64,
    pub n: f64,
    pub tau: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "r")]
    R,
    #[serde(rename = "tau")]
    Tau,
    #[serde(rename = "n")]
    N,
    #[serde(rename = "n0")]
    N0,
    #[serde(rename = "gamma_over_G")]
    GammaOverG,
    #[serde(rename = "G1_over_G2")]
    G1OverG2,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::R => "r",
            SweepVariable::Tau => "tau",
            SweepVariable::N => "n",
            SweepVariable::N0 => "n0",
            SweepVariable::GammaOverG => "gamma_over_G",
            SweepVariable::G1OverG2 => "G1_over_G2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl Sweep {
    pub fn linear(variable: SweepVariable, lo: f64, hi: f64, points: usize) -> Sweep {
        Sweep { variable, lo, hi, points, scale: Scale::Linear }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.points < 2 {
            return Err(CliError::Config(format!("sweep over {} needs at least 2 points", self.variable.name())));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(CliError::Config(format!(
                "sweep over {} needs finite lo < hi, got [{}, {}]",
                self.variable.name(),
                self.lo,
                self.hi
            )));
        }
        if self.scale == Scale::Log && self.lo <= 0.0 {
            return Err(CliError::Config("log-scaled sweeps need lo > 0".into()));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| {
                let t = k as f64 / last;
                match self.scale {
                    Scale::Linear => self.lo + (self.hi - self.lo) * t,
                    Scale::Log => (self.lo.ln() + (self.hi.ln() - self.lo.ln()) * t).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct Series {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_over_G: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub G1_over_G2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_over_g1: Option<f64>,
}

impl Series {
    pub fn apply(&self, d: &mut Design) {
        let set = |target: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *target = v;
            }
        };
        set(&mut d.squeezing, self.r);
        set(&mut d.gamma_over_gain, self.gamma_over_G);
        set(&mut d.gain_ratio, self.G1_over_G2);
        set(&mut d.n0, self.n0);
        set(&mut d.n, self.n);
        set(&mut d.kappa_over_g1, self.kappa_over_g1);
    }

    /// Explicit label, or the overridden values joined by commas.
    pub fn display_label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let parts: Vec<String> = [
            ("r", self.r),
            ("gamma_over_G", self.gamma_over_G),
            ("G1_over_G2", self.G1_over_G2),
            ("n0", self.n0),
            ("n", self.n),
            ("kappa_over_g1", self.kappa_over_g1),
        ]
        .iter()
        .filter_map(|(k, v)| v.map(|v| format!("{k}={v}")))
        .collect();
        parts.join(",")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSettings {
    pub trajectories: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Local tolerance of the moment integration (default 1e-12).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<f64>,
    /// Pass bound for validation modes (default 1e-6 oracle, 5e-2 adiabatic).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validate: Option<f64>,
    /// Absolute bisection tolerance on `n` (default 0.5).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_n: Option<f64>,
    /// Upper end of the supremum search in `r` (default 10).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
}

/// Design point plus everything learned while reducing device parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub design: Design,
    pub warnings: Vec<String>,
    pub working_point: Option<WorkingPoint>,
    pub reduced: Option<ReducedParams>,
    /// Parameters carry physical units (pulse durations in seconds).
    pub dimensional: bool,
}

const WORKING_POINT_TOL: f64 = 1e-12;
const WORKING_POINT_ITER: usize = 10_000;

impl PhysicalBlock {
    pub fn physical_params(&self) -> CliResult<PhysicalParams> {
        let rate = |f: &Option<Frequency>| f.map(|f| f.rad_per_second()).unwrap_or(0.0);
        Ok(PhysicalParams {
            omega1: self.omega1.rad_per_second(),
            omega2: self.omega2.rad_per_second(),
            omega_m: self.omega_m.rad_per_second(),
            omega_l: self.omega_L.rad_per_second(),
            kappa1: self.kappa1.rad_per_second(),
            kappa2: self.kappa2.rad_per_second(),
            gamma: self.gamma.rad_per_second(),
            g01: rate(&self.g01),
            g02: rate(&self.g02),
            e1: rate(&self.E1),
            e2: rate(&self.E2),
            n0: self.n0,
            n: self.n,
            tau: self.tau.seconds(),
        })
    }

    fn couplings(&self) -> CliResult<Option<[f64; 2]>> {
        match (&self.g1, &self.g2, &self.E1, &self.E2) {
            (Some(g1), Some(g2), None, None) => Ok(Some([g1.rad_per_second(), g2.rad_per_second()])),
            (None, None, Some(_), Some(_)) => {
                if self.g01.is_none() || self.g02.is_none() {
                    return Err(CliError::Config("drives E1, E2 need single-photon couplings g01, g02".into()));
                }
                Ok(None)
            }
            _ => Err(CliError::Config("give either both drives E1, E2 or both couplings g1, g2".into())),
        }
    }
}

impl Params {
    pub fn resolve(&self) -> CliResult<Resolved> {
        match self {
            Params::Design(d) => Ok(Resolved {
                design: Design {
                    squeezing: d.r,
                    gamma_over_gain: d.gamma_over_G,
                    gain_ratio: d.G1_over_G2,
                    kappa_over_g1: d.kappa_over_g1,
                    splitting_over_kappa: d.Delta_over_kappa,
                    n0: d.n0,
                    n: d.n,
                    gain_scale: 1.0,
                },
                warnings: Vec::new(),
                working_point: None,
                reduced: None,
                dimensional: false,
            }),
            Params::Reduced(b) => {
                let rp = ReducedParams {
                    g1: b.g1.rad_per_second(),
                    g2: b.g2.rad_per_second(),
                    kappa: b.kappa.rad_per_second(),
                    splitting: b.Delta.rad_per_second(),
                    gamma: b.gamma.rad_per_second(),
                    n0: b.n0,
                    n: b.n,
                    tau: b.tau.seconds(),
                };
                rp.validate().map_err(CliError::compute("reduced parameters"))?;
                let design = rp.design().map_err(CliError::compute("reduced parameters"))?;
                Ok(Resolved { design, warnings: Vec::new(), working_point: None, reduced: Some(rp), dimensional: true })
            }
            Params::Physical(b) => {
                let p = b.physical_params()?;
                let cfg = ReduceConfig::default();
                let (reduction, wp) = match b.couplings()? {
                    Some(g) => (reduce_with_couplings(&p, g, &cfg).map_err(CliError::compute("reduction"))?, None),
                    None => {
                        let wp = derive_working_point(&p, WORKING_POINT_TOL, WORKING_POINT_ITER)
                            .map_err(CliError::compute("working point"))?;
                        (reduce(&p, &wp, &cfg).map_err(CliError::compute("reduction"))?, Some(wp))
                    }
                };
                let design = reduction.params.design().map_err(CliError::compute("derived quantities"))?;
                Ok(Resolved {
                    design,
                    warnings: reduction.warnings.iter().map(|w| w.to_string()).collect(),
                    working_point: wp,
                    reduced: Some(reduction.params),
                    dimensional: true,
                })
            }
        }
    }

    pub fn n0(&self) -> f64 {
        match self {
            Params::Design(d) => d.n0,
            Params::Reduced(b) => b.n0,
            Params::Physical(b) => b.n0,
        }
    }
}

/// Set one swept quantity. Sweeping `gamma_over_G` or `G1_over_G2` holds
/// `G` and `r` fixed; `tau` is in seconds for dimensional parameters and in
/// units of `1/G` otherwise.
pub fn apply_sweep(d: &mut Design, variable: SweepVariable, x: f64) {
    match variable {
        SweepVariable::R => d.squeezing = x,
        SweepVariable::Tau => d.squeezing = x * d.gain_scale,
        SweepVariable::N => d.n = x,
        SweepVariable::N0 => d.n0 = x,
        SweepVariable::GammaOverG => d.gamma_over_gain = x,
        SweepVariable::G1OverG2 => d.gain_ratio = x,
    }
}

pub fn sweep_unit(variable: SweepVariable, dimensional: bool) -> &'static str {
    match (variable, dimensional) {
        (SweepVariable::Tau, true) => "s",
        (SweepVariable::Tau, false) => "1/G",
        _ => "1",
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> CliResult<Scenario> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
        match value.get("schema_version") {
            None => return Err(CliError::Config("missing mandatory field schema_version".into())),
            Some(v) if v.as_u64() != Some(SCHEMA_VERSION as u64) => {
                return Err(CliError::Config(format!("unsupported schema_version {v}; expected {SCHEMA_VERSION}")))
            }
            _ => {}
        }
        let s: Scenario = serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// SHA-256 of the compact serialization.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {}; expected {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        if let Some(s) = &self.sweep2 {
            s.validate()?;
        }
        let needs_sweep = !matches!(self.mode, Mode::WorkingPoint);
        if needs_sweep && self.sweep.is_none() {
            return Err(CliError::Config(format!("mode {:?} needs a sweep", self.mode)));
        }
        match self.mode {
            Mode::Heatmap => {
                let (a, b) = match (&self.sweep, &self.sweep2) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Err(CliError::Config("heatmap needs sweep and sweep2".into())),
                };
                if a.variable == b.variable {
                    return Err(CliError::Config("heatmap axes must sweep different variables".into()));
                }
            }
            Mode::NThreshold => {
                if self.sweep.as_ref().map(|s| s.variable) != Some(SweepVariable::GammaOverG) {
                    return Err(CliError::Config("n-threshold sweeps gamma_over_G".into()));
                }
                if self.sweep.as_ref().is_some_and(|s| s.lo <= 0.0 || s.hi >= 1.0) {
                    return Err(CliError::Config("n-threshold needs 0 < gamma_over_G < 1".into()));
                }
            }
            Mode::WorkingPoint => {
                if !matches!(self.params, Params::Physical(_)) {
                    return Err(CliError::Config("working-point needs physical parameters".into()));
                }
                if self.sweep.is_some() {
                    return Err(CliError::Config("working-point takes no sweep".into()));
                }
            }
            _ => {}
        }
        if self.mode != Mode::Heatmap && self.sweep2.is_some() {
            return Err(CliError::Config("sweep2 is only used by heatmaps".into()));
        }
        if let Some(mc) = &self.monte_carlo {
            if mc.trajectories < steerkit_core::dynamics::MIN_TRAJECTORIES {
                return Err(CliError::Config(format!(
                    "monte_carlo.trajectories must be at least {}",
                    steerkit_core::dynamics::MIN_TRAJECTORIES
                )));
            }
        }
        for (name, v) in [
            ("integrator", self.tolerances.integrator),
            ("validate", self.tolerances.validate),
            ("threshold_n", self.tolerances.threshold_n),
            ("r_max", self.tolerances.r_max),
        ] {
            if v.is_some_and(|v| !(v > 0.0 && v.is_finite())) {
                return Err(CliError::Config(format!("tolerance {name} must be positive")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve() -> Scenario {
        Scenario {
            schema_version: 1,
            name: None,
            mode: Mode::Curve,
            params: Params::Design(DesignParams {
                r: 1.0,
                gamma_over_G: 0.1,
                G1_over_G2: 1.0,
                n0: 0.0,
                n: 0.0,
                kappa_over_g1: 1000.0,
                Delta_over_kappa: 1.0,
            }),
            sweep: Some(Sweep::linear(SweepVariable::R, 0.0, 3.0, 301)),
            sweep2: None,
            series: Vec::new(),
            engine: Engine::Closedform,
            output: None,
            seed: None,
            monte_carlo: None,
            tolerances: Tolerances::default(),
        }
    }

    #[test]
    fn round_trip() {
        let s = curve();
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn schema_version_is_mandatory() {
        let text = r#"{"mode": "curve", "params": {"kind": "design", "r": 1, "gamma_over_G": 0, "n0": 0, "n": 0},
                       "sweep": {"variable": "r", "lo": 0, "hi": 1, "points": 3}}"#;
        assert!(matches!(Scenario::from_json(text), Err(CliError::Config(m)) if m.contains("schema_version")));
    }

    #[test]
    fn unknown_fields_and_bad_sweeps_are_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&curve().to_json()).unwrap();
        v["bogus"] = 1.into();
        assert!(Scenario::from_json(&v.to_string()).is_err());
        let mut s = curve();
        s.sweep = Some(Sweep::linear(SweepVariable::R, 1.0, 1.0, 5));
        assert!(s.validate().is_err());
        s.sweep = Some(Sweep::linear(SweepVariable::R, 0.0, 1.0, 1));
        assert!(s.validate().is_err());
        let text = curve().to_json().replace("\"r\",", "\"kappa\",");
        assert!(Scenario::from_json(&text).is_err());
    }

    #[test]
    fn digest_tracks_content() {
        let a = curve();
        let mut b = curve();
        assert_eq!(a.digest(), b.digest());
        b.engine = Engine::Both;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn log_sweep_ends_exactly() {
        let s = Sweep { variable: SweepVariable::N, lo: 1.0, hi: 1000.0, points: 4, scale: Scale::Log };
        let v = s.values();
        assert_eq!(v[0], 1.0);
        assert!((v[1] - 10.0).abs() < 1e-12 && (v[3] - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn physical_block_needs_one_coupling_route() {
        let mut b = crate::presets::chan11_physical();
        b.E1 = Some(Frequency::mhz(1.0));
        assert!(b.couplings().is_err());
    }
}
