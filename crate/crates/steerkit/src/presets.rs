//! Built-in scenarios for the published figures and device estimates.

use crate::error::{CliError, CliResult};
use crate::scenario::{
    DesignParams, Engine, Mode, Params, PhysicalBlock, Scale, Scenario, Series, Sweep, SweepVariable, Tolerances,
    SCHEMA_VERSION,
};
use crate::units::{Duration, Frequency};

pub const NAMES: [&str; 9] = ["fig3a", "fig3b", "fig4", "inset", "chan11", "lehnert13", "oracle", "adiabatic", "cross"];

/// Points per curve.
pub const CURVE_POINTS: usize = 301;
/// Points per heatmap axis.
pub const HEATMAP_POINTS: usize = 201;

pub fn by_name(name: &str) -> CliResult<Scenario> {
    match name {
        "fig3a" | "fig3" => Ok(fig3a()),
        "fig3b" => Ok(fig3b()),
        "fig4" => Ok(fig4()),
        "inset" => Ok(inset()),
        "chan11" => Ok(chan11()),
        "lehnert13" => Ok(lehnert13()),
        "oracle" => Ok(oracle()),
        "adiabatic" => Ok(adiabatic()),
        "cross" => Ok(cross()),
        _ => Err(CliError::Config(format!("unknown preset {name:?}; known: {}", NAMES.join(", ")))),
    }
}

fn design(r: f64, gamma_over_g: f64, n0: f64, n: f64) -> DesignParams {
    DesignParams { r, gamma_over_G: gamma_over_g, G1_over_G2: 1.0, n0, n, kappa_over_g1: 1000.0, Delta_over_kappa: 1.0 }
}

fn scenario(name: &str, mode: Mode, params: DesignParams, sweep: Sweep) -> Scenario {
    Scenario {
        schema_version: SCHEMA_VERSION,
        name: Some(name.into()),
        mode,
        params: Params::Design(params),
        sweep: Some(sweep),
        sweep2: None,
        series: Vec::new(),
        engine: Engine::Closedform,
        output: None,
        seed: None,
        monte_carlo: None,
        tolerances: Tolerances::default(),
    }
}

fn occupations(label: &str, n0: f64, n: f64) -> Series {
    Series { label: Some(label.into()), n0: Some(n0), n: Some(n), ..Series::default() }
}

/// `E_{m|W}` against `r` at `γ/G = 0.1` for `(n₀, n)` = (0, 0), (0.5, 0.5), (5, 5).
pub fn fig3a() -> Scenario {
    let mut s = scenario(
        "fig3a",
        Mode::Curve,
        design(0.0, 0.1, 0.0, 0.0),
        Sweep::linear(SweepVariable::R, 0.0, 3.0, CURVE_POINTS),
    );
    s.series = vec![
        occupations("n0=0,n=0", 0.0, 0.0),
        occupations("n0=0.5,n=0.5", 0.5, 0.5),
        occupations("n0=5,n=5", 5.0, 5.0),
    ];
    s
}

/// `E_{m|W}` against `r` at `γ/G = 0.1`, `n₀ = 0` for `n` = 100, 600, 1000.
pub fn fig3b() -> Scenario {
    let mut s = scenario(
        "fig3b",
        Mode::Curve,
        design(0.0, 0.1, 0.0, 0.0),
        Sweep::linear(SweepVariable::R, 0.0, 10.0, CURVE_POINTS),
    );
    s.series = [100.0, 600.0, 1000.0].iter().map(|&n| occupations(&format!("n={n}"), 0.0, n)).collect();
    s
}

/// `E_{m|W}` over `(r, γ/G)` at `n₀ = n = 0`.
pub fn fig4() -> Scenario {
    let mut s = scenario(
        "fig4",
        Mode::Heatmap,
        design(1.0, 0.1, 0.0, 0.0),
        Sweep::linear(SweepVariable::R, 0.025, 5.0, HEATMAP_POINTS),
    );
    s.sweep2 = Some(Sweep::linear(SweepVariable::GammaOverG, 0.01, 2.0, HEATMAP_POINTS));
    s
}

/// Largest bath occupation that still permits steering, against `γ/G`.
pub fn inset() -> Scenario {
    scenario(
        "inset",
        Mode::NThreshold,
        design(1.0, 0.1, 0.0, 0.0),
        Sweep { variable: SweepVariable::GammaOverG, lo: 0.02, hi: 0.3, points: 57, scale: Scale::Linear },
    )
}

/// Optomechanical crystal parameters: `g/2π = 40.7 MHz`, `κ/2π = 500 MHz`,
/// `Δ = κ`, `ω_m/2π = 3.68 GHz`, `γ/2π = 35 kHz`, near 1537 nm.
pub fn chan11_physical() -> PhysicalBlock {
    PhysicalBlock {
        omega1: Frequency::ghz(195_050.91),
        omega2: Frequency::ghz(195_049.91),
        omega_m: Frequency::ghz(3.68),
        omega_L: Frequency::ghz(195_054.09),
        kappa1: Frequency::mhz(500.0),
        kappa2: Frequency::mhz(500.0),
        gamma: Frequency::khz(35.0),
        g01: None,
        g02: None,
        E1: None,
        E2: None,
        g1: Some(Frequency::mhz(40.7)),
        g2: Some(Frequency::mhz(40.7)),
        n0: 0.85,
        n: 0.85,
        tau: Duration::ns(100.0),
    }
}

pub fn chan11() -> Scenario {
    Scenario {
        schema_version: SCHEMA_VERSION,
        name: Some("chan11".into()),
        mode: Mode::WorkingPoint,
        params: Params::Physical(chan11_physical()),
        sweep: None,
        sweep2: None,
        series: Vec::new(),
        engine: Engine::Closedform,
        output: None,
        seed: None,
        monte_carlo: None,
        tolerances: Tolerances::default(),
    }
}

/// Electromechanical estimate: `n₀ = 0.5`, `n = 37.8`, `γ/G = 1.75×10⁻³`.
pub fn lehnert13() -> Scenario {
    scenario(
        "lehnert13",
        Mode::Curve,
        design(0.0, 1.75e-3, 0.5, 37.8),
        Sweep::linear(SweepVariable::R, 0.0, 3.0, CURVE_POINTS),
    )
}

/// Closed form against the propagated reduced model.
pub fn oracle() -> Scenario {
    let mut s = scenario(
        "oracle",
        Mode::ValidateOracle,
        design(1.0, 0.0, 0.0, 0.0),
        Sweep::linear(SweepVariable::R, 0.25, 2.0, 8),
    );
    for g in [0.0, 0.05, 0.1] {
        for (n0, n) in [(0.0, 0.0), (0.5, 5.0), (5.0, 100.0)] {
            for ratio in [1.0, 2.0] {
                s.series.push(Series {
                    label: Some(format!("gamma_over_G={g},n0={n0},n={n},G1_over_G2={ratio}")),
                    gamma_over_G: Some(g),
                    n0: Some(n0),
                    n: Some(n),
                    G1_over_G2: Some(ratio),
                    ..Series::default()
                });
            }
        }
    }
    s
}

/// Full three-mode model against the reduced one at `κ/g = 20`, `γ/G = 0.01`.
pub fn adiabatic() -> Scenario {
    let mut params = design(1.0, 0.01, 0.0, 0.0);
    params.kappa_over_g1 = 20.0;
    scenario("adiabatic", Mode::ValidateAdiabatic, params, Sweep::linear(SweepVariable::R, 0.5, 1.0, 3))
}

/// Cavity cross correlation from the closed form and the oracle.
pub fn cross() -> Scenario {
    let mut s = scenario(
        "cross",
        Mode::CrossCorrelation,
        design(1.0, 0.0, 0.0, 0.0),
        Sweep::linear(SweepVariable::R, 0.1, 1.0, 10),
    );
    s.engine = Engine::Both;
    s.series = [0.0, 0.1]
        .iter()
        .map(|&g| Series { label: Some(format!("gamma_over_G={g}")), gamma_over_G: Some(g), ..Series::default() })
        .collect();
    s
}
