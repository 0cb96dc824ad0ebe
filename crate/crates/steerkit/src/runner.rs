//! Scenario execution: parallel point evaluation with index-ordered assembly.

use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use steerkit_core::closedform::{cross_correlation, moment_set, steering_collective, steering_single};
use steerkit_core::covariance::{ModeLabel, OutputCovariance, Quadrature};
use steerkit_core::dynamics::{
    build_reduced_model, moments_from_covariance, propagate_output_covariance, standard_modes,
    standard_output_covariance, ModelKind, MonteCarloConfig, MonteCarloEstimate, MonteCarloPlan, QuadraticObservable,
    DEFAULT_TOLERANCE,
};
use steerkit_core::model::{derive_working_point, derived_quantities, DerivedQuantities, Design};
use steerkit_core::steering::{half_contour, noise_threshold, steering_product};
use steerkit_core::{Cavity, MomentSet};

use crate::error::{CliError, CliResult};
use crate::scenario::{apply_sweep, sweep_unit, Engine, Mode, Params, Resolved, Scenario, Series, SweepVariable};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const DEFAULT_ORACLE_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_ADIABATIC_TOLERANCE: f64 = 5e-2;
pub const DEFAULT_THRESHOLD_TOLERANCE: f64 = 0.5;
pub const DEFAULT_R_MAX: f64 = 10.0;

/// Relative differences use at least the vacuum variance as scale.
pub const RELATIVE_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses all cores.
    pub threads: Option<usize>,
    /// Overrides the scenario seed.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    fn new(name: impl Into<String>, unit: impl Into<String>) -> Column {
        Column { name: name.into(), unit: unit.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationSummary {
    pub max_relative: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub scenario: Scenario,
    pub digest: String,
    pub version: &'static str,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
    /// Mode-specific results that are not tabular (heatmap contour).
    pub extra: serde_json::Map<String, serde_json::Value>,
    pub validation: Option<ValidationSummary>,
    pub wall_time: std::time::Duration,
}

/// Run on a dedicated pool of `opts.threads` workers.
pub fn run(scenario: &Scenario, opts: &RunOptions) -> CliResult<RunRecord> {
    scenario.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = opts.threads {
        if t == 0 {
            return Err(CliError::Config("thread count must be positive".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let start = Instant::now();
    let mut record = pool.install(|| execute(scenario, opts))?;
    record.wall_time = start.elapsed();
    Ok(record)
}

struct Table {
    columns: Vec<Column>,
    rows: Vec<Vec<f64>>,
    warnings: Vec<String>,
    extra: serde_json::Map<String, serde_json::Value>,
    validation: Option<ValidationSummary>,
}

fn execute(scenario: &Scenario, opts: &RunOptions) -> CliResult<RunRecord> {
    let resolved = scenario.params.resolve()?;
    let ctx = Context { scenario, resolved: &resolved, seed: opts.seed.or(scenario.seed).unwrap_or(0) };
    let mut table = match scenario.mode {
        Mode::Curve => ctx.grouped(&CURVE)?,
        Mode::ValidateOracle => ctx.grouped(&VALIDATE_ORACLE)?,
        Mode::ValidateAdiabatic => ctx.grouped(&VALIDATE_ADIABATIC)?,
        Mode::CrossCorrelation => ctx.grouped(&CROSS)?,
        Mode::NThreshold => ctx.grouped(&THRESHOLD)?,
        Mode::Heatmap => ctx.heatmap()?,
        Mode::WorkingPoint => ctx.working_point()?,
    };
    let mut warnings = resolved.warnings.clone();
    warnings.append(&mut table.warnings);
    Ok(RunRecord {
        scenario: scenario.clone(),
        digest: scenario.digest(),
        version: TOOL_VERSION,
        columns: table.columns,
        rows: table.rows,
        warnings,
        extra: table.extra,
        validation: table.validation,
        wall_time: std::time::Duration::ZERO,
    })
}

struct Context<'a> {
    scenario: &'a Scenario,
    resolved: &'a Resolved,
    seed: u64,
}

/// Per-series quantities of one mode.
struct GroupSpec {
    quantities: fn(&Context) -> Vec<Column>,
    evaluate: fn(&Context, &Design, usize) -> steerkit_core::Result<Vec<f64>>,
    /// Index of a per-group relative discrepancy, for validation.
    discrepancy: fn(&Context) -> Option<usize>,
    /// Tolerance when the group is validated.
    default_tolerance: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(RELATIVE_FLOOR)
}

impl Context<'_> {
    fn tol(&self) -> f64 {
        self.scenario.tolerances.integrator.unwrap_or(DEFAULT_TOLERANCE)
    }

    fn engine(&self) -> Engine {
        self.scenario.engine
    }

    fn series(&self) -> Vec<Series> {
        if self.scenario.series.is_empty() {
            vec![Series::default()]
        } else {
            self.scenario.series.clone()
        }
    }

    fn grouped(&self, spec: &GroupSpec) -> CliResult<Table> {
        let sweep = self.scenario.sweep.as_ref().expect("validated");
        let xs = sweep.values();
        let series = self.series();
        let quantities = (spec.quantities)(self);
        let discrepancy = (spec.discrepancy)(self);
        let mut columns =
            vec![Column::new(sweep.variable.name(), sweep_unit(sweep.variable, self.resolved.dimensional))];
        for s in &series {
            let label = s.display_label();
            for q in &quantities {
                let name = if label.is_empty() { q.name.clone() } else { format!("{}[{label}]", q.name) };
                columns.push(Column::new(name, q.unit.clone()));
            }
        }
        let width = quantities.len();
        let jobs: Vec<(usize, usize)> = (0..xs.len()).flat_map(|k| (0..series.len()).map(move |s| (k, s))).collect();
        let results: Vec<steerkit_core::Result<Vec<f64>>> = jobs
            .par_iter()
            .map(|&(k, s)| {
                let mut d = self.resolved.design;
                series[s].apply(&mut d);
                apply_sweep(&mut d, sweep.variable, xs[k]);
                (spec.evaluate)(self, &d, k)
            })
            .collect();

        let mut rows = Vec::with_capacity(xs.len());
        let mut warnings = Vec::new();
        let mut worst: f64 = 0.0;
        let mut failed = false;
        let mut results = results.into_iter();
        for (k, &x) in xs.iter().enumerate() {
            let mut row = vec![x];
            for s in &series {
                match results.next().expect("one result per job") {
                    Ok(v) => {
                        if let Some(i) = discrepancy {
                            if v[i].is_nan() {
                                failed = true;
                            }
                            worst = worst.max(v[i]);
                        }
                        row.extend(v);
                    }
                    Err(e) => {
                        let label = s.display_label();
                        let at = if label.is_empty() { String::new() } else { format!(" [{label}]") };
                        warnings.push(format!("point {k} ({} = {x}){at}: {e}", sweep.variable.name()));
                        failed = true;
                        row.extend(std::iter::repeat_n(f64::NAN, width));
                    }
                }
            }
            rows.push(row);
        }
        let validation = discrepancy.map(|_| {
            let tolerance = self.scenario.tolerances.validate.unwrap_or(spec.default_tolerance);
            ValidationSummary { max_relative: worst, tolerance, passed: !failed && worst <= tolerance }
        });
        Ok(Table { columns, rows, warnings, extra: serde_json::Map::new(), validation })
    }

    fn heatmap(&self) -> CliResult<Table> {
        if !self.scenario.series.is_empty() {
            return Err(CliError::Config("heatmaps take no series".into()));
        }
        let (sx, sy) =
            (self.scenario.sweep.as_ref().expect("validated"), self.scenario.sweep2.as_ref().expect("validated"));
        let (xs, ys) = (sx.values(), sy.values());
        let engine = self.engine();
        let dimensional = self.resolved.dimensional;
        let mut columns = vec![
            Column::new(sy.variable.name(), sweep_unit(sy.variable, dimensional)),
            Column::new(sx.variable.name(), sweep_unit(sx.variable, dimensional)),
        ];
        match engine {
            Engine::Closedform => columns.push(Column::new("E_mW", "1")),
            Engine::Oracle => columns.push(Column::new("E_mW_oracle", "1")),
            Engine::Both => {
                columns.push(Column::new("E_mW", "1"));
                columns.push(Column::new("E_mW_oracle", "1"));
                columns.push(Column::new("rel_diff", "1"));
            }
        }
        columns.push(Column::new("steering", "1"));
        let jobs: Vec<(usize, usize)> = (0..ys.len()).flat_map(|i| (0..xs.len()).map(move |j| (i, j))).collect();
        let values: Vec<steerkit_core::Result<Vec<f64>>> = jobs
            .par_iter()
            .map(|&(i, j)| {
                let mut d = self.resolved.design;
                apply_sweep(&mut d, sy.variable, ys[i]);
                apply_sweep(&mut d, sx.variable, xs[j]);
                let mut v = Vec::new();
                if engine != Engine::Oracle {
                    v.push(collective_closed(&d)?);
                }
                if engine != Engine::Closedform {
                    let oc = oracle_covariance(&d, ModelKind::Reduced, self.tol())?;
                    v.push(steering_product(&oc, ModeLabel::MirrorOut, ModeLabel::WOut, false)?.value);
                }
                if engine == Engine::Both {
                    v.push(rel(v[1], v[0]));
                }
                Ok(v)
            })
            .collect();
        let width = columns.len() - 3;
        let mut rows = Vec::with_capacity(jobs.len());
        let mut warnings = Vec::new();
        let mut grid = DMatrix::from_element(ys.len(), xs.len(), f64::NAN);
        for (&(i, j), v) in jobs.iter().zip(values) {
            let v = v.unwrap_or_else(|e| {
                warnings.push(format!(
                    "point ({} = {}, {} = {}): {e}",
                    sy.variable.name(),
                    ys[i],
                    sx.variable.name(),
                    xs[j]
                ));
                vec![f64::NAN; width]
            });
            grid[(i, j)] = v[0];
            let flag = if v[0].is_nan() {
                f64::NAN
            } else if v[0] < steerkit_core::steering::STEERING_BOUND {
                1.0
            } else {
                0.0
            };
            let mut row = vec![ys[i], xs[j]];
            row.extend(v);
            row.push(flag);
            rows.push(row);
        }
        let contour = half_contour(&xs, &ys, &grid);
        let mut extra = serde_json::Map::new();
        extra.insert(
            "contour".into(),
            serde_json::json!({
                "level": steerkit_core::steering::STEERING_BOUND,
                "x": sx.variable.name(),
                "y": sy.variable.name(),
                "points": contour.iter().map(|&(x, y)| [x, y]).collect::<Vec<_>>(),
            }),
        );
        Ok(Table { columns, rows, warnings, extra, validation: None })
    }

    fn working_point(&self) -> CliResult<Table> {
        let Params::Physical(block) = &self.scenario.params else {
            return Err(CliError::Config("working-point needs physical parameters".into()));
        };
        let r = self.resolved;
        let rp = r.reduced.expect("physical parameters reduce");
        let dq = derived_quantities(&rp).map_err(CliError::compute("derived quantities"))?;
        let mut warnings = Vec::new();
        let wp = match r.working_point {
            Some(wp) => Some(wp),
            None => {
                let mut p = block.physical_params()?;
                match (block.g01, block.g02) {
                    (Some(_), Some(_)) => {
                        let [e1, e2] = p.drives_for_couplings([rp.g1, rp.g2]).map_err(CliError::compute("drives"))?;
                        p.e1 = e1;
                        p.e2 = e2;
                        Some(derive_working_point(&p, 1e-12, 10_000).map_err(CliError::compute("working point"))?)
                    }
                    _ => {
                        warnings.push("no single-photon couplings given; mean fields are not reported".into());
                        None
                    }
                }
            }
        };
        let two_pi = std::f64::consts::TAU;
        let mean = |f: &dyn Fn(&steerkit_core::WorkingPoint) -> f64| wp.as_ref().map(f).unwrap_or(f64::NAN);
        let entries: Vec<(&str, &str, f64)> = vec![
            ("x_s", "1", mean(&|w| w.x_s)),
            ("alpha1_abs", "1", mean(&|w| w.alpha[0].norm())),
            ("alpha2_abs", "1", mean(&|w| w.alpha[1].norm())),
            ("Delta1_eff", "rad/s", mean(&|w| w.detuning[0])),
            ("Delta2_eff", "rad/s", mean(&|w| w.detuning[1])),
            ("g1", "rad/s", rp.g1),
            ("g2", "rad/s", rp.g2),
            ("kappa", "rad/s", rp.kappa),
            ("Delta", "rad/s", rp.splitting),
            ("gamma", "rad/s", rp.gamma),
            ("G1", "rad/s", dq.gain1),
            ("G2", "rad/s", dq.gain2),
            ("G", "rad/s", dq.net_gain),
            ("G1_over_2pi", "Hz", dq.gain1 / two_pi),
            ("G2_over_2pi", "Hz", dq.gain2 / two_pi),
            ("gamma_over_G", "1", dq.gamma_over_gain()),
            ("gamma_over_G1_plus_G2", "1", dq.gamma / (dq.gain1 + dq.gain2)),
            ("delta", "rad/s", dq.shift),
            ("phi", "rad", dq.phase),
            ("r", "1", dq.squeezing),
            ("g1_over_kappa", "1", rp.g1 / rp.kappa),
            ("kappa_over_omega_m", "1", rp.kappa / block.omega_m.rad_per_second()),
        ];
        Ok(Table {
            columns: entries.iter().map(|&(n, u, _)| Column::new(n, u)).collect(),
            rows: vec![entries.iter().map(|e| e.2).collect()],
            warnings,
            extra: serde_json::Map::new(),
            validation: None,
        })
    }
}

/// Rates at `d`, allowing a zero pulse area.
pub fn derived_at(d: &Design) -> steerkit_core::Result<DerivedQuantities> {
    if d.squeezing == 0.0 {
        let mut p = *d;
        p.squeezing = 1.0;
        return Ok(p.derived()?.with_squeezing(0.0));
    }
    d.derived()
}

fn collective_closed(d: &Design) -> steerkit_core::Result<f64> {
    steering_collective(&derived_at(d)?, d.n0, d.n)
}

/// Standard output covariance (`A_m`, `A_1`, `A_2`, `B̃`, `W`) from propagation.
pub fn oracle_covariance(d: &Design, kind: ModelKind, tol: f64) -> steerkit_core::Result<OutputCovariance> {
    standard_output_covariance(&d.reduced()?, kind, tol)
}

fn witnesses(oc: &OutputCovariance) -> steerkit_core::Result<[f64; 3]> {
    Ok([
        steering_product(oc, ModeLabel::MirrorOut, ModeLabel::WOut, false)?.value,
        steering_product(oc, ModeLabel::MirrorOut, ModeLabel::CavityOut(Cavity::One), false)?.value,
        steering_product(oc, ModeLabel::MirrorOut, ModeLabel::CavityOut(Cavity::Two), false)?.value,
    ])
}

fn closed_witnesses(d: &Design) -> steerkit_core::Result<[f64; 3]> {
    let dq = derived_at(d)?;
    Ok([
        steering_collective(&dq, d.n0, d.n)?,
        steering_single(&dq, d.n0, d.n, Cavity::One)?,
        steering_single(&dq, d.n0, d.n, Cavity::Two)?,
    ])
}

const WITNESS_NAMES: [&str; 3] = ["E_mW", "E_m1", "E_m2"];

const CURVE: GroupSpec = GroupSpec {
    quantities: |ctx| {
        let mut c: Vec<Column> = Vec::new();
        if ctx.engine() != Engine::Oracle {
            c.extend(WITNESS_NAMES.iter().map(|n| Column::new(*n, "1")));
        }
        if ctx.engine() != Engine::Closedform {
            c.extend(WITNESS_NAMES.iter().map(|n| Column::new(format!("{n}_oracle"), "1")));
        }
        if ctx.engine() == Engine::Both {
            c.push(Column::new("max_rel_diff", "1"));
        }
        c
    },
    evaluate: |ctx, d, _| {
        let mut v = Vec::new();
        if ctx.engine() != Engine::Oracle {
            v.extend(closed_witnesses(d)?);
        }
        if ctx.engine() != Engine::Closedform {
            v.extend(witnesses(&oracle_covariance(d, ModelKind::Reduced, ctx.tol())?)?);
        }
        if ctx.engine() == Engine::Both {
            let worst = (0..3).map(|i| rel(v[i + 3], v[i])).fold(0.0, f64::max);
            v.push(worst);
        }
        Ok(v)
    },
    discrepancy: |ctx| (ctx.engine() == Engine::Both).then_some(6),
    default_tolerance: DEFAULT_ORACLE_TOLERANCE,
};

fn moment_entries(m: &MomentSet) -> [f64; 7] {
    [m.var_xm_out, m.var_x1_out, m.var_x2_out, m.var_xw_out, m.cov_xm_p1, m.cov_xm_p2, m.cov_xm_pw]
}

const VALIDATE_ORACLE: GroupSpec = GroupSpec {
    quantities: |_| {
        let mut c = vec![Column::new("max_rel_diff", "1")];
        for n in WITNESS_NAMES {
            c.push(Column::new(n, "1"));
            c.push(Column::new(format!("{n}_oracle"), "1"));
        }
        c.push(Column::new("U_drift", "1"));
        c.push(Column::new("physicality_margin", "1"));
        c
    },
    evaluate: |ctx, d, _| {
        let dq = derived_at(d)?;
        let oc = oracle_covariance(d, ModelKind::Reduced, ctx.tol())?;
        let numeric = moments_from_covariance(&oc)?;
        let closed = moment_set(&dq, d.n0, d.n)?;
        let cw = closed_witnesses(d)?;
        let ow = witnesses(&oc)?;
        let mut worst: f64 = 0.0;
        for (a, b) in moment_entries(&numeric).into_iter().zip(moment_entries(&closed)) {
            worst = worst.max(rel(a, b));
        }
        for (a, b) in ow.iter().zip(&cw) {
            worst = worst.max(rel(*a, *b));
        }
        let rp = d.reduced()?;
        let model = build_reduced_model(&rp)?;
        let u = propagate_output_covariance(
            &model,
            &standard_modes(&[ModeLabel::UOut, ModeLabel::UInTilde], &dq),
            rp.tau,
            ctx.tol(),
        )?;
        let drift =
            (u.variance(Quadrature::x(ModeLabel::UOut))? - u.variance(Quadrature::x(ModeLabel::UInTilde))?).abs();
        let mut v = vec![worst];
        for i in 0..3 {
            v.push(cw[i]);
            v.push(ow[i]);
        }
        v.push(drift);
        v.push(oc.physicality_margin());
        Ok(v)
    },
    discrepancy: |_| Some(0),
    default_tolerance: DEFAULT_ORACLE_TOLERANCE,
};

/// Largest entry-wise relative difference between two covariances over the
/// same modes.
pub fn covariance_discrepancy(a: &OutputCovariance, b: &OutputCovariance) -> f64 {
    a.sigma().iter().zip(b.sigma().iter()).map(|(x, y)| rel(*x, *y)).fold(0.0, f64::max)
}

const VALIDATE_ADIABATIC: GroupSpec = GroupSpec {
    quantities: |_| {
        vec![
            Column::new("max_rel_diff", "1"),
            Column::new("var_Xm_full", "1"),
            Column::new("var_Xm_reduced", "1"),
            Column::new("cov_Xm_PW_full", "1"),
            Column::new("cov_Xm_PW_reduced", "1"),
        ]
    },
    evaluate: |ctx, d, _| {
        let full = oracle_covariance(d, ModelKind::Full, ctx.tol())?;
        let reduced = oracle_covariance(d, ModelKind::Reduced, ctx.tol())?;
        let (mf, mr) = (moments_from_covariance(&full)?, moments_from_covariance(&reduced)?);
        Ok(vec![covariance_discrepancy(&full, &reduced), mf.var_xm_out, mr.var_xm_out, mf.cov_xm_pw, mr.cov_xm_pw])
    },
    discrepancy: |_| Some(0),
    default_tolerance: DEFAULT_ADIABATIC_TOLERANCE,
};

/// `|⟨A₁† A₂⟩|` from a covariance containing both cavity outputs.
pub fn coherence_from_covariance(oc: &OutputCovariance) -> steerkit_core::Result<f64> {
    let (a, b) = (ModeLabel::CavityOut(Cavity::One), ModeLabel::CavityOut(Cavity::Two));
    let c = |p: Quadrature, q: Quadrature| oc.covariance(p, q);
    let re = 0.5 * (c(Quadrature::x(a), Quadrature::x(b))? + c(Quadrature::p(a), Quadrature::p(b))?);
    let im = 0.5 * (c(Quadrature::x(a), Quadrature::p(b))? - c(Quadrature::p(a), Quadrature::x(b))?);
    Ok(re.hypot(im))
}

/// Monte Carlo over the two cavity outputs, chunks run in parallel and
/// reduced in index order.
pub fn monte_carlo_coherence(
    d: &Design,
    trajectories: usize,
    steps: Option<usize>,
    seed: u64,
) -> steerkit_core::Result<MonteCarloEstimate> {
    let rp = d.reduced()?;
    let dq = derived_quantities(&rp)?;
    let model = build_reduced_model(&rp)?;
    let labels = [ModeLabel::CavityOut(Cavity::One), ModeLabel::CavityOut(Cavity::Two)];
    let modes = standard_modes(&labels, &dq);
    let observables = QuadraticObservable::coherence(&labels, labels[0], labels[1])?.to_vec();
    let mut config = MonteCarloConfig::new(trajectories, seed);
    config.steps = steps;
    let plan = MonteCarloPlan::new(&model, &modes, rp.tau, config, observables)?;
    run_plan(&plan)
}

pub fn run_plan(plan: &MonteCarloPlan) -> steerkit_core::Result<MonteCarloEstimate> {
    let chunks: Vec<_> = (0..plan.chunk_count()).into_par_iter().map(|i| plan.run_chunk(i)).collect();
    plan.finish(&chunks)
}

const CROSS: GroupSpec = GroupSpec {
    quantities: |ctx| {
        let mut c = Vec::new();
        if ctx.engine() != Engine::Oracle {
            c.push(Column::new("coherence", "1"));
        }
        if ctx.engine() != Engine::Closedform {
            c.push(Column::new("coherence_oracle", "1"));
        }
        if ctx.engine() == Engine::Both {
            c.push(Column::new("rel_diff", "1"));
        }
        if ctx.scenario.monte_carlo.is_some() {
            c.push(Column::new("coherence_mc", "1"));
            c.push(Column::new("coherence_mc_se", "1"));
        }
        c
    },
    evaluate: |ctx, d, k| {
        let mut v = Vec::new();
        if ctx.engine() != Engine::Oracle {
            v.push(cross_correlation(&derived_at(d)?, d.n0, d.n)?);
        }
        if ctx.engine() != Engine::Closedform {
            v.push(coherence_from_covariance(&oracle_covariance(d, ModelKind::Reduced, ctx.tol())?)?);
        }
        if ctx.engine() == Engine::Both {
            v.push(rel(v[1], v[0]));
        }
        if let Some(mc) = &ctx.scenario.monte_carlo {
            // one random stream family per sweep point
            let seed = ctx.seed ^ ((k as u64) << 32);
            let est = monte_carlo_coherence(d, mc.trajectories, mc.steps, seed)?.magnitude(0, 1);
            v.push(est.mean);
            v.push(est.standard_error);
        }
        Ok(v)
    },
    discrepancy: |ctx| (ctx.engine() == Engine::Both).then_some(2),
    default_tolerance: DEFAULT_ORACLE_TOLERANCE,
};

const THRESHOLD: GroupSpec = GroupSpec {
    quantities: |_| {
        vec![
            Column::new("n_threshold", "1"),
            Column::new("bracket_lo", "1"),
            Column::new("bracket_hi", "1"),
            Column::new("sup_r", "1"),
        ]
    },
    evaluate: |ctx, d, _| {
        let t = &ctx.scenario.tolerances;
        let res = noise_threshold(
            d.gamma_over_gain,
            d.n0,
            t.r_max.unwrap_or(DEFAULT_R_MAX),
            t.threshold_n.unwrap_or(DEFAULT_THRESHOLD_TOLERANCE),
        )?;
        Ok(vec![res.value, res.bracket.0, res.bracket.1, res.sup_location.unwrap_or(f64::NAN)])
    },
    discrepancy: |_| None,
    default_tolerance: DEFAULT_ORACLE_TOLERANCE,
};

/// Sweep variable of a finished record's first column, when it has one.
pub fn sweep_variable(record: &RunRecord) -> Option<SweepVariable> {
    record.scenario.sweep.as_ref().map(|s| s.variable)
}
