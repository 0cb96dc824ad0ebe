//! Stochastic cross-check of the moment propagation.
//!
//! Each trajectory samples the initial state and the input noise as classical
//! Gaussian variables whose covariances equal the symmetric-ordered quantum
//! intensities, and integrates the augmented linear system with the
//! stochastic Heun scheme. For a linear system with additive noise one step
//! is an affine map `y ← Pₖ y + Qₖ ΔW`, so the maps are built once per plan.
//!
//! Trajectory `i` draws from its own ChaCha8 stream `(seed, i)`. Trajectories
//! are grouped into fixed-size chunks, each chunk sums in index order, and
//! chunks are combined by pairwise summation in index order. The result
//! depends only on `(seed, trajectories, steps, chunk_size)`, never on how
//! chunks are scheduled across threads.
//!
//! All modes have zero mean, so second moments are estimated about zero.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{propagate_output_covariance, Augmented, LinearModel, ModeSource, OutputMode};
use crate::covariance::{ModeLabel, OutputCovariance};
use crate::{Error, Result};

/// Smallest trajectory count accepted.
pub const MIN_TRAJECTORIES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloConfig {
    pub trajectories: usize,
    pub seed: u64,
    /// Time steps over `[0, τ]`; chosen from the fastest rate when `None`.
    pub steps: Option<usize>,
    pub chunk_size: usize,
    /// Fail with `InsufficientTrajectories` when any covariance entry has a
    /// larger standard error.
    pub max_standard_error: Option<f64>,
}

impl MonteCarloConfig {
    pub fn new(trajectories: usize, seed: u64) -> MonteCarloConfig {
        MonteCarloConfig { trajectories, seed, steps: None, chunk_size: 1000, max_standard_error: None }
    }
}

/// `vᵀ M v` over the output quadratures (in label order).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticObservable {
    pub matrix: DMatrix<f64>,
}

impl QuadraticObservable {
    /// Real and imaginary parts of `⟨a† b⟩` for two distinct modes among
    /// `labels`.
    pub fn coherence(labels: &[ModeLabel], a: ModeLabel, b: ModeLabel) -> Result<[QuadraticObservable; 2]> {
        let find = |l: ModeLabel| labels.iter().position(|&x| x == l).ok_or(Error::MissingModes(l));
        let (i, j) = (2 * find(a)?, 2 * find(b)?);
        if i == j {
            return Err(Error::InvalidParams("coherence needs two distinct modes".into()));
        }
        let d = 2 * labels.len();
        // a†b = [(XaXb + PaPb) + i(XaPb − PaXb)]/2
        let mut re = DMatrix::zeros(d, d);
        let mut im = DMatrix::zeros(d, d);
        let put = |m: &mut DMatrix<f64>, r: usize, c: usize, v: f64| {
            m[(r, c)] += v;
            m[(c, r)] += v;
        };
        put(&mut re, i, j, 0.25);
        put(&mut re, i + 1, j + 1, 0.25);
        put(&mut im, i, j + 1, 0.25);
        put(&mut im, i + 1, j, -0.25);
        Ok([QuadraticObservable { matrix: re }, QuadraticObservable { matrix: im }])
    }

    fn value(&self, v: &[f64]) -> f64 {
        let m = &self.matrix;
        let mut s = 0.0;
        for c in 0..v.len() {
            for r in 0..v.len() {
                s += v[r] * m[(r, c)] * v[c];
            }
        }
        s
    }
}

/// Partial sums of one chunk of trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkMoments {
    count: u64,
    /// Upper triangle of `Σ vᵢvⱼ`, row major.
    second: Vec<f64>,
    /// Upper triangle of `Σ (vᵢvⱼ)²`.
    fourth: Vec<f64>,
    observables: Vec<f64>,
    /// `Σ oₐ o_b`, full square.
    observable_products: Vec<f64>,
}

impl ChunkMoments {
    fn zeros(out: usize, obs: usize) -> ChunkMoments {
        let tri = out * (out + 1) / 2;
        ChunkMoments {
            count: 0,
            second: vec![0.0; tri],
            fourth: vec![0.0; tri],
            observables: vec![0.0; obs],
            observable_products: vec![0.0; obs * obs],
        }
    }

    fn add(&mut self, other: &ChunkMoments) {
        self.count += other.count;
        for (a, b) in [
            (&mut self.second, &other.second),
            (&mut self.fourth, &other.fourth),
            (&mut self.observables, &other.observables),
            (&mut self.observable_products, &other.observable_products),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}

fn pairwise(chunks: &[ChunkMoments]) -> ChunkMoments {
    if chunks.len() == 1 {
        return chunks[0].clone();
    }
    let (left, right) = chunks.split_at(chunks.len() / 2);
    let mut sum = pairwise(left);
    sum.add(&pairwise(right));
    sum
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableEstimate {
    pub mean: f64,
    pub standard_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloEstimate {
    /// Sample covariance with per-entry standard errors; the commutator is
    /// the deterministic one.
    pub covariance: OutputCovariance,
    pub observables: Vec<ObservableEstimate>,
    /// Covariance of the observable sample means.
    pub observable_covariance: DMatrix<f64>,
    pub trajectories: usize,
    pub steps: usize,
}

impl MonteCarloEstimate {
    /// `|re + i·im|` of two observables and its delta-method standard error.
    pub fn magnitude(&self, re: usize, im: usize) -> ObservableEstimate {
        let (x, y) = (self.observables[re].mean, self.observables[im].mean);
        let c = &self.observable_covariance;
        let mean = libm::hypot(x, y);
        if mean == 0.0 {
            let se = libm::sqrt(c[(re, re)] + c[(im, im)]);
            return ObservableEstimate { mean, standard_error: se };
        }
        let var = (x * x * c[(re, re)] + y * y * c[(im, im)] + 2.0 * x * y * c[(re, im)]) / (mean * mean);
        ObservableEstimate { mean, standard_error: libm::sqrt(var.max(0.0)) }
    }
}

type StepMap = (DMatrix<f64>, DMatrix<f64>);

/// Heun maps `y ← P y + Q ΔW` for `steps` equal steps over `[0, τ]`.
fn step_maps(aug: &Augmented, tau: f64, steps: usize) -> Vec<StepMap> {
    let h = tau / steps as f64;
    let (d, m) = (aug.dim, aug.noise_dim());
    let eye = DMatrix::<f64>::identity(d, d);
    let mut a0 = DMatrix::zeros(d, d);
    let mut l0 = DMatrix::zeros(d, m);
    let mut a1 = DMatrix::zeros(d, d);
    let mut l1 = DMatrix::zeros(d, m);
    aug.matrices(0.0, &mut a0, &mut l0);
    let mut maps = Vec::with_capacity(steps);
    for k in 0..steps {
        aug.matrices((k + 1) as f64 * h, &mut a1, &mut l1);
        let p = &eye + (&a0 + &a1 * (&eye + &a0 * h)) * (0.5 * h);
        let q = (&l0 + &l1) * 0.5 + &a1 * &l0 * (0.5 * h);
        maps.push((p, q));
        core::mem::swap(&mut a0, &mut a1);
        core::mem::swap(&mut l0, &mut l1);
    }
    maps
}

/// Exact output covariance of the discretized scheme (its ensemble mean).
fn scheme_covariance(aug: &Augmented, tau: f64, maps: &[StepMap]) -> DMatrix<f64> {
    let h = tau / maps.len() as f64;
    let noise = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        aug.intensities.len(),
        aug.intensities.iter().map(|n| n * h),
    ));
    let mut sigma = aug.initial_covariance();
    for (p, q) in maps {
        sigma = p * &sigma * p.transpose() + q * &noise * q.transpose();
    }
    &aug.readout * sigma * aug.readout.transpose()
}

/// Gaussian standard error of each second-moment estimate from `n` samples.
fn gaussian_standard_errors(sigma: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(sigma.nrows(), sigma.ncols(), |i, j| {
        libm::sqrt((sigma[(i, i)] * sigma[(j, j)] + sigma[(i, j)] * sigma[(i, j)]) / n as f64)
    })
}

/// Double the step count until halving the step moves every entry of the
/// scheme's covariance by less than a quarter of its standard error.
fn choose_steps(aug: &Augmented, tau: f64, start: usize, trajectories: usize) -> Vec<StepMap> {
    let mut steps = start;
    let mut maps = step_maps(aug, tau, steps);
    let mut sigma = scheme_covariance(aug, tau, &maps);
    while steps < 1 << 20 {
        let finer = step_maps(aug, tau, 2 * steps);
        let finer_sigma = scheme_covariance(aug, tau, &finer);
        let se = gaussian_standard_errors(&finer_sigma, trajectories);
        let ok = (0..se.nrows())
            .all(|i| (0..se.ncols()).all(|j| (sigma[(i, j)] - finer_sigma[(i, j)]).abs() < 0.25 * se[(i, j)]));
        if ok {
            break;
        }
        steps *= 2;
        maps = finer;
        sigma = finer_sigma;
    }
    maps
}

/// Precomputed step maps and readout for a Monte Carlo run.
#[derive(Debug, Clone)]
pub struct MonteCarloPlan {
    config: MonteCarloConfig,
    dim: usize,
    noise_dim: usize,
    steps: usize,
    /// Row-major `Pₖ` and `Qₖ` per step.
    transitions: Vec<(Vec<f64>, Vec<f64>)>,
    noise_scale: Vec<f64>,
    readout: Vec<f64>,
    out_dim: usize,
    initial_sd: Vec<f64>,
    mirror: usize,
    copy: Option<usize>,
    observables: Vec<QuadraticObservable>,
    labels: Vec<ModeLabel>,
    commutator: DMatrix<f64>,
    scheme: DMatrix<f64>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl MonteCarloPlan {
    pub fn new(
        model: &LinearModel,
        modes: &[OutputMode],
        tau: f64,
        config: MonteCarloConfig,
        observables: Vec<QuadraticObservable>,
    ) -> Result<MonteCarloPlan> {
        if config.trajectories < MIN_TRAJECTORIES {
            return Err(Error::InvalidParams(alloc::format!(
                "Monte Carlo needs at least {MIN_TRAJECTORIES} trajectories, got {}",
                config.trajectories
            )));
        }
        if config.chunk_size == 0 {
            return Err(Error::InvalidParams("chunk size must be positive".into()));
        }
        let aug = Augmented::new(model, modes, tau)?;
        let out_dim = aug.readout.nrows();
        for o in &observables {
            if o.matrix.shape() != (out_dim, out_dim) {
                return Err(Error::InvalidParams("observable shape does not match the output modes".into()));
            }
        }
        let commutator = propagate_output_covariance(model, modes, tau, 1e-10)?.commutator().clone();

        let (d, m) = (aug.dim, aug.noise_dim());
        let transitions = match config.steps {
            Some(0) => return Err(Error::InvalidParams("step count must be positive".into())),
            Some(s) => step_maps(&aug, tau, s),
            None => {
                let mut rate =
                    model.drift().row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
                for md in modes {
                    if let ModeSource::Filtered(terms) = &md.source {
                        for t in terms {
                            rate = rate.max(t.kernel.exponent.norm());
                        }
                    }
                }
                let guess = libm::ceil(rate * tau / 0.05);
                if !guess.is_finite() {
                    return Err(Error::InvalidParams("cannot choose a Monte Carlo step".into()));
                }
                choose_steps(&aug, tau, (guess as usize).max(64), config.trajectories)
            }
        };
        let steps = transitions.len();
        let h = tau / steps as f64;
        let scheme = scheme_covariance(&aug, tau, &transitions);
        let transitions = transitions.iter().map(|(p, q)| (row_major(p), row_major(q))).collect();
        let (initial, mirror, copy) = aug.initial_slots();
        Ok(MonteCarloPlan {
            config,
            dim: d,
            noise_dim: m,
            steps,
            transitions,
            noise_scale: aug.intensities.iter().map(|n| libm::sqrt(n * h)).collect(),
            readout: row_major(&aug.readout),
            out_dim,
            initial_sd: initial.iter().map(|n| libm::sqrt(n + 0.5)).collect(),
            mirror,
            copy,
            observables,
            labels: aug.labels.clone(),
            commutator,
            scheme,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Expected value of the sample covariance for this step size.
    pub fn scheme_covariance(&self) -> &DMatrix<f64> {
        &self.scheme
    }

    pub fn chunk_count(&self) -> usize {
        self.config.trajectories.div_ceil(self.config.chunk_size)
    }

    /// Output quadratures of trajectory `index`.
    pub fn trajectory(&self, index: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(index);
        let (d, m) = (self.dim, self.noise_dim);
        let mut y = vec![0.0; d];
        for (k, sd) in self.initial_sd.iter().enumerate() {
            y[2 * k] = sd * rng.sample::<f64, _>(StandardNormal);
            y[2 * k + 1] = sd * rng.sample::<f64, _>(StandardNormal);
        }
        if let Some(cp) = self.copy {
            y[cp] = y[2 * self.mirror];
            y[cp + 1] = y[2 * self.mirror + 1];
        }
        let mut next = vec![0.0; d];
        let mut dw = vec![0.0; m];
        for (p, q) in &self.transitions {
            for (w, s) in dw.iter_mut().zip(&self.noise_scale) {
                *w = s * rng.sample::<f64, _>(StandardNormal);
            }
            for (r, out) in next.iter_mut().enumerate() {
                let pr = &p[r * d..(r + 1) * d];
                let qr = &q[r * m..(r + 1) * m];
                let mut acc = 0.0;
                for (a, b) in pr.iter().zip(&y) {
                    acc += a * b;
                }
                for (a, b) in qr.iter().zip(&dw) {
                    acc += a * b;
                }
                *out = acc;
            }
            core::mem::swap(&mut y, &mut next);
        }
        (0..self.out_dim).map(|r| self.readout[r * d..(r + 1) * d].iter().zip(&y).map(|(a, b)| a * b).sum()).collect()
    }

    /// Sums over the trajectories of chunk `index`.
    pub fn run_chunk(&self, index: usize) -> ChunkMoments {
        let k = self.out_dim;
        let nobs = self.observables.len();
        let mut acc = ChunkMoments::zeros(k, nobs);
        let start = index * self.config.chunk_size;
        let end = (start + self.config.chunk_size).min(self.config.trajectories);
        let mut values = vec![0.0; nobs];
        for t in start..end {
            let v = self.trajectory(t as u64);
            let mut e = 0;
            for i in 0..k {
                for j in i..k {
                    let p = v[i] * v[j];
                    acc.second[e] += p;
                    acc.fourth[e] += p * p;
                    e += 1;
                }
            }
            for (o, val) in self.observables.iter().zip(values.iter_mut()) {
                *val = o.value(&v);
            }
            for a in 0..nobs {
                acc.observables[a] += values[a];
                for b in 0..nobs {
                    acc.observable_products[a * nobs + b] += values[a] * values[b];
                }
            }
            acc.count += 1;
        }
        acc
    }

    /// Combine per-chunk sums (given in chunk index order) into estimates.
    pub fn finish(&self, chunks: &[ChunkMoments]) -> Result<MonteCarloEstimate> {
        if chunks.len() != self.chunk_count() {
            return Err(Error::InvalidParams(alloc::format!(
                "expected {} chunks, got {}",
                self.chunk_count(),
                chunks.len()
            )));
        }
        let total = pairwise(chunks);
        let n = total.count as f64;
        let k = self.out_dim;
        let mut sigma = DMatrix::zeros(k, k);
        let mut se = DMatrix::zeros(k, k);
        let mut e = 0;
        for i in 0..k {
            for j in i..k {
                let mean = total.second[e] / n;
                let var = (total.fourth[e] / n - mean * mean).max(0.0);
                let err = libm::sqrt(var / (n - 1.0));
                sigma[(i, j)] = mean;
                sigma[(j, i)] = mean;
                se[(i, j)] = err;
                se[(j, i)] = err;
                e += 1;
            }
        }
        if let Some(bound) = self.config.max_standard_error {
            let worst = se.amax();
            if worst > bound {
                return Err(Error::InsufficientTrajectories { achieved: worst, bound });
            }
        }
        let nobs = self.observables.len();
        let means: Vec<f64> = total.observables.iter().map(|s| s / n).collect();
        let mut obs_cov = DMatrix::zeros(nobs, nobs);
        for a in 0..nobs {
            for b in 0..nobs {
                obs_cov[(a, b)] = (total.observable_products[a * nobs + b] / n - means[a] * means[b]) / (n - 1.0);
            }
        }
        let observables = (0..nobs)
            .map(|a| ObservableEstimate { mean: means[a], standard_error: libm::sqrt(obs_cov[(a, a)].max(0.0)) })
            .collect();
        let covariance =
            OutputCovariance::new(self.labels.clone(), sigma, self.commutator.clone()).with_standard_errors(se);
        Ok(MonteCarloEstimate {
            covariance,
            observables,
            observable_covariance: obs_cov,
            trajectories: self.config.trajectories,
            steps: self.steps,
        })
    }

    /// Run every chunk sequentially.
    pub fn run(&self) -> Result<MonteCarloEstimate> {
        let chunks: Vec<ChunkMoments> = (0..self.chunk_count()).map(|i| self.run_chunk(i)).collect();
        self.finish(&chunks)
    }
}

/// Sample covariance of the output modes with standard errors.
pub fn monte_carlo_output_covariance(
    model: &LinearModel,
    modes: &[OutputMode],
    tau: f64,
    config: MonteCarloConfig,
) -> Result<OutputCovariance> {
    Ok(MonteCarloPlan::new(model, modes, tau, config, Vec::new())?.run()?.covariance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_full_model, build_reduced_model, standard_modes};
    use crate::model::{derived_quantities, Design, ReducedParams};
    use crate::Cavity;

    fn within(mc: &OutputCovariance, exact: &DMatrix<f64>, sigmas: f64) -> Result<(), (usize, usize, f64, f64, f64)> {
        let se = mc.standard_errors().unwrap();
        for i in 0..exact.nrows() {
            for j in 0..exact.ncols() {
                let diff = (mc.sigma()[(i, j)] - exact[(i, j)]).abs();
                if diff > sigmas * se[(i, j)] {
                    return Err((i, j, mc.sigma()[(i, j)], exact[(i, j)], se[(i, j)]));
                }
            }
        }
        Ok(())
    }

    #[test]
    fn uncoupled_model_samples_inputs() {
        let rp = ReducedParams { g1: 0.0, g2: 0.0, kappa: 5.0, splitting: 5.0, gamma: 1e-9, n0: 2.0, n: 0.0, tau: 0.5 };
        let model = build_full_model(&rp).unwrap();
        let dq = derived_quantities(&Design::new(0.5, 0.0, 1.0, 0.0, 0.0).reduced().unwrap()).unwrap();
        let labels = [ModeLabel::MirrorOut, ModeLabel::CavityOut(Cavity::One), ModeLabel::CavityOut(Cavity::Two)];
        let mut modes = standard_modes(&labels, &dq);
        modes[0].source = ModeSource::MirrorFinal { shift: 0.0 };
        let mc = monte_carlo_output_covariance(&model, &modes, rp.tau, MonteCarloConfig::new(20_000, 3)).unwrap();
        let mut expected = DMatrix::zeros(6, 6);
        for (i, v) in [2.5, 2.5, 0.5, 0.5, 0.5, 0.5].into_iter().enumerate() {
            expected[(i, i)] = v;
        }
        within(&mc, &expected, 4.0).unwrap();
    }

    #[test]
    fn same_seed_same_bits_any_chunking_schedule() {
        let rp = Design::new(1.0, 0.1, 2.0, 0.0, 1.0).reduced().unwrap();
        let dq = derived_quantities(&rp).unwrap();
        let model = build_reduced_model(&rp).unwrap();
        let modes = standard_modes(&[ModeLabel::MirrorOut, ModeLabel::CavityOut(Cavity::One)], &dq);
        let plan = MonteCarloPlan::new(
            &model,
            &modes,
            rp.tau,
            MonteCarloConfig { chunk_size: 256, ..MonteCarloConfig::new(2000, 9) },
            Vec::new(),
        )
        .unwrap();
        let forward: Vec<ChunkMoments> = (0..plan.chunk_count()).map(|i| plan.run_chunk(i)).collect();
        let mut backward: Vec<(usize, ChunkMoments)> =
            (0..plan.chunk_count()).rev().map(|i| (i, plan.run_chunk(i))).collect();
        backward.sort_by_key(|(i, _)| *i);
        let backward: Vec<ChunkMoments> = backward.into_iter().map(|(_, c)| c).collect();
        let a = plan.finish(&forward).unwrap();
        let b = plan.finish(&backward).unwrap();
        assert_eq!(a, b);
        let other = MonteCarloPlan::new(&model, &modes, rp.tau, MonteCarloConfig::new(2000, 10), Vec::new()).unwrap();
        assert_ne!(other.run().unwrap().covariance.sigma(), a.covariance.sigma());
    }

    #[test]
    fn too_few_trajectories_rejected() {
        let rp = Design::new(1.0, 0.1, 2.0, 0.0, 1.0).reduced().unwrap();
        let dq = derived_quantities(&rp).unwrap();
        let model = build_reduced_model(&rp).unwrap();
        let modes = standard_modes(&[ModeLabel::MirrorOut], &dq);
        assert!(monte_carlo_output_covariance(&model, &modes, rp.tau, MonteCarloConfig::new(10, 1)).is_err());
        let strict = MonteCarloConfig { max_standard_error: Some(1e-6), ..MonteCarloConfig::new(1000, 1) };
        assert!(matches!(
            monte_carlo_output_covariance(&model, &modes, rp.tau, strict),
            Err(Error::InsufficientTrajectories { .. })
        ));
    }

    #[test]
    fn reduced_model_agrees_with_propagation() {
        let rp = Design::new(1.0, 0.1, 2.0, 0.5, 2.0).reduced().unwrap();
        let dq = derived_quantities(&rp).unwrap();
        let model = build_reduced_model(&rp).unwrap();
        let labels = [
            ModeLabel::MirrorOut,
            ModeLabel::CavityOut(Cavity::One),
            ModeLabel::CavityOut(Cavity::Two),
            ModeLabel::BathTilde,
        ];
        let modes = standard_modes(&labels, &dq);
        let exact = propagate_output_covariance(&model, &modes, rp.tau, 1e-11).unwrap();
        let mc = monte_carlo_output_covariance(&model, &modes, rp.tau, MonteCarloConfig::new(20_000, 42)).unwrap();
        within(&mc, exact.sigma(), 4.0).unwrap();
    }

    #[test]
    fn halving_the_step_changes_less_than_one_standard_error() {
        let rp = Design::new(1.0, 0.1, 1.0, 0.0, 0.0).reduced().unwrap();
        let dq = derived_quantities(&rp).unwrap();
        let model = build_reduced_model(&rp).unwrap();
        let modes = standard_modes(&[ModeLabel::MirrorOut, ModeLabel::CavityOut(Cavity::One)], &dq);
        let n = 100_000;
        let coarse = MonteCarloPlan::new(&model, &modes, rp.tau, MonteCarloConfig::new(n, 5), Vec::new()).unwrap();
        let fine_cfg = MonteCarloConfig { steps: Some(2 * coarse.steps()), ..MonteCarloConfig::new(n, 5) };
        let fine = MonteCarloPlan::new(&model, &modes, rp.tau, fine_cfg, Vec::new()).unwrap();
        let se = gaussian_standard_errors(fine.scheme_covariance(), n);
        let diff = coarse.scheme_covariance() - fine.scheme_covariance();
        for i in 0..4 {
            for j in 0..4 {
                assert!(diff[(i, j)].abs() < se[(i, j)], "({i},{j})");
            }
        }
        // and the scheme is consistent with the exact moments
        let exact = propagate_output_covariance(&model, &modes, rp.tau, 1e-11).unwrap();
        assert!((fine.scheme_covariance() - exact.sigma()).amax() < 1e-2);
    }
}
