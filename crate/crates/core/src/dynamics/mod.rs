//! Numeric oracle for the output moments.
//!
//! A [`LinearModel`] is a set of bosonic modes driven by white-noise input
//! channels, written in real quadratures as `dv = A v dt + L dξ` with
//! symmetric-ordered noise intensity `N` (`n + ½` per quadrature) and noise
//! commutator `J`. Output ports are linear forms in the state and the noise,
//! e.g. `a_out = a_in + √(2κ) a`.
//!
//! Temporal modes are obtained by appending one filter accumulator per
//! requested mode, `ż = Σ cₖ kₖ(t) a_out(t)`, so that `z(τ)` is the filtered
//! output. The accumulators share noise with the state, so the joint
//! covariance `Σ` and commutator `Ω` of the augmented vector obey
//!
//! ```text
//! Σ' = AΣ + ΣAᵀ + L N Lᵀ,    Ω' = AΩ + ΩAᵀ + L J Lᵀ
//! ```
//!
//! which is integrated exactly up to the step tolerance. A copy of the
//! initial mirror quadratures is carried along when the input-side mirror mode
//! is requested.

mod integrate;
mod montecarlo;

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::closedform::MomentSet;
use crate::covariance::{symplectic_form, ModeLabel, ModeTerm, OutputCovariance, Quadrature};
use crate::model::{derived_quantities, DerivedQuantities, ReducedParams};
use crate::{Cavity, Error, Result};

pub use integrate::{dormand_prince, StepControl};
pub use montecarlo::{
    monte_carlo_output_covariance, ChunkMoments, MonteCarloConfig, MonteCarloEstimate, MonteCarloPlan,
    ObservableEstimate, QuadraticObservable, MIN_TRAJECTORIES,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// A field that temporal modes can be taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Port {
    CavityOut(Cavity),
    CavityIn(Cavity),
    BathIn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Two cavities and the mirror.
    Full,
    /// Mirror only, cavities adiabatically eliminated.
    Reduced,
}

/// A white-noise input channel and its thermal occupation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseChannel {
    pub port: Port,
    pub occupation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    kind: ModelKind,
    drift: DMatrix<f64>,
    loading: DMatrix<f64>,
    channels: Vec<NoiseChannel>,
    /// Complex linear forms over `[state quadratures, noise quadratures]`.
    ports: Vec<(Port, DVector<Complex64>)>,
    mirror: usize,
    initial_occupations: Vec<f64>,
}

/// `a` (or `a†`) of the mode whose `X` quadrature sits at `quad`.
fn ladder(len: usize, quad: usize, dagger: bool) -> DVector<Complex64> {
    let mut v = DVector::from_element(len, c(0.0));
    v[quad] = c(1.0 / SQRT_2);
    v[quad + 1] = (if dagger { -I } else { I }) / SQRT_2;
    v
}

impl LinearModel {
    fn from_rows(
        kind: ModelKind,
        rows: Vec<DVector<Complex64>>,
        channels: Vec<NoiseChannel>,
        ports: Vec<(Port, DVector<Complex64>)>,
        mirror: usize,
        initial_occupations: Vec<f64>,
    ) -> LinearModel {
        let d = 2 * rows.len();
        let m = 2 * channels.len();
        let mut drift = DMatrix::zeros(d, d);
        let mut loading = DMatrix::zeros(d, m);
        for (k, row) in rows.iter().enumerate() {
            for col in 0..d + m {
                let (x, p) = (SQRT_2 * row[col].re, SQRT_2 * row[col].im);
                if col < d {
                    drift[(2 * k, col)] = x;
                    drift[(2 * k + 1, col)] = p;
                } else {
                    loading[(2 * k, col - d)] = x;
                    loading[(2 * k + 1, col - d)] = p;
                }
            }
        }
        LinearModel { kind, drift, loading, channels, ports, mirror, initial_occupations }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Number of bosonic state modes.
    pub fn dimension(&self) -> usize {
        self.initial_occupations.len()
    }

    pub fn drift(&self) -> &DMatrix<f64> {
        &self.drift
    }

    pub fn loading(&self) -> &DMatrix<f64> {
        &self.loading
    }

    pub fn noise_channels(&self) -> &[NoiseChannel] {
        &self.channels
    }

    /// Symmetric-ordered intensity of each noise quadrature.
    pub fn noise_intensities(&self) -> Vec<f64> {
        self.channels.iter().flat_map(|ch| [ch.occupation + 0.5; 2]).collect()
    }

    /// `L N Lᵀ`.
    pub fn diffusion(&self) -> DMatrix<f64> {
        let n = DVector::from_vec(self.noise_intensities());
        let scaled = &self.loading * DMatrix::from_diagonal(&n);
        scaled * self.loading.transpose()
    }

    pub fn mirror_index(&self) -> usize {
        self.mirror
    }

    pub fn initial_occupations(&self) -> &[f64] {
        &self.initial_occupations
    }

    /// Linear form of a port over `[state quadratures, noise quadratures]`.
    pub fn port_form(&self, port: Port) -> Result<&DVector<Complex64>> {
        self.ports
            .iter()
            .find(|(p, _)| *p == port)
            .map(|(_, f)| f)
            .ok_or_else(|| Error::InvalidParams(alloc::format!("model has no port {port:?}")))
    }
}

fn input_channels(rp: &ReducedParams) -> Vec<NoiseChannel> {
    vec![
        NoiseChannel { port: Port::CavityIn(Cavity::One), occupation: 0.0 },
        NoiseChannel { port: Port::CavityIn(Cavity::Two), occupation: 0.0 },
        NoiseChannel { port: Port::BathIn, occupation: rp.n },
    ]
}

/// The three-mode linearized model in the frame where the cavities are
/// detuned by `±Δ` and the drive sits on the blue sideband.
pub fn build_full_model(rp: &ReducedParams) -> Result<LinearModel> {
    rp.validate()?;
    let len = 6 + 6;
    let (a1, a2, b) = (0, 2, 4);
    let (a1_in, a2_in, b_in) = (6, 8, 10);
    let op = |q| ladder(len, q, false);
    let dag = |q| ladder(len, q, true);
    let kappa = rp.kappa;
    let loss = libm::sqrt(2.0 * kappa);
    let rows = vec![
        op(a1) * -Complex64::new(kappa, rp.splitting) - dag(b) * (I * rp.g1) - op(a1_in) * c(loss),
        op(a2) * -Complex64::new(kappa, -rp.splitting) - dag(b) * (I * rp.g2) - op(a2_in) * c(loss),
        op(b) * c(-rp.gamma) - dag(a1) * (I * rp.g1) - dag(a2) * (I * rp.g2) - op(b_in) * c(libm::sqrt(2.0 * rp.gamma)),
    ];
    let ports = vec![
        (Port::CavityOut(Cavity::One), op(a1_in) + op(a1) * c(loss)),
        (Port::CavityOut(Cavity::Two), op(a2_in) + op(a2) * c(loss)),
        (Port::CavityIn(Cavity::One), op(a1_in)),
        (Port::CavityIn(Cavity::Two), op(a2_in)),
        (Port::BathIn, op(b_in)),
    ];
    Ok(LinearModel::from_rows(ModelKind::Full, rows, input_channels(rp), ports, 2, vec![0.0, 0.0, rp.n0]))
}

/// The mirror-only model obtained by eliminating the cavities.
pub fn build_reduced_model(rp: &ReducedParams) -> Result<LinearModel> {
    let dq = derived_quantities(rp)?;
    let len = 2 + 6;
    let (b, a1_in, a2_in, b_in) = (0, 2, 4, 6);
    let op = |q| ladder(len, q, false);
    let dag = |q| ladder(len, q, true);
    let phase = Complex64::from_polar(1.0, dq.phase);
    let amp1 = libm::sqrt(2.0 * dq.gain1);
    let amp2 = libm::sqrt(2.0 * dq.gain2);
    let rows = vec![
        op(b) * Complex64::new(dq.net_gain, dq.shift)
            + dag(a1_in) * (I * amp1 * phase)
            + dag(a2_in) * (I * amp2 * phase.conj())
            - op(b_in) * c(libm::sqrt(2.0 * dq.gamma)),
    ];
    let ports = vec![
        (Port::CavityOut(Cavity::One), op(a1_in) * -(phase.conj() * phase.conj()) - dag(b) * (I * amp1 * phase.conj())),
        (Port::CavityOut(Cavity::Two), op(a2_in) * -(phase * phase) - dag(b) * (I * amp2 * phase)),
        (Port::CavityIn(Cavity::One), op(a1_in)),
        (Port::CavityIn(Cavity::Two), op(a2_in)),
        (Port::BathIn, op(b_in)),
    ];
    Ok(LinearModel::from_rows(ModelKind::Reduced, rows, input_channels(rp), ports, 0, vec![rp.n0]))
}

/// Whether a kernel has the decaying, input-normalized profile or the
/// growing, output-normalized one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSide {
    Input,
    Output,
}

/// `k(t) = N · phase · e^{λt}` on `[0, τ]`, applied to one port.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalKernel {
    pub port: Port,
    /// `λ`.
    pub exponent: Complex64,
    pub normalization: f64,
    pub phase: Complex64,
    pub side: KernelSide,
}

fn output_normalization(g: f64, tau: f64) -> f64 {
    libm::sqrt(2.0 * g / libm::expm1(2.0 * g * tau))
}

fn input_normalization(g: f64, tau: f64) -> f64 {
    libm::sqrt(2.0 * g / -libm::expm1(-2.0 * g * tau))
}

impl TemporalKernel {
    /// `A_j^out`: phase `e^{−(−1)^j iφ}`, profile `e^{(G+iδ)t}`.
    pub fn cavity_out(j: Cavity, dq: &DerivedQuantities) -> TemporalKernel {
        TemporalKernel {
            port: Port::CavityOut(j),
            exponent: Complex64::new(dq.net_gain, dq.shift),
            normalization: output_normalization(dq.net_gain, dq.tau),
            phase: Complex64::from_polar(1.0, -j.parity() * dq.phase),
            side: KernelSide::Output,
        }
    }

    /// `A_j^in`: phase `e^{(−1)^j iφ}`, profile `e^{−(G−iδ)t}`.
    pub fn cavity_in(j: Cavity, dq: &DerivedQuantities) -> TemporalKernel {
        TemporalKernel {
            port: Port::CavityIn(j),
            exponent: Complex64::new(-dq.net_gain, dq.shift),
            normalization: input_normalization(dq.net_gain, dq.tau),
            phase: Complex64::from_polar(1.0, j.parity() * dq.phase),
            side: KernelSide::Input,
        }
    }

    /// `Ã_j^in`: phase `e^{(−1)^j iφ}`, profile `e^{(G+iδ)t}`.
    pub fn cavity_in_tilde(j: Cavity, dq: &DerivedQuantities) -> TemporalKernel {
        TemporalKernel {
            port: Port::CavityIn(j),
            exponent: Complex64::new(dq.net_gain, dq.shift),
            normalization: output_normalization(dq.net_gain, dq.tau),
            phase: Complex64::from_polar(1.0, j.parity() * dq.phase),
            side: KernelSide::Output,
        }
    }

    /// `B_m`: profile `e^{−(G+iδ)t}`.
    pub fn bath(dq: &DerivedQuantities) -> TemporalKernel {
        TemporalKernel {
            port: Port::BathIn,
            exponent: Complex64::new(-dq.net_gain, -dq.shift),
            normalization: input_normalization(dq.net_gain, dq.tau),
            phase: c(1.0),
            side: KernelSide::Input,
        }
    }

    /// `B̃_m`: profile `e^{(G−iδ)t}`.
    pub fn bath_tilde(dq: &DerivedQuantities) -> TemporalKernel {
        TemporalKernel {
            port: Port::BathIn,
            exponent: Complex64::new(dq.net_gain, -dq.shift),
            normalization: output_normalization(dq.net_gain, dq.tau),
            phase: c(1.0),
            side: KernelSide::Output,
        }
    }

    pub fn amplitude(&self, t: f64) -> Complex64 {
        self.phase * (self.exponent * t).exp() * self.normalization
    }

    /// `(∫₀^τ |k|² dt)^{1/2}` by composite 5-point Gauss–Legendre quadrature.
    pub fn l2_norm(&self, tau: f64, panels: usize) -> f64 {
        const NODES: [f64; 5] =
            [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
        const WEIGHTS: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let panels = panels.max(1);
        let h = tau / panels as f64;
        let mut sum = 0.0;
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for (x, w) in NODES.iter().zip(WEIGHTS) {
                sum += w * 0.5 * h * self.amplitude(mid + 0.5 * h * x).norm_sqr();
            }
        }
        libm::sqrt(sum)
    }
}

/// `coefficient · k(t) · port` (or its adjoint) inside a filtered mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelTerm {
    pub coefficient: Complex64,
    pub kernel: TemporalKernel,
    pub conjugate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModeSource {
    /// `∫₀^τ Σ terms dt`.
    Filtered(Vec<KernelTerm>),
    /// Mirror amplitude at `τ`, counter-rotated: `b(τ)e^{−i·shift·τ}`.
    MirrorFinal { shift: f64 },
    /// Mirror amplitude at `t = 0`.
    MirrorInitial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputMode {
    pub label: ModeLabel,
    pub source: ModeSource,
}

/// Constituents of the collective modes, e.g.
/// `W_out = (√G₁A₁^out + √G₂A₂^out + i√γ B̃_m†)/√G`.
/// Returns `None` for elementary labels.
pub fn collective_terms(label: ModeLabel, dq: &DerivedQuantities) -> Option<[ModeTerm; 3]> {
    let root = libm::sqrt(dq.net_gain);
    let w1 = c(libm::sqrt(dq.gain1) / root);
    let w2 = c(libm::sqrt(dq.gain2) / root);
    let noise = I * (libm::sqrt(dq.gamma) / root);
    let (one, two) = (Cavity::One, Cavity::Two);
    let terms = match label {
        ModeLabel::WOut => [
            ModeTerm::new(w1, ModeLabel::CavityOut(one)),
            ModeTerm::new(w2, ModeLabel::CavityOut(two)),
            ModeTerm::dagger(noise, ModeLabel::BathTilde),
        ],
        ModeLabel::UOut => [
            ModeTerm::new(w2, ModeLabel::CavityOut(one)),
            ModeTerm::new(-w1, ModeLabel::CavityOut(two)),
            ModeTerm::dagger(noise, ModeLabel::BathTilde),
        ],
        ModeLabel::WIn => [
            ModeTerm::new(w1, ModeLabel::CavityIn(one)),
            ModeTerm::new(w2, ModeLabel::CavityIn(two)),
            ModeTerm::dagger(-noise, ModeLabel::Bath),
        ],
        ModeLabel::WInTilde => [
            ModeTerm::new(w1, ModeLabel::CavityInTilde(one)),
            ModeTerm::new(w2, ModeLabel::CavityInTilde(two)),
            ModeTerm::dagger(-noise, ModeLabel::BathTilde),
        ],
        ModeLabel::UInTilde => [
            ModeTerm::new(w2, ModeLabel::CavityInTilde(one)),
            ModeTerm::new(-w1, ModeLabel::CavityInTilde(two)),
            ModeTerm::dagger(-noise, ModeLabel::BathTilde),
        ],
        _ => return None,
    };
    Some(terms)
}

impl OutputMode {
    pub fn filtered(label: ModeLabel, kernel: TemporalKernel) -> OutputMode {
        OutputMode {
            label,
            source: ModeSource::Filtered(vec![KernelTerm { coefficient: c(1.0), kernel, conjugate: false }]),
        }
    }

    /// The mode called `label`, with kernels built from `dq`.
    pub fn standard(label: ModeLabel, dq: &DerivedQuantities) -> OutputMode {
        let kernel = match label {
            ModeLabel::MirrorOut => {
                return OutputMode { label, source: ModeSource::MirrorFinal { shift: dq.shift } };
            }
            ModeLabel::MirrorIn => return OutputMode { label, source: ModeSource::MirrorInitial },
            ModeLabel::CavityOut(j) => TemporalKernel::cavity_out(j, dq),
            ModeLabel::CavityIn(j) => TemporalKernel::cavity_in(j, dq),
            ModeLabel::CavityInTilde(j) => TemporalKernel::cavity_in_tilde(j, dq),
            ModeLabel::Bath => TemporalKernel::bath(dq),
            ModeLabel::BathTilde => TemporalKernel::bath_tilde(dq),
            composite => {
                let mut terms = Vec::new();
                for t in collective_terms(composite, dq).into_iter().flatten() {
                    if t.weight == c(0.0) {
                        continue;
                    }
                    let ModeSource::Filtered(inner) = OutputMode::standard(t.mode, dq).source else {
                        unreachable!("collective constituents are filtered modes")
                    };
                    for k in inner {
                        let coefficient =
                            if t.conjugate { t.weight * k.coefficient.conj() } else { t.weight * k.coefficient };
                        terms.push(KernelTerm { coefficient, kernel: k.kernel, conjugate: k.conjugate != t.conjugate });
                    }
                }
                return OutputMode { label: composite, source: ModeSource::Filtered(terms) };
            }
        };
        OutputMode::filtered(label, kernel)
    }
}

pub fn standard_modes(labels: &[ModeLabel], dq: &DerivedQuantities) -> Vec<OutputMode> {
    labels.iter().map(|&l| OutputMode::standard(l, dq)).collect()
}

/// Accumulator slot and its kernel terms with the port form resolved.
type Filter = (usize, Vec<(KernelTerm, DVector<Complex64>)>);

/// The model augmented with filter accumulators.
#[derive(Debug, Clone)]
pub(crate) struct Augmented {
    pub dim: usize,
    state: usize,
    drift: DMatrix<f64>,
    loading: DMatrix<f64>,
    /// Per accumulator: its terms with the port form resolved.
    filters: Vec<Filter>,
    copy: Option<usize>,
    mirror: usize,
    initial: Vec<f64>,
    /// Final readout: rows over the augmented coordinates, plus labels.
    pub readout: DMatrix<f64>,
    pub labels: Vec<ModeLabel>,
    pub intensities: Vec<f64>,
}

impl Augmented {
    pub fn new(model: &LinearModel, modes: &[OutputMode], tau: f64) -> Result<Augmented> {
        if modes.is_empty() {
            return Err(Error::InvalidParams("no output modes requested".into()));
        }
        let state = 2 * model.dimension();
        let mut dim = state;
        let mut filters = Vec::new();
        let mut copy = None;
        let mut readout_rows: Vec<(usize, Option<Complex64>)> = Vec::new();
        for mode in modes {
            match &mode.source {
                ModeSource::Filtered(terms) => {
                    let mut resolved = Vec::with_capacity(terms.len());
                    for t in terms {
                        resolved.push((*t, model.port_form(t.kernel.port)?.clone()));
                    }
                    filters.push((dim, resolved));
                    readout_rows.push((dim, None));
                    dim += 2;
                }
                ModeSource::MirrorFinal { shift } => {
                    readout_rows.push((2 * model.mirror, Some(Complex64::from_polar(1.0, -shift * tau))));
                }
                ModeSource::MirrorInitial => {
                    let at = *copy.get_or_insert_with(|| {
                        let at = dim;
                        dim += 2;
                        at
                    });
                    readout_rows.push((at, None));
                }
            }
        }
        let mut readout = DMatrix::zeros(2 * modes.len(), dim);
        for (i, (at, rot)) in readout_rows.into_iter().enumerate() {
            match rot {
                None => {
                    readout[(2 * i, at)] = 1.0;
                    readout[(2 * i + 1, at + 1)] = 1.0;
                }
                Some(z) => {
                    // e^{-iθ}(X + iP)/√2
                    readout[(2 * i, at)] = z.re;
                    readout[(2 * i, at + 1)] = -z.im;
                    readout[(2 * i + 1, at)] = z.im;
                    readout[(2 * i + 1, at + 1)] = z.re;
                }
            }
        }
        Ok(Augmented {
            dim,
            state,
            drift: model.drift.clone(),
            loading: model.loading.clone(),
            filters,
            copy,
            mirror: model.mirror,
            initial: model.initial_occupations.clone(),
            readout,
            labels: modes.iter().map(|m| m.label).collect(),
            intensities: model.noise_intensities(),
        })
    }

    pub fn noise_dim(&self) -> usize {
        self.loading.ncols()
    }

    /// Fill the augmented drift and loading at time `t`.
    pub fn matrices(&self, t: f64, a: &mut DMatrix<f64>, l: &mut DMatrix<f64>) {
        a.fill(0.0);
        l.fill(0.0);
        let s = self.state;
        a.view_mut((0, 0), (s, s)).copy_from(&self.drift);
        l.view_mut((0, 0), (s, self.noise_dim())).copy_from(&self.loading);
        for (at, terms) in &self.filters {
            for (term, form) in terms {
                let k = term.kernel.amplitude(t);
                let w = if term.conjugate { term.coefficient * k.conj() } else { term.coefficient * k };
                for (col, &f) in form.iter().enumerate() {
                    let v = if term.conjugate { w * f.conj() } else { w * f };
                    let (x, p) = (SQRT_2 * v.re, SQRT_2 * v.im);
                    if col < s {
                        a[(*at, col)] += x;
                        a[(*at + 1, col)] += p;
                    } else {
                        l[(*at, col - s)] += x;
                        l[(*at + 1, col - s)] += p;
                    }
                }
            }
        }
    }

    /// Initial covariance: cavities vacuum, mirror thermal, accumulators zero.
    pub fn initial_covariance(&self) -> DMatrix<f64> {
        let mut sigma = DMatrix::zeros(self.dim, self.dim);
        for (k, occ) in self.initial.iter().enumerate() {
            sigma[(2 * k, 2 * k)] = occ + 0.5;
            sigma[(2 * k + 1, 2 * k + 1)] = occ + 0.5;
        }
        if let Some(cp) = self.copy {
            let m = 2 * self.mirror;
            let v = self.initial[self.mirror] + 0.5;
            for q in 0..2 {
                sigma[(cp + q, cp + q)] = v;
                sigma[(cp + q, m + q)] = v;
                sigma[(m + q, cp + q)] = v;
            }
        }
        sigma
    }

    pub fn initial_commutator(&self) -> DMatrix<f64> {
        let mut omega = DMatrix::zeros(self.dim, self.dim);
        let mut put = |i: usize, j: usize| {
            omega[(i, j + 1)] += 1.0;
            omega[(i + 1, j)] -= 1.0;
        };
        for k in 0..self.initial.len() {
            put(2 * k, 2 * k);
        }
        if let Some(cp) = self.copy {
            let m = 2 * self.mirror;
            put(cp, cp);
            put(cp, m);
            put(m, cp);
        }
        omega
    }

    /// Mirror quadrature indices that are random at `t = 0`, with the copy.
    pub fn initial_slots(&self) -> (&[f64], usize, Option<usize>) {
        (&self.initial, self.mirror, self.copy)
    }
}

/// Deterministic second moments of the requested output modes at `τ`.
pub fn propagate_output_covariance(
    model: &LinearModel,
    modes: &[OutputMode],
    tau: f64,
    tol: f64,
) -> Result<OutputCovariance> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParams(alloc::format!("pulse duration must be positive, got {tau}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(alloc::format!("tolerance must be positive, got {tol}")));
    }
    let aug = Augmented::new(model, modes, tau)?;
    let d = aug.dim;
    let m = aug.noise_dim();
    let noise = DMatrix::from_diagonal(&DVector::from_vec(aug.intensities.clone()));
    let noise_comm = symplectic_form(m / 2);
    let mut y0 = Vec::with_capacity(2 * d * d);
    y0.extend_from_slice(aug.initial_covariance().as_slice());
    y0.extend_from_slice(aug.initial_commutator().as_slice());

    let mut a = DMatrix::zeros(d, d);
    let mut l = DMatrix::zeros(d, m);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        aug.matrices(t, &mut a, &mut l);
        let sigma = DMatrix::from_column_slice(d, d, &y[..d * d]);
        let omega = DMatrix::from_column_slice(d, d, &y[d * d..]);
        let a_sigma = &a * &sigma;
        let ds = &a_sigma + a_sigma.transpose() + &l * &noise * l.transpose();
        let a_omega = &a * &omega;
        let dw = &a_omega - a_omega.transpose() + &l * &noise_comm * l.transpose();
        dy[..d * d].copy_from_slice(ds.as_slice());
        dy[d * d..].copy_from_slice(dw.as_slice());
    };
    let y = dormand_prince(rhs, 0.0, tau, y0, StepControl::new(tol))?;
    let sigma = DMatrix::from_column_slice(d, d, &y[..d * d]);
    let omega = DMatrix::from_column_slice(d, d, &y[d * d..]);
    let t = &aug.readout;
    let s = t * sigma * t.transpose();
    let w = t * omega * t.transpose();
    Ok(OutputCovariance::new(aug.labels, (&s + s.transpose()) * 0.5, (&w - w.transpose()) * 0.5))
}

/// Append the collective mode `label` computed from constituents already
/// in `oc`. Constituents with zero weight may be absent.
pub fn append_collective_mode(
    oc: &OutputCovariance,
    label: ModeLabel,
    dq: &DerivedQuantities,
) -> Result<OutputCovariance> {
    let terms = collective_terms(label, dq)
        .ok_or_else(|| Error::InvalidParams(alloc::format!("{label} is not a collective mode")))?;
    let used: Vec<ModeTerm> = terms.into_iter().filter(|t| t.weight != c(0.0)).collect();
    oc.combine(label, &used)
}

/// `{W_out, U_out}` from a covariance over `{A₁^out, A₂^out, B̃_m}`.
pub fn collective_transform(oc: &OutputCovariance, dq: &DerivedQuantities) -> Result<OutputCovariance> {
    let with_w = append_collective_mode(oc, ModeLabel::WOut, dq)?;
    let with_u = append_collective_mode(&with_w, ModeLabel::UOut, dq)?;
    with_u.select(&[ModeLabel::WOut, ModeLabel::UOut])
}

/// The named moments from a covariance containing `A_m^out`, `A₁^out`,
/// `A₂^out` and `W_out`.
pub fn moments_from_covariance(oc: &OutputCovariance) -> Result<MomentSet> {
    let m = ModeLabel::MirrorOut;
    let a1 = ModeLabel::CavityOut(Cavity::One);
    let a2 = ModeLabel::CavityOut(Cavity::Two);
    let w = ModeLabel::WOut;
    Ok(MomentSet {
        var_xm_out: oc.variance(Quadrature::x(m))?,
        var_x1_out: oc.variance(Quadrature::x(a1))?,
        var_x2_out: oc.variance(Quadrature::x(a2))?,
        var_xw_out: oc.variance(Quadrature::x(w))?,
        cov_xm_p1: oc.covariance(Quadrature::x(m), Quadrature::p(a1))?,
        cov_xm_p2: oc.covariance(Quadrature::x(m), Quadrature::p(a2))?,
        cov_xm_pw: oc.covariance(Quadrature::x(m), Quadrature::p(w))?,
    })
}

/// Default relative tolerance for moment propagation.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Standard output set `{A_m^out, A₁^out, A₂^out, B̃_m, W_out}` for `rp`,
/// propagated through the full or reduced model.
pub fn standard_output_covariance(rp: &ReducedParams, kind: ModelKind, tol: f64) -> Result<OutputCovariance> {
    let dq = derived_quantities(rp)?;
    let model = match kind {
        ModelKind::Full => build_full_model(rp)?,
        ModelKind::Reduced => build_reduced_model(rp)?,
    };
    let labels = [
        ModeLabel::MirrorOut,
        ModeLabel::CavityOut(Cavity::One),
        ModeLabel::CavityOut(Cavity::Two),
        ModeLabel::BathTilde,
    ];
    let oc = propagate_output_covariance(&model, &standard_modes(&labels, &dq), rp.tau, tol)?;
    append_collective_mode(&oc, ModeLabel::WOut, &dq)
}
