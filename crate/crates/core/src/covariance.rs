//! Labeled symmetric-ordered covariance matrices over quadrature pairs.
//!
//! Every mode contributes two rows, `(X, P)`. Alongside the covariance the
//! container keeps the commutator matrix `Ω` (`[ξᵢ, ξⱼ] = iΩᵢⱼ`). For a set of
//! independent canonical modes `Ω` is block diagonal with blocks
//! `[[0, 1], [−1, 0]]`; for composite sets (a collective mode together with its
//! constituents, or input-side and output-side modes together) it is whatever
//! the dynamics produced, and physicality is the uncertainty relation
//! `σ + iΩ/2 ≥ 0`.

use alloc::vec::Vec;
use core::f64::consts::SQRT_2;
use core::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Cavity, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeLabel {
    /// Mirror amplitude at the end of the pulse, `b(τ)e^{−iδτ}`.
    MirrorOut,
    /// Mirror amplitude at the start of the pulse.
    MirrorIn,
    /// Output-side temporal mode of cavity `j`.
    CavityOut(Cavity),
    /// Input-side temporal mode of cavity `j` with the decaying profile.
    CavityIn(Cavity),
    /// Input-side temporal mode of cavity `j` with the growing profile.
    CavityInTilde(Cavity),
    /// Bath temporal mode with the decaying profile.
    Bath,
    /// Bath temporal mode with the growing profile.
    BathTilde,
    WOut,
    UOut,
    WIn,
    WInTilde,
    UInTilde,
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let j = |c: &Cavity| c.index() + 1;
        match self {
            ModeLabel::MirrorOut => write!(f, "A_m^out"),
            ModeLabel::MirrorIn => write!(f, "A_m^in"),
            ModeLabel::CavityOut(c) => write!(f, "A_{}^out", j(c)),
            ModeLabel::CavityIn(c) => write!(f, "A_{}^in", j(c)),
            ModeLabel::CavityInTilde(c) => write!(f, "~A_{}^in", j(c)),
            ModeLabel::Bath => write!(f, "B_m"),
            ModeLabel::BathTilde => write!(f, "~B_m"),
            ModeLabel::WOut => write!(f, "W_out"),
            ModeLabel::UOut => write!(f, "U_out"),
            ModeLabel::WIn => write!(f, "W_in"),
            ModeLabel::WInTilde => write!(f, "~W_in"),
            ModeLabel::UInTilde => write!(f, "~U_in"),
        }
    }
}

/// A rotated quadrature `cos θ X + sin θ P` of one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub mode: ModeLabel,
    pub angle: f64,
}

impl Quadrature {
    pub fn x(mode: ModeLabel) -> Quadrature {
        Quadrature { mode, angle: 0.0 }
    }

    pub fn p(mode: ModeLabel) -> Quadrature {
        Quadrature { mode, angle: core::f64::consts::FRAC_PI_2 }
    }

    pub fn at(mode: ModeLabel, angle: f64) -> Quadrature {
        Quadrature { mode, angle }
    }
}

/// One term `weight · A` (or `weight · A†`) of a mode combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeTerm {
    pub weight: Complex64,
    pub mode: ModeLabel,
    pub conjugate: bool,
}

impl ModeTerm {
    pub fn new(weight: Complex64, mode: ModeLabel) -> ModeTerm {
        ModeTerm { weight, mode, conjugate: false }
    }

    pub fn dagger(weight: Complex64, mode: ModeLabel) -> ModeTerm {
        ModeTerm { weight, mode, conjugate: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputCovariance {
    labels: Vec<ModeLabel>,
    sigma: DMatrix<f64>,
    commutator: DMatrix<f64>,
    standard_errors: Option<DMatrix<f64>>,
}

/// Block-diagonal symplectic form for `modes` canonical modes.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        j[(2 * k, 2 * k + 1)] = 1.0;
        j[(2 * k + 1, 2 * k)] = -1.0;
    }
    j
}

impl OutputCovariance {
    pub fn new(labels: Vec<ModeLabel>, sigma: DMatrix<f64>, commutator: DMatrix<f64>) -> OutputCovariance {
        let dim = 2 * labels.len();
        assert_eq!(sigma.shape(), (dim, dim), "covariance shape does not match labels");
        assert_eq!(commutator.shape(), (dim, dim), "commutator shape does not match labels");
        OutputCovariance { labels, sigma, commutator, standard_errors: None }
    }

    /// Independent canonical modes with the given covariance.
    pub fn canonical(labels: Vec<ModeLabel>, sigma: DMatrix<f64>) -> OutputCovariance {
        let omega = symplectic_form(labels.len());
        OutputCovariance::new(labels, sigma, omega)
    }

    pub fn with_standard_errors(mut self, se: DMatrix<f64>) -> OutputCovariance {
        assert_eq!(se.shape(), self.sigma.shape());
        self.standard_errors = Some(se);
        self
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn commutator(&self) -> &DMatrix<f64> {
        &self.commutator
    }

    pub fn standard_errors(&self) -> Option<&DMatrix<f64>> {
        self.standard_errors.as_ref()
    }

    pub fn contains(&self, label: ModeLabel) -> bool {
        self.labels.contains(&label)
    }

    pub fn position(&self, label: ModeLabel) -> Result<usize> {
        self.labels.iter().position(|&l| l == label).ok_or(Error::MissingModes(label))
    }

    fn quadrature_vector(&self, q: Quadrature) -> Result<DVector<f64>> {
        let k = self.position(q.mode)?;
        let mut v = DVector::zeros(self.sigma.nrows());
        v[2 * k] = libm::cos(q.angle);
        v[2 * k + 1] = libm::sin(q.angle);
        Ok(v)
    }

    /// Symmetrized covariance `½⟨{a, b}⟩ − ⟨a⟩⟨b⟩`.
    pub fn covariance(&self, a: Quadrature, b: Quadrature) -> Result<f64> {
        let va = self.quadrature_vector(a)?;
        let vb = self.quadrature_vector(b)?;
        Ok(va.dot(&(&self.sigma * vb)))
    }

    pub fn variance(&self, q: Quadrature) -> Result<f64> {
        self.covariance(q, q)
    }

    /// Statistical error of a matrix entry (Monte Carlo estimates only).
    pub fn entry_standard_error(&self, a: Quadrature, b: Quadrature) -> Result<Option<f64>> {
        let Some(se) = &self.standard_errors else { return Ok(None) };
        let i = self.position(a.mode)?;
        let j = self.position(b.mode)?;
        let quad = |q: Quadrature| -> Option<usize> {
            if q.angle == 0.0 {
                Some(0)
            } else if q.angle == core::f64::consts::FRAC_PI_2 {
                Some(1)
            } else {
                None
            }
        };
        Ok(match (quad(a), quad(b)) {
            (Some(qa), Some(qb)) => Some(se[(2 * i + qa, 2 * j + qb)]),
            _ => None,
        })
    }

    /// 2×2 block of one mode.
    pub fn mode_block(&self, label: ModeLabel) -> Result<nalgebra::Matrix2<f64>> {
        let k = self.position(label)?;
        Ok(self.sigma.fixed_view::<2, 2>(2 * k, 2 * k).into_owned())
    }

    /// 2×2 cross block `⟨ξ_a, ξ_b⟩`.
    pub fn cross_block(&self, a: ModeLabel, b: ModeLabel) -> Result<nalgebra::Matrix2<f64>> {
        let i = self.position(a)?;
        let j = self.position(b)?;
        Ok(self.sigma.fixed_view::<2, 2>(2 * i, 2 * j).into_owned())
    }

    /// Restrict to a subset of modes, in the given order.
    pub fn select(&self, labels: &[ModeLabel]) -> Result<OutputCovariance> {
        let idx: Vec<usize> = labels
            .iter()
            .map(|&l| self.position(l))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flat_map(|k| [2 * k, 2 * k + 1])
            .collect();
        let pick = |m: &DMatrix<f64>| DMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])]);
        Ok(OutputCovariance {
            labels: labels.to_vec(),
            sigma: pick(&self.sigma),
            commutator: pick(&self.commutator),
            standard_errors: self.standard_errors.as_ref().map(pick),
        })
    }

    /// Append a new mode `Σ wₖ Aₖ^{(†)}` built from modes already present.
    /// Standard errors are dropped since they do not transform linearly.
    pub fn combine(&self, label: ModeLabel, terms: &[ModeTerm]) -> Result<OutputCovariance> {
        let dim = self.sigma.nrows();
        let mut coeff = alloc::vec![Complex64::new(0.0, 0.0); dim];
        for t in terms {
            let k = self.position(t.mode)?;
            let i = Complex64::new(0.0, 1.0);
            let p_coeff = if t.conjugate { -i } else { i };
            coeff[2 * k] += t.weight / SQRT_2;
            coeff[2 * k + 1] += t.weight * p_coeff / SQRT_2;
        }
        let mut transform = DMatrix::zeros(dim + 2, dim);
        for r in 0..dim {
            transform[(r, r)] = 1.0;
        }
        for (c, z) in coeff.iter().enumerate() {
            transform[(dim, c)] = SQRT_2 * z.re;
            transform[(dim + 1, c)] = SQRT_2 * z.im;
        }
        let mut labels = self.labels.clone();
        labels.push(label);
        Ok(OutputCovariance {
            labels,
            sigma: &transform * &self.sigma * transform.transpose(),
            commutator: &transform * &self.commutator * transform.transpose(),
            standard_errors: None,
        })
    }

    /// Whether the commutator is the canonical block form to within `tol`.
    pub fn is_canonical(&self, tol: f64) -> bool {
        let j = symplectic_form(self.labels.len());
        (&self.commutator - j).amax() <= tol
    }

    /// Williamson symplectic eigenvalues with respect to the canonical form,
    /// one per mode, ascending. Only meaningful when [`is_canonical`] holds.
    /// Returns `None` when `σ` is not positive definite.
    ///
    /// [`is_canonical`]: OutputCovariance::is_canonical
    pub fn symplectic_eigenvalues(&self) -> Option<Vec<f64>> {
        let eig = self.sigma.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return None;
        }
        let root =
            &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(libm::sqrt)) * eig.eigenvectors.transpose();
        let m = &root * symplectic_form(self.labels.len()) * &root;
        let squares = (m.transpose() * &m).symmetric_eigen().eigenvalues;
        let mut nu: Vec<f64> = squares.iter().map(|&s| libm::sqrt(s.max(0.0))).collect();
        nu.sort_by(|a, b| a.total_cmp(b));
        // each symplectic eigenvalue appears twice
        Some(nu.into_iter().step_by(2).collect())
    }

    /// Smallest eigenvalue of `σ + iΩ/2`. Non-negative for a physical state.
    pub fn physicality_margin(&self) -> f64 {
        let d = self.sigma.nrows();
        let mut h = DMatrix::zeros(2 * d, 2 * d);
        let half = &self.commutator * 0.5;
        h.view_mut((0, 0), (d, d)).copy_from(&self.sigma);
        h.view_mut((d, d), (d, d)).copy_from(&self.sigma);
        h.view_mut((0, d), (d, d)).copy_from(&(-&half));
        h.view_mut((d, 0), (d, d)).copy_from(&half);
        h.symmetric_eigen().eigenvalues.min()
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        self.physicality_margin() >= -tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn two_mode_squeezed(s: f64) -> OutputCovariance {
        let c = 0.5 * libm::cosh(2.0 * s);
        let d = 0.5 * libm::sinh(2.0 * s);
        #[rustfmt::skip]
        let sigma = DMatrix::from_row_slice(4, 4, &[
            c, 0.0, d, 0.0,
            0.0, c, 0.0, -d,
            d, 0.0, c, 0.0,
            0.0, -d, 0.0, c,
        ]);
        OutputCovariance::canonical(vec![ModeLabel::MirrorOut, ModeLabel::WOut], sigma)
    }

    #[test]
    fn pure_state_has_unit_half_symplectic_spectrum() {
        let cov = two_mode_squeezed(0.7);
        let nu = cov.symplectic_eigenvalues().unwrap();
        for v in nu {
            assert!((v - 0.5).abs() < 1e-12, "{v}");
        }
        assert!(cov.physicality_margin().abs() < 1e-12);
    }

    #[test]
    fn thermal_state_spectrum() {
        let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![3.5, 3.5, 0.5, 0.5]));
        let cov = OutputCovariance::canonical(vec![ModeLabel::MirrorIn, ModeLabel::Bath], sigma);
        let nu = cov.symplectic_eigenvalues().unwrap();
        assert!((nu[0] - 0.5).abs() < 1e-14 && (nu[1] - 3.5).abs() < 1e-14);
    }

    #[test]
    fn sub_vacuum_state_is_unphysical() {
        let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![0.3, 0.5]));
        let cov = OutputCovariance::canonical(vec![ModeLabel::MirrorIn], sigma);
        assert!(cov.symplectic_eigenvalues().unwrap()[0] < 0.5);
        assert!(!cov.is_physical(1e-9));
    }

    #[test]
    fn beamsplitter_combination_preserves_vacuum() {
        let sigma = DMatrix::identity(4, 4) * 0.5;
        let cov = OutputCovariance::canonical(
            vec![ModeLabel::CavityOut(Cavity::One), ModeLabel::CavityOut(Cavity::Two)],
            sigma,
        );
        let w = Complex64::new(libm::sqrt(0.5), 0.0);
        let cov = cov
            .combine(
                ModeLabel::WOut,
                &[
                    ModeTerm::new(w, ModeLabel::CavityOut(Cavity::One)),
                    ModeTerm::new(w, ModeLabel::CavityOut(Cavity::Two)),
                ],
            )
            .unwrap();
        let block = cov.mode_block(ModeLabel::WOut).unwrap();
        assert!((block - nalgebra::Matrix2::identity() * 0.5).amax() < 1e-15);
        // [W, W†] = 1
        let k = cov.position(ModeLabel::WOut).unwrap();
        assert!((cov.commutator()[(2 * k, 2 * k + 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn conjugation_flips_momentum() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 2.0]);
        let cov = OutputCovariance::canonical(vec![ModeLabel::BathTilde], sigma);
        let cov =
            cov.combine(ModeLabel::WOut, &[ModeTerm::dagger(Complex64::new(1.0, 0.0), ModeLabel::BathTilde)]).unwrap();
        let b = cov.mode_block(ModeLabel::WOut).unwrap();
        assert_eq!((b[(0, 0)], b[(1, 1)]), (1.0, 2.0));
        assert!((b[(0, 1)] + 0.2).abs() < 1e-15);
    }

    #[test]
    fn missing_mode_is_reported() {
        let cov = two_mode_squeezed(0.1);
        assert_eq!(cov.variance(Quadrature::x(ModeLabel::UOut)), Err(Error::MissingModes(ModeLabel::UOut)));
    }
}
