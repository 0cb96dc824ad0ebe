//! Reduced-model propagation against the closed forms over a parameter grid.

use steerkit_core::closedform::{moment_set, steering_collective, steering_single};
use steerkit_core::covariance::{ModeLabel, Quadrature};
use steerkit_core::dynamics::{
    build_reduced_model, moments_from_covariance, propagate_output_covariance, standard_modes,
    standard_output_covariance, ModelKind,
};
use steerkit_core::model::{derived_quantities, Design};
use steerkit_core::steering::steering_product;
use steerkit_core::{Cavity, MomentSet};

const TOL: f64 = 1e-11;

fn grid() -> Vec<(f64, f64, f64, f64, f64)> {
    let mut out = Vec::new();
    for r in [0.25, 0.5, 1.0, 2.0] {
        for g in [0.0, 0.05, 0.1] {
            for n0 in [0.0, 0.5, 5.0] {
                for n in [0.0, 5.0, 100.0] {
                    for ratio in [1.0, 2.0] {
                        out.push((r, g, n0, n, ratio));
                    }
                }
            }
        }
    }
    out
}

fn entries(m: &MomentSet) -> [f64; 7] {
    [m.var_xm_out, m.var_x1_out, m.var_x2_out, m.var_xw_out, m.cov_xm_p1, m.cov_xm_p2, m.cov_xm_pw]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn moment_set_matches_propagation_on_grid() {
    let mut worst: f64 = 0.0;
    for (r, g, n0, n, ratio) in grid() {
        let rp = Design::new(r, g, ratio, n0, n).reduced().unwrap();
        let dq = derived_quantities(&rp).unwrap();
        let oc = standard_output_covariance(&rp, ModelKind::Reduced, TOL).unwrap();
        let numeric = moments_from_covariance(&oc).unwrap();
        let closed = moment_set(&dq, n0, n).unwrap();
        for (a, b) in entries(&numeric).into_iter().zip(entries(&closed)) {
            worst = worst.max(rel(a, b));
        }
        let ew = steering_product(&oc, ModeLabel::MirrorOut, ModeLabel::WOut, false).unwrap().value;
        worst = worst.max(rel(ew, steering_collective(&dq, n0, n).unwrap()));
        for c in Cavity::BOTH {
            let e = steering_product(&oc, ModeLabel::MirrorOut, ModeLabel::CavityOut(c), false).unwrap().value;
            worst = worst.max(rel(e, steering_single(&dq, n0, n, c).unwrap()));
        }
        assert!(oc.is_physical(1e-9), "unphysical at {:?}", (r, g, n0, n, ratio));
    }
    assert!(worst < 1e-6, "worst relative discrepancy {worst:e}");
}

#[test]
fn u_mode_conserved_on_grid() {
    for (r, g, n0, n, ratio) in grid() {
        let rp = Design::new(r, g, ratio, n0, n).reduced().unwrap();
        let dq = derived_quantities(&rp).unwrap();
        let model = build_reduced_model(&rp).unwrap();
        let modes = standard_modes(&[ModeLabel::UOut, ModeLabel::UInTilde], &dq);
        let oc = propagate_output_covariance(&model, &modes, rp.tau, TOL).unwrap();
        for q in [Quadrature::x, Quadrature::p] {
            let out = oc.variance(q(ModeLabel::UOut)).unwrap();
            let inp = oc.variance(q(ModeLabel::UInTilde)).unwrap();
            assert!((out - inp).abs() < 1e-8, "{out} vs {inp} at {:?}", (r, g, n0, n, ratio));
        }
        let canonical = oc.select(&[ModeLabel::UOut]).unwrap();
        assert!(canonical.symplectic_eigenvalues().unwrap()[0] >= 0.5 - 1e-9);
    }
}

#[test]
fn canonical_outputs_have_physical_symplectic_spectrum() {
    for (r, g, n0, n, ratio) in grid().into_iter().step_by(7) {
        let rp = Design::new(r, g, ratio, n0, n).reduced().unwrap();
        let oc = standard_output_covariance(&rp, ModelKind::Reduced, TOL).unwrap();
        let sub = oc
            .select(&[ModeLabel::MirrorOut, ModeLabel::CavityOut(Cavity::One), ModeLabel::CavityOut(Cavity::Two)])
            .unwrap();
        assert!(sub.is_canonical(1e-8), "{}", sub.commutator());
        let nu = sub.symplectic_eigenvalues().unwrap();
        assert!(nu.iter().all(|&v| v >= 0.5 - 1e-9), "{nu:?}");
    }
}
