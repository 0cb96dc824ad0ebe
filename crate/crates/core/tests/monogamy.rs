//! Monogamy of steering on random physical three-mode states.

use nalgebra::DMatrix;
use proptest::prelude::*;
use steerkit_core::covariance::{ModeLabel, OutputCovariance};
use steerkit_core::dynamics::{standard_output_covariance, ModelKind};
use steerkit_core::model::Design;
use steerkit_core::steering::monogamy_check;
use steerkit_core::Cavity;

const PARTIES: [ModeLabel; 2] = [ModeLabel::CavityOut(Cavity::One), ModeLabel::CavityOut(Cavity::Two)];

#[derive(Debug, Clone)]
enum Gate {
    Rotate(usize, f64),
    Squeeze(usize, f64),
    Mix(usize, usize, f64),
    TwoModeSqueeze(usize, usize, f64),
}

fn gate() -> impl Strategy<Value = Gate> {
    let pair = (0usize..3, 1usize..3).prop_map(|(i, k)| (i, (i + k) % 3));
    prop_oneof![
        (0usize..3, -3.2f64..3.2).prop_map(|(i, t)| Gate::Rotate(i, t)),
        (0usize..3, -1.5f64..1.5).prop_map(|(i, s)| Gate::Squeeze(i, s)),
        (pair.clone(), -1.6f64..1.6).prop_map(|((i, j), t)| Gate::Mix(i, j, t)),
        (pair, -1.5f64..1.5).prop_map(|((i, j), s)| Gate::TwoModeSqueeze(i, j, s)),
    ]
}

fn symplectic(gates: &[Gate]) -> DMatrix<f64> {
    let mut s = DMatrix::<f64>::identity(6, 6);
    for g in gates {
        let mut m = DMatrix::<f64>::identity(6, 6);
        match *g {
            Gate::Rotate(i, t) => {
                let (c, sn) = (t.cos(), t.sin());
                m[(2 * i, 2 * i)] = c;
                m[(2 * i, 2 * i + 1)] = -sn;
                m[(2 * i + 1, 2 * i)] = sn;
                m[(2 * i + 1, 2 * i + 1)] = c;
            }
            Gate::Squeeze(i, r) => {
                m[(2 * i, 2 * i)] = (-r).exp();
                m[(2 * i + 1, 2 * i + 1)] = r.exp();
            }
            Gate::Mix(i, j, t) => {
                let (c, sn) = (t.cos(), t.sin());
                for q in 0..2 {
                    m[(2 * i + q, 2 * i + q)] = c;
                    m[(2 * i + q, 2 * j + q)] = sn;
                    m[(2 * j + q, 2 * i + q)] = -sn;
                    m[(2 * j + q, 2 * j + q)] = c;
                }
            }
            Gate::TwoModeSqueeze(i, j, r) => {
                let (ch, sh) = (r.cosh(), r.sinh());
                for (q, sign) in [(0, 1.0), (1, -1.0)] {
                    m[(2 * i + q, 2 * i + q)] = ch;
                    m[(2 * i + q, 2 * j + q)] = sign * sh;
                    m[(2 * j + q, 2 * i + q)] = sign * sh;
                    m[(2 * j + q, 2 * j + q)] = ch;
                }
            }
        }
        s = m * s;
    }
    s
}

fn labels() -> Vec<ModeLabel> {
    vec![ModeLabel::MirrorOut, PARTIES[0], PARTIES[1]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn two_parties_never_both_steer(
        gates in prop::collection::vec(gate(), 1..12),
        occupations in prop::array::uniform3(0.0f64..3.0),
    ) {
        let s = symplectic(&gates);
        let mut d = DMatrix::<f64>::zeros(6, 6);
        for (k, &n) in occupations.iter().enumerate() {
            d[(2 * k, 2 * k)] = n + 0.5;
            d[(2 * k + 1, 2 * k + 1)] = n + 0.5;
        }
        let sigma = &s * d * s.transpose();
        let oc = OutputCovariance::canonical(labels(), sigma);
        prop_assume!(oc.is_physical(1e-9));
        let m = monogamy_check(&oc, ModeLabel::MirrorOut, PARTIES).unwrap();
        prop_assert!(m.holds, "{:?}", m.values);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn model_states_respect_monogamy(
        r in 0.05f64..3.0,
        g in 0.0f64..0.5,
        ratio in 0.1f64..10.0,
        n0 in 0.0f64..5.0,
        n in 0.0f64..50.0,
    ) {
        let rp = Design::new(r, g, ratio, n0, n).reduced().unwrap();
        let oc = standard_output_covariance(&rp, ModelKind::Reduced, 1e-10).unwrap();
        let m = monogamy_check(&oc, ModeLabel::MirrorOut, PARTIES).unwrap();
        prop_assert!(m.holds, "{:?}", m.values);
    }
}
