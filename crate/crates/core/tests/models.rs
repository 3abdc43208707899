use proptest::prelude::*;
use reinsure_core::models::{ClaimLaw, ClaimModel};
use reinsure_testkit::{simpson, truncated_pareto_moment, truncated_pareto_raw_moment};

#[test]
fn exponential_mgf_matches_quadrature_on_wide_truncation() {
    let zeta = 2.0;
    let m = ClaimModel::exponential(zeta).unwrap();
    let direct = simpson(&|z: f64| (z - zeta * z).exp() * zeta, 0.0, 200.0 / zeta, 1e-13);
    assert!((m.weighted_moment(1.0, 0).unwrap() - 2.0).abs() < 1e-15);
    assert!((direct - 2.0).abs() < 1e-9);
}

#[test]
fn truncated_pareto_mean_matches_brute_force() {
    let m = ClaimModel::new(ClaimLaw::Pareto { shape: 1.8182, scale: 0.0545 }, Some(10.0)).unwrap();
    let cf = truncated_pareto_raw_moment(1.8182, 0.0545, 10.0, 1.0);
    let bf = truncated_pareto_moment(1.8182, 0.0545, 10.0, 0.0, 1, 1e-12);
    assert!(((m.weighted_moment(0.0, 1).unwrap() - bf) / bf).abs() < 1e-10);
    assert!(((cf - bf) / bf).abs() < 1e-10);
}

#[test]
fn truncated_pareto_weighted_moments_match_brute_force() {
    let m = ClaimModel::reference_pareto();
    let d = m.truncation().unwrap();
    for c in [0.3, 0.64, 1.5] {
        for k in 0..=2 {
            let bf = truncated_pareto_moment(1.8182, 0.0545, d, c, k, 1e-13);
            let lib = m.weighted_moment(c, k as u32).unwrap();
            assert!(((lib - bf) / bf).abs() < 1e-9, "c={c} k={k}: {lib} vs {bf}");
        }
    }
}

fn shifted_law() -> impl Strategy<Value = ClaimModel> {
    prop_oneof![
        (1.2f64..4.0, 1.0f64..2.0, 2.0f64..6.0)
            .prop_map(|(a, s, r)| ClaimModel::new(ClaimLaw::Pareto { shape: a, scale: s }, Some(s * r)).unwrap()),
        (prop::collection::vec(1.0f64..5.0, 1..6), prop::collection::vec(0.1f64..1.0, 6)).prop_map(|(v, w)| {
            let w = w[..v.len()].to_vec();
            ClaimModel::new(ClaimLaw::Empirical { values: v, weights: Some(w) }, None).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weighted_moment_increases_in_c_and_k(law in shifted_law(), c in 0.0f64..0.8, dc in 0.01f64..0.5) {
        for k in 0..=2u32 {
            let lo = law.weighted_moment(c, k).unwrap();
            let hi = law.weighted_moment(c + dc, k).unwrap();
            prop_assert!(hi > lo);
        }
        let m: Vec<f64> = (0..=2).map(|k| law.weighted_moment(c, k).unwrap()).collect();
        // Support in [1, D]: equality only for a point mass at 1.
        prop_assert!(m[1] >= m[0] && m[2] >= m[1]);
    }

    #[test]
    fn cached_mean_agrees_with_moment_functional(rate in 0.2f64..5.0, d in prop::option::of(1.0f64..50.0)) {
        let law = ClaimModel::new(ClaimLaw::Exponential { rate }, d).unwrap();
        let m = law.weighted_moment(0.0, 1).unwrap();
        prop_assert!(((m - law.mean()) / law.mean()).abs() <= 1e-12);
    }

    #[test]
    fn exponential_quadrature_matches_closed_form(zeta in 0.5f64..5.0, frac in -1.0f64..0.5, k in 0u32..=2) {
        // Tail mass beyond 200/zeta stays below e^{-100} on this range.
        let c = frac * zeta;
        let open = ClaimModel::exponential(zeta).unwrap();
        let trunc = ClaimModel::new(ClaimLaw::Exponential { rate: zeta }, Some(200.0 / zeta)).unwrap();
        let a = open.weighted_moment(c, k).unwrap();
        let b = trunc.weighted_moment(c, k).unwrap();
        prop_assert!(((a - b) / a).abs() < 1e-8);
    }
}
