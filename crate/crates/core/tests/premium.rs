use proptest::prelude::*;
use reinsure_core::models::{ClaimModel, FactorModel, IntensityMap};
use reinsure_core::premium::{iavp_dominance_check, PremiumPrinciple, PrincipleKind};
use reinsure_core::{Error, Scenario};

const BUILT_INS: [PrincipleKind; 3] = [
    PrincipleKind::ExpectedValue,
    PrincipleKind::Variance,
    PrincipleKind::IntensityAdjustedVariance,
];

fn reference_principle(kind: PrincipleKind, theta_r: f64) -> PremiumPrinciple {
    let claims = ClaimModel::reference_pareto();
    PremiumPrinciple::new(kind, theta_r, 5.0, &claims, FactorModel::reference().intensity).unwrap()
}

fn iavp_constant(lambda: f64) -> Scenario {
    let mut s = Scenario::reference(PrincipleKind::IntensityAdjustedVariance);
    s.factor = FactorModel::constant_intensity(lambda);
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn built_ins_are_free_increasing_and_convex(k in 0usize..3, theta in 0.01f64..2.0, t in 0.0f64..5.0, y in -3.0f64..5.0, u in 1e-4f64..0.9999) {
        let p = reference_principle(BUILT_INS[k].clone(), theta);
        prop_assert_eq!(p.eval(t, y, 0.0).q, 0.0);
        let v = p.eval(t, y, u);
        prop_assert!(v.dq_du >= 0.0);
        prop_assert!(v.d2q_du2 >= 0.0);
        let h = 1e-5;
        let fd = (p.eval(t, y, u + h).q - p.eval(t, y, u - h).q) / (2.0 * h);
        prop_assert!((fd - v.dq_du).abs() <= 1e-8, "fd {} analytic {}", fd, v.dq_du);
        let fd2 = (p.eval(t, y, u + h).dq_du - p.eval(t, y, u - h).dq_du) / (2.0 * h);
        prop_assert!((fd2 - v.d2q_du2).abs() <= 1e-6 * v.d2q_du2.max(1.0));
    }

    #[test]
    fn expected_value_and_variance_factor_through_lambda(k in 0usize..2, t in 0.0f64..5.0, y1 in -3.0f64..5.0, y2 in -3.0f64..5.0, u in 0.01f64..1.0) {
        let p = reference_principle(BUILT_INS[k].clone(), 0.1);
        let intensity = FactorModel::reference().intensity;
        let r1 = p.eval(t, y1, u).q / intensity.eval(t, y1);
        let r2 = p.eval(t, y2, u).q / intensity.eval(t, y2);
        prop_assert!((r1 - r2).abs() <= 1e-12 * r1.abs());
    }

    #[test]
    fn intensity_adjusted_premium_does_not_factor(t in 0.0f64..5.0, y1 in -3.0f64..5.0, dy in 0.5f64..3.0, u in 0.01f64..1.0) {
        let p = reference_principle(PrincipleKind::IntensityAdjustedVariance, 0.1);
        let intensity = FactorModel::reference().intensity;
        let y2 = y1 + dy;
        let r1 = p.eval(t, y1, u).q / intensity.eval(t, y1);
        let r2 = p.eval(t, y2, u).q / intensity.eval(t, y2);
        prop_assert!(r2 > r1);
    }
}

#[test]
fn iavp_slack_for_full_cession_at_constant_intensity() {
    let lambda = 0.1;
    let s = iavp_constant(lambda);
    let report = iavp_dominance_check(|_, _| 1.0, &s, 100_000, 11).unwrap();
    let (t, theta, m2) = (5.0, 0.1, s.claims.second_moment());
    let slack = theta * m2 * t * lambda * lambda * t;
    assert!(
        (report.difference.mean - slack).abs() <= 3.0 * report.difference.se,
        "{report:?} vs slack {slack}"
    );
    assert!(report.holds);
}

#[test]
fn iavp_null_cession_gives_zero_on_both_sides() {
    let s = Scenario::reference(PrincipleKind::IntensityAdjustedVariance);
    let report = iavp_dominance_check(|_, _| 0.0, &s, 1000, 12).unwrap();
    assert_eq!(report.lhs.mean, 0.0);
    assert_eq!(report.rhs.mean, 0.0);
    assert!(report.holds);
}

#[test]
fn iavp_dominates_under_stochastic_intensity() {
    let s = Scenario::reference(PrincipleKind::IntensityAdjustedVariance);
    let report = iavp_dominance_check(|_, _| 1.0, &s, 100_000, 13).unwrap();
    assert!(report.holds, "{report:?}");
}

#[test]
fn iavp_check_rejects_tiny_samples() {
    let s = iavp_constant(0.1);
    let err = iavp_dominance_check(|_, _| 1.0, &s, 20, 14).unwrap_err();
    assert!(matches!(err, Error::InsufficientReplications { .. }));
}

#[test]
fn iavp_collapses_to_variance_premium_per_unit_intensity() {
    let claims = ClaimModel::exponential(2.0).unwrap();
    let iavp = PremiumPrinciple::new(PrincipleKind::IntensityAdjustedVariance, 0.1, 5.0, &claims, IntensityMap::Constant { value: 1.0 }).unwrap();
    let u = 0.4;
    let expect = claims.mean() * u + 0.1 * claims.second_moment() * u * u;
    for lambda in [1e-6, 1e-8, 1e-10] {
        let q = iavp.eval_with_lambda(0.0, 0.0, lambda, u).q / lambda;
        assert!((q - expect).abs() <= 10.0 * 5.0 * lambda * expect);
    }
}
