use reinsure_core::models::{ClaimModel, Coefficient, FactorModel, IntensityMap, MarketKind, MarketModel};
use reinsure_core::paths::{
    brownian_increments, simulate_asset, simulate_asset_from_increments, simulate_claims, simulate_factor,
    simulate_factor_from_increments, Measure, SimGrid,
};
use reinsure_core::stats::{trapezoid, Estimate};

const REPS: u64 = 100_000;

#[test]
fn factor_mean_grows_linearly() {
    let f = FactorModel::reference();
    let grid = SimGrid::new(0.0, 5.0, 100).unwrap();
    let ends: Vec<f64> = (0..REPS).map(|r| *simulate_factor(&f, &grid, 1, r).unwrap().0.last().unwrap()).collect();
    let e = Estimate::from_samples(&ends);
    assert!((e.mean - 2.5).abs() < 3.0 * e.se, "{e:?}");
}

#[test]
fn physical_gbm_mean() {
    let m = MarketModel::new(0.05, 1.0, MarketKind::Constant { mu: 0.1, sigma: 0.2 }).unwrap();
    let grid = SimGrid::new(0.0, 5.0, 50).unwrap();
    let ends: Vec<f64> = (0..REPS)
        .map(|r| *simulate_asset(&m, &grid, 2, r, Measure::Physical).unwrap().0.last().unwrap())
        .collect();
    let e = Estimate::from_samples(&ends);
    assert!((e.mean - 0.5f64.exp()).abs() < 3.0 * e.se, "{e:?}");
}

#[test]
fn discounted_price_is_a_martingale_under_q() {
    let m = MarketModel::reference_cev();
    let grid = SimGrid::new(0.0, 5.0, 500).unwrap();
    let ends: Vec<f64> = (0..REPS / 2)
        .map(|r| *simulate_asset(&m, &grid, 3, r, Measure::RiskNeutral).unwrap().0.last().unwrap() * (-0.25f64).exp())
        .collect();
    let e = Estimate::from_samples(&ends);
    assert!((e.mean - 1.0).abs() < 3.0 * e.se, "{e:?}");
}

#[test]
fn vanishing_volatility_grows_at_the_rate() {
    let m = MarketModel::new(0.05, 2.0, MarketKind::Constant { mu: 0.05, sigma: 1e-9 }).unwrap();
    let grid = SimGrid::new(0.0, 5.0, 500).unwrap();
    let p = simulate_asset(&m, &grid, 1, 0, Measure::Physical).unwrap().0;
    assert!((p[500] - 2.0 * 0.25f64.exp()).abs() < 1e-6);
}

#[test]
fn poisson_count_mean() {
    let claims = ClaimModel::exponential(2.0).unwrap();
    let grid = SimGrid::new(0.0, 5.0, 50).unwrap();
    let lambda = vec![0.1; 51];
    let counts: Vec<f64> = (0..REPS)
        .map(|r| simulate_claims(&lambda, &claims, &grid, 4, r).unwrap().len() as f64)
        .collect();
    let e = Estimate::from_samples(&counts);
    assert!((e.mean - 0.5).abs() < 3.0 * e.se, "{e:?}");
}

#[test]
fn compensated_count_has_zero_mean() {
    let claims = ClaimModel::exponential(2.0).unwrap();
    let f = FactorModel::reference();
    let grid = SimGrid::new(0.0, 5.0, 500).unwrap();
    let comp: Vec<f64> = (0..REPS / 4)
        .map(|r| {
            let (_, lambda) = simulate_factor(&f, &grid, 5, r).unwrap();
            let n = simulate_claims(&lambda, &claims, &grid, 5, r).unwrap().len() as f64;
            n - trapezoid(&lambda, grid.dt())
        })
        .collect();
    let e = Estimate::from_samples(&comp);
    assert!(e.mean.abs() < 3.0 * e.se, "{e:?}");
}

#[test]
fn euler_strong_order_one_half() {
    // Geometric factor dY = 0.1Y dt + 0.5Y dW against its exact solution.
    let f = FactorModel {
        drift: Coefficient::Affine { intercept: 0.0, slope: 0.1 },
        diffusion: Coefficient::Affine { intercept: 0.0, slope: 0.5 },
        y0: 1.0,
        intensity: IntensityMap::Constant { value: 1.0 },
    };
    let fine = 1024;
    let horizon = 1.0;
    let mut sq = [0.0f64; 2];
    let reps = 4000;
    for r in 0..reps {
        let mut rng = reinsure_core::rng::stream_rng(9, r, reinsure_core::rng::Stream::Factor);
        let dw = brownian_increments(&mut rng, fine, horizon / fine as f64);
        let w: f64 = dw.iter().sum();
        let exact = ((0.1 - 0.125) * horizon + 0.5 * w).exp();
        for (slot, n) in [(0usize, 32usize), (1, 64)] {
            let agg: Vec<f64> = dw.chunks(fine / n).map(|c| c.iter().sum()).collect();
            let grid = SimGrid::new(0.0, horizon, n).unwrap();
            let y = simulate_factor_from_increments(&f, &grid, &agg).unwrap().0;
            sq[slot] += (y[n] - exact).powi(2);
        }
    }
    let ratio = (sq[0] / sq[1]).sqrt();
    assert!((ratio - 2f64.sqrt()).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn replay_is_bitwise() {
    let m = MarketModel::reference_cev();
    let grid = SimGrid::new(0.0, 5.0, 500).unwrap();
    let a = simulate_asset(&m, &grid, 77, 3, Measure::Physical).unwrap();
    let b = simulate_asset(&m, &grid, 77, 3, Measure::Physical).unwrap();
    assert_eq!(a, b);
    let again = simulate_asset_from_increments(&m, &grid, 1.0, Measure::Physical, &a.1).unwrap();
    assert_eq!(a.0, again);
}
