//! Wealth under feedback strategies, expected CARA utility, the value
//! function `v = −e^{−ηxe^{R(T−t)}} f(t,y) e^{g(t,p)}` and the variance
//! decomposition of the ceded loss `∫u dC`.
//!
//! Terminal wealth on the simulation grid is
//!
//! ```text
//! X_T = X₀e^{RT} + ∫e^{R(T−r)}[c − q + w(μ − R)]dr + ∫e^{R(T−r)} wσ dW
//!       − Σ e^{R(T−T_n)} (1 − u_{T_n}) Z_n
//! ```
//!
//! with trapezoidal drift integrals, a left-point stochastic integral and the
//! exact discount at each simulated claim time. Controls are held at their
//! left-node values within each cell.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::investment::{optimal_w, GLattice};
use crate::paths::{simulate_asset, simulate_claims, simulate_factor, Measure, SimGrid};
use crate::reinsurance::StrategySurface;
use crate::scenario::Scenario;
use crate::stats::{quantile, variance, Estimate};

pub type Map = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Optimal,
    Constant,
    Custom,
}

/// Feedback maps `u(t, y) ∈ [0, 1]` and `w(t, p)`, stored as shared base maps
/// with an additive shift on `u` and a multiplier on `w`.
#[derive(Clone)]
pub struct StrategyField {
    u: Map,
    w: Map,
    u_shift: f64,
    w_scale: f64,
    pub provenance: Provenance,
    pub label: String,
}

impl fmt::Debug for StrategyField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StrategyField")
            .field("provenance", &self.provenance)
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

impl StrategyField {
    /// `u` is clipped to `[0, 1]`.
    pub fn new(u: Map, w: Map, provenance: Provenance, label: impl Into<String>) -> Self {
        Self {
            u,
            w,
            u_shift: 0.0,
            w_scale: 1.0,
            provenance,
            label: label.into(),
        }
    }

    pub fn constant(u: f64, w: f64) -> Self {
        Self::new(
            Arc::new(move |_, _| u),
            Arc::new(move |_, _| w),
            Provenance::Constant,
            format!("constant(u={u},w={w})"),
        )
    }

    /// `u*` from a tabulated surface and `w*` from the `g` lattice.
    pub fn optimal(surface: Arc<StrategySurface>, lattice: Arc<GLattice>, scenario: &Scenario) -> Self {
        let market = scenario.market.clone();
        let prefs = scenario.prefs;
        let w = move |t: f64, p: f64| {
            optimal_w(t, p, &market, &prefs, lattice.dg_dp(t, p))
                .map(|d| d.w_star)
                .unwrap_or(f64::NAN)
        };
        Self::new(
            Arc::new(move |t, y| surface.eval(t, y)),
            Arc::new(w),
            Provenance::Optimal,
            "optimal",
        )
    }

    /// `(clip(u + du), w · w_scale)`, sharing the base maps.
    pub fn perturbed(&self, du: f64, w_scale: f64) -> Self {
        Self {
            u: self.u.clone(),
            w: self.w.clone(),
            u_shift: self.u_shift + du,
            w_scale: self.w_scale * w_scale,
            provenance: Provenance::Custom,
            label: format!("{}(du={du},w*{w_scale})", self.label),
        }
    }

    fn u_from_base(&self, base: f64) -> f64 {
        (base + self.u_shift).clamp(0.0, 1.0)
    }

    pub fn u(&self, t: f64, y: f64) -> f64 {
        self.u_from_base((self.u)(t, y))
    }

    pub fn w(&self, t: f64, p: f64) -> f64 {
        (self.w)(t, p) * self.w_scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WealthResult {
    pub label: String,
    pub terminal_wealth: Vec<f64>,
    /// `E[1 − e^{−ηX_T}]`.
    pub utility: Estimate,
    pub mean_terminal_wealth: f64,
    /// 5%, 50% and 95% quantiles of `X_T`.
    pub quantiles: [f64; 3],
    pub n_reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WealthSummary {
    pub mean_utility: f64,
    pub se: f64,
    pub mean_terminal_wealth: f64,
    pub quantiles: [f64; 3],
    pub n_reps: usize,
    pub seed: u64,
}

impl WealthResult {
    fn from_samples(label: String, terminal_wealth: Vec<f64>, eta: f64, seed: u64) -> Self {
        let utilities: Vec<f64> = terminal_wealth.iter().map(|x| -(-eta * x).exp_m1()).collect();
        let n = terminal_wealth.len();
        Self {
            label,
            utility: Estimate::from_samples(&utilities),
            mean_terminal_wealth: terminal_wealth.iter().sum::<f64>() / n as f64,
            quantiles: [
                quantile(&terminal_wealth, 0.05),
                quantile(&terminal_wealth, 0.5),
                quantile(&terminal_wealth, 0.95),
            ],
            terminal_wealth,
            n_reps: n,
            seed,
        }
    }

    pub fn summary(&self) -> WealthSummary {
        WealthSummary {
            mean_utility: self.utility.mean,
            se: self.utility.se,
            mean_terminal_wealth: self.mean_terminal_wealth,
            quantiles: self.quantiles,
            n_reps: self.n_reps,
            seed: self.seed,
        }
    }
}

pub fn simulate_wealth(strategy: &StrategyField, scenario: &Scenario, n_reps: usize, seed: u64) -> Result<WealthResult> {
    Ok(simulate_strategies(std::slice::from_ref(strategy), scenario, n_reps, seed)?.remove(0))
}

/// Simulates every strategy on the same replications (common random numbers).
pub fn simulate_strategies(strategies: &[StrategyField], scenario: &Scenario, n_reps: usize, seed: u64) -> Result<Vec<WealthResult>> {
    if n_reps < 2 {
        return Err(Error::InsufficientReplications {
            reason: format!("{n_reps} replications"),
        });
    }
    let grid = scenario.grid()?;
    let premium = scenario.premium()?;
    let rows: Vec<Vec<f64>> = (0..n_reps as u64)
        .into_par_iter()
        .map(|rep| replicate_wealth(strategies, scenario, &premium, &grid, seed, rep))
        .collect::<Result<_>>()?;
    Ok(strategies
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let xs: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            WealthResult::from_samples(s.label.clone(), xs, scenario.prefs.eta, seed)
        })
        .collect())
}

fn replicate_wealth(
    strategies: &[StrategyField],
    scenario: &Scenario,
    premium: &crate::premium::PremiumPrinciple,
    grid: &SimGrid,
    seed: u64,
    rep: u64,
) -> Result<Vec<f64>> {
    let (y, lambda) = simulate_factor(&scenario.factor, grid, seed, rep)?;
    let (p, dw) = simulate_asset(&scenario.market, grid, seed, rep, Measure::Physical)?;
    let events = simulate_claims(&lambda, &scenario.claims, grid, seed, rep)?;
    let r = scenario.market.rate;
    let horizon = grid.t_end;
    let dt = grid.dt();
    let n = grid.n_steps;
    let times = grid.times();
    let discount: Vec<f64> = times.iter().map(|&t| (r * (horizon - t)).exp()).collect();
    let income: Vec<f64> = (0..=n)
        .map(|i| crate::premium::insurance_premium(scenario.theta_i, scenario.claims.mean(), lambda[i]))
        .collect();
    let excess: Vec<f64> = (0..=n).map(|i| scenario.market.mu(times[i], p[i]) - r).collect();
    let sigma: Vec<f64> = (0..=n).map(|i| scenario.market.sigma(times[i], p[i])).collect();
    let cells: Vec<usize> = events.iter().map(|e| grid.cell(e.time)).collect();
    let base = scenario.x0 * (r * horizon).exp();
    let (u_maps, u_index) = distinct_maps(strategies.iter().map(|s| &s.u));
    let (w_maps, w_index) = distinct_maps(strategies.iter().map(|s| &s.w));
    let u_base: Vec<Vec<f64>> = u_maps.iter().map(|m| (0..=n).map(|i| m(times[i], y[i])).collect()).collect();
    let w_base: Vec<Vec<f64>> = w_maps.iter().map(|m| (0..=n).map(|i| m(times[i], p[i])).collect()).collect();
    let mut u = vec![0.0; n + 1];
    let mut out = Vec::with_capacity(strategies.len());
    for (k, s) in strategies.iter().enumerate() {
        let (ub, wb) = (&u_base[u_index[k]], &w_base[w_index[k]]);
        let mut drift = vec![0.0; n + 1];
        let mut diffusion = 0.0;
        for i in 0..=n {
            let t = times[i];
            u[i] = s.u_from_base(ub[i]);
            let w = wb[i] * s.w_scale;
            let q = premium.eval_with_lambda(t, y[i], lambda[i], u[i]).q;
            drift[i] = discount[i] * (income[i] - q + w * excess[i]);
            if i < n {
                diffusion += discount[i] * w * sigma[i] * dw[i];
            }
        }
        let jumps: f64 = events
            .iter()
            .zip(&cells)
            .map(|(e, &i)| (r * (horizon - e.time)).exp() * (1.0 - u[i]) * e.mark)
            .sum();
        let x = base + crate::stats::trapezoid(&drift, dt) + diffusion - jumps;
        if !x.is_finite() {
            return Err(Error::NonFiniteState {
                what: "terminal wealth",
                t: horizon,
            });
        }
        out.push(x);
    }
    Ok(out)
}

/// Distinct maps by pointer identity, and the index of each input among them.
fn distinct_maps<'a>(maps: impl Iterator<Item = &'a Map>) -> (Vec<&'a Map>, Vec<usize>) {
    let mut unique: Vec<&Map> = Vec::new();
    let index = maps
        .map(|m| match unique.iter().position(|u| Arc::ptr_eq(u, m)) {
            Some(i) => i,
            None => {
                unique.push(m);
                unique.len() - 1
            }
        })
        .collect();
    (unique, index)
}

/// Paired comparison of a challenger against a reference strategy.
#[derive(Debug, Clone, Serialize)]
pub struct PairedOutcome {
    pub label: String,
    pub mean_utility: f64,
    /// Reference minus challenger utility, averaged over common replications.
    pub advantage: Estimate,
    /// `advantage ≥ −2·SE`.
    pub passes: bool,
}

pub fn paired_outcome(reference: &WealthResult, challenger: &WealthResult, eta: f64) -> PairedOutcome {
    let diffs: Vec<f64> = reference
        .terminal_wealth
        .iter()
        .zip(&challenger.terminal_wealth)
        .map(|(a, b)| (-eta * b).exp() - (-eta * a).exp())
        .collect();
    let advantage = Estimate::from_samples(&diffs);
    PairedOutcome {
        label: challenger.label.clone(),
        mean_utility: challenger.utility.mean,
        passes: advantage.mean >= -2.0 * advantage.se,
        advantage,
    }
}

/// The documented dominance set: 20 perturbations
/// `du ∈ {−0.1, −0.05, 0.05, 0.1}` × `w·{0.8, 0.9, 1, 1.1, 1.2}` and the
/// constant strategies `(0,0)`, `(1,0)`, `(0.5,0)`, `(u*(0,Y₀), w*(0,P₀))`.
pub fn dominance_challengers(optimal: &StrategyField, scenario: &Scenario) -> Vec<StrategyField> {
    let mut out = Vec::with_capacity(24);
    for du in [-0.1, -0.05, 0.05, 0.1] {
        for scale in [0.8, 0.9, 1.0, 1.1, 1.2] {
            out.push(optimal.perturbed(du, scale));
        }
    }
    out.push(StrategyField::constant(0.0, 0.0));
    out.push(StrategyField::constant(1.0, 0.0));
    out.push(StrategyField::constant(0.5, 0.0));
    out.push(StrategyField::constant(
        optimal.u(0.0, scenario.factor.y0),
        optimal.w(0.0, scenario.market.p0),
    ));
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct DominanceTournament {
    pub optimal: WealthSummary,
    pub challengers: Vec<PairedOutcome>,
    pub all_pass: bool,
}

pub fn dominance_tournament(optimal: &StrategyField, scenario: &Scenario, n_reps: usize, seed: u64) -> Result<DominanceTournament> {
    let mut strategies = vec![optimal.clone()];
    strategies.extend(dominance_challengers(optimal, scenario));
    let results = simulate_strategies(&strategies, scenario, n_reps, seed)?;
    let challengers: Vec<PairedOutcome> = results[1..]
        .iter()
        .map(|r| paired_outcome(&results[0], r, scenario.prefs.eta))
        .collect();
    Ok(DominanceTournament {
        optimal: results[0].summary(),
        all_pass: challengers.iter().all(|c| c.passes),
        challengers,
    })
}

/// `ηe^{R(T−t)}c(t,y) + Ψ^{u*}(t,y)`, the discount rate inside `f`.
pub fn f_killing_rate(scenario: &Scenario, surface: Arc<StrategySurface>) -> impl Fn(f64, f64) -> f64 + Send + Sync {
    let s = scenario.clone();
    move |t, y| s.prefs.discounted_eta(s.market.rate, t) * s.insurance_premium(t, y) + surface.psi_star(t, y)
}

/// `f(t,y) = E[exp(−∫_t^T rate(s, Y_s) ds) | Y_t = y]` by Monte Carlo with
/// trapezoidal time integration.
pub fn estimate_f<K>(t: f64, y: f64, scenario: &Scenario, rate: K, n_reps: usize, seed: u64) -> Result<Estimate>
where
    K: Fn(f64, f64) -> f64 + Sync,
{
    if n_reps < 2 {
        return Err(Error::InsufficientReplications {
            reason: format!("{n_reps} replications"),
        });
    }
    let grid = SimGrid::new(t, scenario.horizon(), scenario.n_steps)?;
    if grid.is_empty() {
        return Ok(Estimate::exact(1.0));
    }
    let mut factor = scenario.factor;
    factor.y0 = y;
    let samples: Vec<f64> = (0..n_reps as u64)
        .into_par_iter()
        .map(|rep| -> Result<f64> {
            let (ys, _) = simulate_factor(&factor, &grid, seed, rep)?;
            let k: Vec<f64> = ys.iter().enumerate().map(|(i, &yy)| rate(grid.time(i), yy)).collect();
            let sample = (-crate::stats::trapezoid(&k, grid.dt())).exp();
            if !(sample > 0.0 && sample.is_finite()) {
                return Err(Error::NonFiniteState { what: "f sample", t });
            }
            Ok(sample)
        })
        .collect::<Result<_>>()?;
    Ok(Estimate::from_samples(&samples))
}

/// `v(t,x,y,p) = −e^{−ηxe^{R(T−t)}} f e^{g}`; `f` must be positive.
pub fn value_function(t: f64, x: f64, f: f64, g: f64, eta: f64, rate: f64, horizon: f64) -> f64 {
    debug_assert!(f > 0.0);
    if t >= horizon {
        return -(-eta * x).exp();
    }
    -(-eta * x * (rate * (horizon - t)).exp()).exp() * f * g.exp()
}

/// `Var[∫u dC]` against `E[Z²]E[∫u²λ ds] + E[Z]²Var[∫uλ ds]`.
#[derive(Debug, Clone, Serialize)]
pub struct VarianceReport {
    pub lhs: Estimate,
    pub first_term: Estimate,
    pub second_term: Estimate,
    pub rhs: Estimate,
    /// `LHS − RHS` with a standard error from paired influence values.
    pub difference: Estimate,
    pub holds: bool,
    pub n_reps: usize,
}

fn variance_influence(xs: &[f64]) -> (f64, Vec<f64>) {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = variance(xs);
    (var, xs.iter().map(|x| (x - mean).powi(2) - var).collect())
}

pub fn variance_decomposition<U>(u: U, scenario: &Scenario, n_reps: usize, seed: u64) -> Result<VarianceReport>
where
    U: Fn(f64, f64) -> f64 + Sync,
{
    if n_reps < 2 {
        return Err(Error::InsufficientReplications {
            reason: format!("{n_reps} replications"),
        });
    }
    let grid = scenario.grid()?;
    let dt = grid.dt();
    let rows: Vec<(f64, f64, f64)> = (0..n_reps as u64)
        .into_par_iter()
        .map(|rep| -> Result<(f64, f64, f64)> {
            let (y, lambda) = simulate_factor(&scenario.factor, &grid, seed, rep)?;
            let events = simulate_claims(&lambda, &scenario.claims, &grid, seed, rep)?;
            let us: Vec<f64> = (0..=grid.n_steps)
                .map(|i| u(grid.time(i), y[i]).clamp(0.0, 1.0))
                .collect();
            // Exact cell integrals of the piecewise-linear intensity with left-node controls.
            let (mut a, mut b) = (0.0, 0.0);
            for i in 0..grid.n_steps {
                let mass = 0.5 * (lambda[i] + lambda[i + 1]) * dt;
                a += us[i] * us[i] * mass;
                b += us[i] * mass;
            }
            let ceded = events.iter().map(|e| us[grid.cell(e.time)] * e.mark).sum();
            Ok((ceded, a, b))
        })
        .collect::<Result<_>>()?;
    let ceded: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let a: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let b: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let (m1, m2) = (scenario.claims.mean(), scenario.claims.second_moment());
    let (lhs_v, lhs_inf) = variance_influence(&ceded);
    let a_est = Estimate::from_samples(&a);
    let a_inf: Vec<f64> = a.iter().map(|x| m2 * (x - a_est.mean)).collect();
    let (b_v, b_inf) = variance_influence(&b);
    let b_inf: Vec<f64> = b_inf.iter().map(|x| m1 * m1 * x).collect();
    let se = |xs: &[f64]| Estimate::from_samples(xs).se;
    let lhs = Estimate {
        mean: lhs_v,
        se: se(&lhs_inf),
    };
    let first_term = Estimate {
        mean: m2 * a_est.mean,
        se: m2 * a_est.se,
    };
    let second_term = Estimate {
        mean: m1 * m1 * b_v,
        se: se(&b_inf),
    };
    let rhs_inf: Vec<f64> = a_inf.iter().zip(&b_inf).map(|(x, y)| x + y).collect();
    let rhs = Estimate {
        mean: first_term.mean + second_term.mean,
        se: se(&rhs_inf),
    };
    let diff_inf: Vec<f64> = lhs_inf.iter().zip(&rhs_inf).map(|(l, r)| l - r).collect();
    let difference = Estimate {
        mean: lhs.mean - rhs.mean,
        se: se(&diff_inf),
    };
    if lhs.mean > 0.0 && lhs.se > 0.1 * lhs.mean {
        return Err(Error::InsufficientReplications {
            reason: format!("SE {} exceeds 10% of Var[∫u dC] = {}", lhs.se, lhs.mean),
        });
    }
    Ok(VarianceReport {
        holds: difference.mean.abs() <= 3.0 * difference.se,
        lhs,
        first_term,
        second_term,
        rhs,
        difference,
        n_reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ClaimModel, FactorModel, MarketKind, MarketModel};
    use crate::premium::PrincipleKind;

    fn flat_scenario() -> Scenario {
        let mut s = Scenario::reference(PrincipleKind::ExpectedValue);
        s.factor = FactorModel::constant_intensity(0.1);
        s.claims = ClaimModel::exponential(2.0).unwrap();
        s.n_steps = 50;
        s
    }

    #[test]
    fn terminal_value_is_utility() {
        assert_eq!(value_function(5.0, 0.0, 0.7, -0.2, 0.5, 0.05, 5.0), -1.0);
    }

    #[test]
    fn value_tends_to_zero_in_wealth() {
        let v: Vec<f64> = [0.0, 1.0, 10.0, 100.0]
            .iter()
            .map(|&x| value_function(0.0, x, 0.9, -0.1, 0.5, 0.05, 5.0))
            .collect();
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        assert!(v[3] < 0.0 && v[3] > -1e-20);
    }

    #[test]
    fn full_cover_with_free_surplus_is_riskless() {
        // u = 1, w = 0 and c = q(·,1) leave only the compounded capital.
        let mut s = flat_scenario();
        s.theta_i = s.premium.theta_r;
        let r = simulate_wealth(&StrategyField::constant(1.0, 0.0), &s, 50, 3).unwrap();
        let expected = s.x0 * (s.market.rate * 5.0).exp();
        for x in &r.terminal_wealth {
            assert!((x - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn wealth_is_linear_in_initial_capital() {
        let s0 = flat_scenario();
        let mut s1 = s0.clone();
        s1.x0 += 2.0;
        let strat = StrategyField::constant(0.4, 1.0);
        let a = simulate_wealth(&strat, &s0, 20, 5).unwrap();
        let b = simulate_wealth(&strat, &s1, 20, 5).unwrap();
        let shift = 2.0 * (s0.market.rate * 5.0).exp();
        for (x0, x1) in a.terminal_wealth.iter().zip(&b.terminal_wealth) {
            assert!((x1 - x0 - shift).abs() < 1e-10);
        }
    }

    #[test]
    fn f_at_horizon_is_one() {
        let s = flat_scenario();
        let f = estimate_f(5.0, 0.0, &s, |_, _| 1.0, 10, 1).unwrap();
        assert_eq!(f.mean, 1.0);
    }

    #[test]
    fn zero_retention_has_zero_variance_terms() {
        let s = flat_scenario();
        let r = variance_decomposition(|_, _| 0.0, &s, 100, 1).unwrap();
        assert_eq!(r.lhs.mean, 0.0);
        assert_eq!(r.rhs.mean, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn tournament_includes_documented_set() {
        let mut s = flat_scenario();
        s.market = MarketModel::new(0.05, 1.0, MarketKind::Constant { mu: 0.1, sigma: 0.2 }).unwrap();
        let opt = StrategyField::constant(0.5, 1.0);
        let set = dominance_challengers(&opt, &s);
        assert_eq!(set.len(), 24);
        assert_eq!(set.iter().filter(|c| c.provenance == Provenance::Constant).count(), 4);
    }
}
