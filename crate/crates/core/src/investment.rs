//! Optimal risky investment
//! `w* = (μ−R)/(ησ²e^{R(T−t)}) + p ∂g/∂p /(ηe^{R(T−t)})`, where
//! `g(t,p) = −E^Q[∫_t^T ½((μ−R)/σ)²(s,P_s) ds | P_t = p]` is estimated by
//! Monte Carlo under the risk-neutral dynamics `dP = P[R dt + σ dW̃]`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::market::SIGMA_FLOOR;
use crate::models::{MarketModel, RiskPreferences};
use crate::paths::{brownian_increments, SimGrid};
use crate::rng::{stream_rng, Stream};
use crate::stats::Estimate;

/// Relative bump of the central-difference gradient.
pub const DEFAULT_BUMP: f64 = 1e-3;

pub const MIN_REPLICATIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GEstimate {
    pub g: f64,
    pub dg_dp: f64,
    pub se_g: f64,
    pub se_dgdp: f64,
    pub n_reps: usize,
    pub seed: u64,
    pub bump: f64,
}

/// Running `∫_0^{τ_i} ½θ(P_s)² ds` along a Q-path from `p_start`, one entry per node.
fn running_sharpe_integral(market: &MarketModel, grid: &SimGrid, p_start: f64, dw: &[f64], out: &mut Vec<f64>) -> Result<()> {
    out.clear();
    let dt = grid.dt();
    let r = market.rate;
    let mut log_p = p_start.ln();
    let mut acc = 0.0;
    let mut prev = 0.0;
    for i in 0..=grid.n_steps {
        let t = grid.time(i);
        let p = log_p.exp();
        let sigma = market.sigma(t, p);
        if !(sigma >= SIGMA_FLOOR) || !p.is_finite() {
            if !p.is_finite() {
                return Err(Error::NonFiniteState { what: "asset price", t });
            }
            return Err(Error::DegenerateVolatility { t, p, sigma });
        }
        let theta = (market.mu(t, p) - r) / sigma;
        let h = 0.5 * theta * theta;
        if i > 0 {
            acc += 0.5 * (prev + h) * dt;
        }
        out.push(acc);
        prev = h;
        if i < grid.n_steps {
            log_p += (r - 0.5 * sigma * sigma) * dt + sigma * dw[i];
        }
    }
    Ok(())
}

/// Monte Carlo estimate of `g(t,p)` and `∂g/∂p` on `n_steps` Euler steps of
/// `[t, T]`; the gradient uses bumps `p(1 ± h)` on common random numbers.
pub fn estimate_g(t: f64, p: f64, market: &MarketModel, horizon: f64, n_steps: usize, n_reps: usize, seed: u64) -> Result<GEstimate> {
    estimate_g_with_bump(t, p, market, horizon, n_steps, n_reps, seed, DEFAULT_BUMP)
}

#[allow(clippy::too_many_arguments)]
pub fn estimate_g_with_bump(
    t: f64,
    p: f64,
    market: &MarketModel,
    horizon: f64,
    n_steps: usize,
    n_reps: usize,
    seed: u64,
    bump: f64,
) -> Result<GEstimate> {
    if n_reps < MIN_REPLICATIONS {
        return Err(Error::InsufficientReplications {
            reason: format!("{n_reps} < {MIN_REPLICATIONS} replications"),
        });
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::invalid("p", format!("must be positive, got {p}")));
    }
    if !(bump > 0.0 && bump < 1.0) {
        return Err(Error::invalid("bump", format!("must lie in (0, 1), got {bump}")));
    }
    let grid = SimGrid::new(t, horizon, n_steps)?;
    if grid.is_empty() {
        return Ok(GEstimate {
            g: 0.0,
            dg_dp: 0.0,
            se_g: 0.0,
            se_dgdp: 0.0,
            n_reps,
            seed,
            bump,
        });
    }
    let (p_lo, p_hi) = (p * (1.0 - bump), p * (1.0 + bump));
    let samples: Vec<(f64, f64)> = (0..n_reps as u64)
        .into_par_iter()
        .map_init(Vec::new, |buf, rep| -> Result<(f64, f64)> {
            let mut rng = stream_rng(seed, rep, Stream::Asset);
            let dw = brownian_increments(&mut rng, grid.n_steps, grid.dt());
            running_sharpe_integral(market, &grid, p, &dw, buf)?;
            let g = -buf[grid.n_steps];
            running_sharpe_integral(market, &grid, p_hi, &dw, buf)?;
            let g_hi = -buf[grid.n_steps];
            running_sharpe_integral(market, &grid, p_lo, &dw, buf)?;
            let g_lo = -buf[grid.n_steps];
            Ok((g, (g_hi - g_lo) / (p_hi - p_lo)))
        })
        .collect::<Result<_>>()?;
    let g = Estimate::from_samples(&samples.iter().map(|s| s.0).collect::<Vec<_>>());
    let d = Estimate::from_samples(&samples.iter().map(|s| s.1).collect::<Vec<_>>());
    Ok(GEstimate {
        g: g.mean,
        dg_dp: d.mean,
        se_g: g.se,
        se_dgdp: d.se,
        n_reps,
        seed,
        bump,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvestmentDecision {
    pub w_star: f64,
    pub merton: f64,
    pub correction: f64,
}

/// Optimal amount in the risky asset given `∂g/∂p`.
pub fn optimal_w(t: f64, p: f64, market: &MarketModel, prefs: &RiskPreferences, dg_dp: f64) -> Result<InvestmentDecision> {
    let sigma = market.sigma_checked(t, p)?;
    let scale = prefs.discounted_eta(market.rate, t);
    let sharpe = (market.mu(t, p) - market.rate) / sigma;
    let merton = sharpe / sigma / scale;
    let correction = p * dg_dp / scale;
    Ok(InvestmentDecision {
        w_star: merton + correction,
        merton,
        correction,
    })
}

/// `Ψ^w = ηe((μ−R)φ + pσ²∂φ/∂p) w − ½σ²η²e²φ w²` with `e = e^{R(T−t)}`.
pub fn psi_w(t: f64, p: f64, w: f64, phi: f64, dphi_dp: f64, market: &MarketModel, prefs: &RiskPreferences) -> f64 {
    let a = prefs.discounted_eta(market.rate, t);
    let sigma = market.sigma(t, p);
    let s2 = sigma * sigma;
    a * ((market.mu(t, p) - market.rate) * phi + p * s2 * dphi_dp) * w - 0.5 * s2 * a * a * phi * w * w
}

/// `g` and `∂g/∂p` on a `(t, p)` lattice, bilinear in `(t, ln p)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GLattice {
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    /// Row-major by `t`.
    pub nodes: Vec<GEstimate>,
}

fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    let n = axis.len();
    if n == 1 || x <= axis[0] {
        return (0, 0.0);
    }
    if x >= axis[n - 1] {
        return (n - 2, 1.0);
    }
    let i = axis.partition_point(|&v| v <= x) - 1;
    (i, (x - axis[i]) / (axis[i + 1] - axis[i]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub n_t: usize,
    pub n_p: usize,
    /// `p` range as multiples of `P₀`.
    pub p_range: (f64, f64),
    pub n_steps: usize,
    pub n_reps: usize,
    pub seed: u64,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self {
            n_t: 50,
            n_p: 50,
            p_range: (0.2, 5.0),
            n_steps: crate::paths::DEFAULT_STEPS,
            n_reps: 10_000,
            seed: 0,
        }
    }
}

impl GLattice {
    /// Builds the lattice on `t ∈ [0,T]` and a geometric `p` axis. Every `p`
    /// column uses the same replication seeds. For time-homogeneous markets a
    /// single path from `(0, p)` yields `g` at every lattice time through the
    /// running integral, since `g` then depends on `T − t` only.
    pub fn build(market: &MarketModel, horizon: f64, spec: &LatticeSpec) -> Result<Self> {
        if spec.n_t < 2 || spec.n_p < 2 || !(0.0 < spec.p_range.0 && spec.p_range.0 < spec.p_range.1) {
            return Err(Error::invalid("lattice", "need >= 2 nodes per axis and 0 < p_lo < p_hi"));
        }
        if spec.n_reps < MIN_REPLICATIONS {
            return Err(Error::InsufficientReplications {
                reason: format!("{} < {MIN_REPLICATIONS} replications", spec.n_reps),
            });
        }
        let t: Vec<f64> = (0..spec.n_t).map(|i| horizon * i as f64 / (spec.n_t - 1) as f64).collect();
        let (lo, hi) = (spec.p_range.0 * market.p0, spec.p_range.1 * market.p0);
        let p: Vec<f64> = (0..spec.n_p)
            .map(|j| lo * (hi / lo).powf(j as f64 / (spec.n_p - 1) as f64))
            .collect();
        let columns: Vec<Vec<GEstimate>> = if market.is_time_homogeneous() {
            p.par_iter()
                .map(|&pj| homogeneous_column(market, horizon, &t, pj, spec))
                .collect::<Result<_>>()?
        } else {
            p.iter()
                .map(|&pj| {
                    t.iter()
                        .map(|&ti| estimate_g(ti, pj, market, horizon, spec.n_steps, spec.n_reps, spec.seed))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?
        };
        let mut nodes = Vec::with_capacity(t.len() * p.len());
        for i in 0..t.len() {
            for col in &columns {
                nodes.push(col[i]);
            }
        }
        Ok(Self { t, p, nodes })
    }

    fn node(&self, i: usize, j: usize) -> &GEstimate {
        &self.nodes[i * self.p.len() + j]
    }

    fn interpolate(&self, t: f64, p: f64, field: impl Fn(&GEstimate) -> f64) -> f64 {
        let (i, wt) = locate(&self.t, t);
        let (j, wp) = locate(&self.p, p);
        let wp = if wp > 0.0 && wp < 1.0 {
            (p / self.p[j]).ln() / (self.p[j + 1] / self.p[j]).ln()
        } else {
            wp
        };
        let at = |a: usize, b: usize| field(self.node(a.min(self.t.len() - 1), b.min(self.p.len() - 1)));
        let lo = at(i, j) * (1.0 - wp) + at(i, j + 1) * wp;
        let hi = at(i + 1, j) * (1.0 - wp) + at(i + 1, j + 1) * wp;
        lo * (1.0 - wt) + hi * wt
    }

    pub fn g(&self, t: f64, p: f64) -> f64 {
        self.interpolate(t, p, |e| e.g)
    }

    pub fn dg_dp(&self, t: f64, p: f64) -> f64 {
        self.interpolate(t, p, |e| e.dg_dp)
    }

    /// Largest `|∂g/∂p| / (1 + p^β)` over the lattice.
    pub fn growth_constant(&self, beta: f64) -> f64 {
        let np = self.p.len();
        self.nodes
            .iter()
            .enumerate()
            .map(|(k, e)| e.dg_dp.abs() / (1.0 + self.p[k % np].powf(beta)))
            .fold(0.0, f64::max)
    }

    /// Writes `t,p,g,dg_dp,se_g,se_dgdp` rows.
    pub fn write_csv<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "t,p,g,dg_dp,se_g,se_dgdp")?;
        for (i, t) in self.t.iter().enumerate() {
            for (j, p) in self.p.iter().enumerate() {
                let e = self.node(i, j);
                writeln!(out, "{t},{p},{},{},{},{}", e.g, e.dg_dp, e.se_g, e.se_dgdp)?;
            }
        }
        Ok(())
    }
}

fn homogeneous_column(market: &MarketModel, horizon: f64, t: &[f64], p: f64, spec: &LatticeSpec) -> Result<Vec<GEstimate>> {
    let grid = SimGrid::new(0.0, horizon, spec.n_steps)?;
    let dt = grid.dt();
    let h = DEFAULT_BUMP;
    let (p_lo, p_hi) = (p * (1.0 - h), p * (1.0 + h));
    // Remaining time τ = T − t_i located on the simulation grid.
    let taus: Vec<(usize, f64)> = t
        .iter()
        .map(|&ti| {
            let tau = (horizon - ti).max(0.0);
            let x = tau / dt;
            let k = (x.floor() as usize).min(grid.n_steps.saturating_sub(1));
            (k, (x - k as f64).clamp(0.0, 1.0))
        })
        .collect();
    let n = t.len();
    let mut sum_g = vec![0.0; n];
    let mut sum_g2 = vec![0.0; n];
    let mut sum_d = vec![0.0; n];
    let mut sum_d2 = vec![0.0; n];
    let (mut mid, mut up, mut down) = (Vec::new(), Vec::new(), Vec::new());
    let at = |v: &[f64], (k, w): (usize, f64)| v[k] * (1.0 - w) + v[k + 1] * w;
    for rep in 0..spec.n_reps as u64 {
        let mut rng = stream_rng(spec.seed, rep, Stream::Asset);
        let dw = brownian_increments(&mut rng, grid.n_steps, dt);
        running_sharpe_integral(market, &grid, p, &dw, &mut mid)?;
        running_sharpe_integral(market, &grid, p_hi, &dw, &mut up)?;
        running_sharpe_integral(market, &grid, p_lo, &dw, &mut down)?;
        for (i, &loc) in taus.iter().enumerate() {
            let g = -at(&mid, loc);
            let d = -(at(&up, loc) - at(&down, loc)) / (p_hi - p_lo);
            sum_g[i] += g;
            sum_g2[i] += g * g;
            sum_d[i] += d;
            sum_d2[i] += d * d;
        }
    }
    let nf = spec.n_reps as f64;
    let se = |s: f64, s2: f64| (((s2 - s * s / nf) / (nf - 1.0)).max(0.0) / nf).sqrt();
    Ok((0..n)
        .map(|i| {
            let terminal = t[i] >= horizon;
            GEstimate {
                g: if terminal { 0.0 } else { sum_g[i] / nf },
                dg_dp: if terminal { 0.0 } else { sum_d[i] / nf },
                se_g: if terminal { 0.0 } else { se(sum_g[i], sum_g2[i]) },
                se_dgdp: if terminal { 0.0 } else { se(sum_d[i], sum_d2[i]) },
                n_reps: spec.n_reps,
                seed: spec.seed,
                bump: h,
            }
        })
        .collect())
}
