//! Seeded Euler–Maruyama simulation of the factor, the intensity and the risky
//! asset, and Cox claim arrivals by thinning.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ClaimModel, FactorModel, MarketModel};
use crate::rng::{stream_rng, Stream};

/// Thinning majorant inflation over the larger endpoint intensity of a cell.
pub const MAJORANT_FACTOR: f64 = 1.05;

pub const DEFAULT_STEPS: usize = 500;

/// Uniform time grid on `[t0, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimGrid {
    pub t0: f64,
    pub t_end: f64,
    pub n_steps: usize,
}

impl SimGrid {
    /// A zero-length window is allowed; it yields a single node.
    pub fn new(t0: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t_end.is_finite()) || t_end < t0 {
            return Err(Error::invalid("grid", format!("need t0 <= t_end, got [{t0}, {t_end}]")));
        }
        if n_steps == 0 {
            return Err(Error::invalid("n_steps", "must be positive"));
        }
        Ok(Self { t0, t_end, n_steps })
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t0) / self.n_steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.t_end
        } else {
            self.t0 + i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.time(i)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.t_end == self.t0
    }

    /// Index of the cell `[t_i, t_{i+1})` containing `t`.
    pub fn cell(&self, t: f64) -> usize {
        if self.is_empty() {
            return 0;
        }
        (((t - self.t0) / self.dt()).floor() as usize).min(self.n_steps - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Physical,
    RiskNeutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClaimEvent {
    pub time: f64,
    pub mark: f64,
}

/// One replication on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    pub grid: SimGrid,
    pub y: Vec<f64>,
    pub lambda: Vec<f64>,
    pub p: Vec<f64>,
    /// Brownian increments driving `p`.
    pub asset_noise: Vec<f64>,
    pub events: Vec<ClaimEvent>,
    pub seed: u64,
    pub replication: u64,
    pub measure: Measure,
}

/// `n` independent `N(0, dt)` increments.
pub fn brownian_increments<R: Rng + ?Sized>(rng: &mut R, n: usize, dt: f64) -> Vec<f64> {
    let sd = dt.sqrt();
    (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            sd * z
        })
        .collect()
}

/// Euler–Maruyama factor path driven by the given increments, with `λ(t_i, Y_i)`.
pub fn simulate_factor_from_increments(model: &FactorModel, grid: &SimGrid, dw: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let dt = grid.dt();
    let mut y = Vec::with_capacity(grid.n_steps + 1);
    let mut lambda = Vec::with_capacity(grid.n_steps + 1);
    let mut cur = model.y0;
    for i in 0..=grid.n_steps {
        let t = grid.time(i);
        let l = model.lambda(t, cur);
        if !cur.is_finite() {
            return Err(Error::NonFiniteState { what: "factor", t });
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::NonFiniteState { what: "intensity", t });
        }
        y.push(cur);
        lambda.push(l);
        if i < grid.n_steps {
            cur += model.b(t, cur) * dt + model.gamma(t, cur) * dw[i];
        }
    }
    Ok((y, lambda))
}

pub fn simulate_factor(model: &FactorModel, grid: &SimGrid, seed: u64, replication: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let dw = if model.is_deterministic() {
        vec![0.0; grid.n_steps]
    } else {
        let mut rng = stream_rng(seed, replication, Stream::Factor);
        brownian_increments(&mut rng, grid.n_steps, grid.dt())
    };
    simulate_factor_from_increments(model, grid, &dw)
}

/// Log-Euler asset path started at `p_start` at `grid.t0`.
pub fn simulate_asset_from_increments(
    market: &MarketModel,
    grid: &SimGrid,
    p_start: f64,
    measure: Measure,
    dw: &[f64],
) -> Result<Vec<f64>> {
    let dt = grid.dt();
    let mut out = Vec::with_capacity(grid.n_steps + 1);
    let mut log_p = p_start.ln();
    for i in 0..=grid.n_steps {
        let t = grid.time(i);
        let p = log_p.exp();
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::NonFiniteState { what: "asset price", t });
        }
        out.push(p);
        if i < grid.n_steps {
            let sigma = market.sigma(t, p);
            let drift = match measure {
                Measure::Physical => market.mu(t, p),
                Measure::RiskNeutral => market.rate,
            };
            log_p += (drift - 0.5 * sigma * sigma) * dt + sigma * dw[i];
        }
    }
    Ok(out)
}

/// Asset path from `P₀` with its driving increments.
pub fn simulate_asset(
    market: &MarketModel,
    grid: &SimGrid,
    seed: u64,
    replication: u64,
    measure: Measure,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rng = stream_rng(seed, replication, Stream::Asset);
    let dw = brownian_increments(&mut rng, grid.n_steps, grid.dt());
    let p = simulate_asset_from_increments(market, grid, market.p0, measure, &dw)?;
    Ok((p, dw))
}

/// Cox arrivals for a piecewise-linear intensity path by thinning against the
/// per-cell majorant `1.05 · max(λ_i, λ_{i+1})`, with independent marks.
pub fn simulate_claims(
    lambda: &[f64],
    claims: &ClaimModel,
    grid: &SimGrid,
    seed: u64,
    replication: u64,
) -> Result<Vec<ClaimEvent>> {
    let mut arrivals = stream_rng(seed, replication, Stream::Arrivals);
    let mut marks = stream_rng(seed, replication, Stream::Marks);
    thin(lambda, grid, &mut arrivals, |_| claims.sample(&mut marks))
}

fn thin<R: Rng + ?Sized>(
    lambda: &[f64],
    grid: &SimGrid,
    rng: &mut R,
    mut mark: impl FnMut(&mut R) -> f64,
) -> Result<Vec<ClaimEvent>> {
    if lambda.len() != grid.n_steps + 1 {
        return Err(Error::invalid("lambda", "path length must be n_steps + 1"));
    }
    if let Some((i, &l)) = lambda.iter().enumerate().find(|(_, l)| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::invalid("lambda", format!("non-positive intensity {l} at node {i}")));
    }
    let mut events = Vec::new();
    if grid.is_empty() {
        return Ok(events);
    }
    let dt = grid.dt();
    for i in 0..grid.n_steps {
        let (a, b) = (lambda[i], lambda[i + 1]);
        let majorant = MAJORANT_FACTOR * a.max(b);
        let t_left = grid.time(i);
        let t_right = grid.time(i + 1);
        let mut s = t_left;
        loop {
            let e: f64 = rng.random();
            s += -(1.0 - e).ln() / majorant;
            if s >= t_right {
                break;
            }
            let w = ((s - t_left) / dt).clamp(0.0, 1.0);
            let intensity = a + w * (b - a);
            if intensity > majorant {
                return Err(Error::MajorantBreach { t: s, intensity, majorant });
            }
            let accept: f64 = rng.random();
            if accept * majorant < intensity && s > grid.t0 {
                let z = mark(rng);
                events.push(ClaimEvent { time: s, mark: z });
            }
        }
    }
    Ok(events)
}

/// Factor, intensity, asset and claims for one replication.
pub fn simulate_bundle(
    factor: &FactorModel,
    market: &MarketModel,
    claims: &ClaimModel,
    grid: &SimGrid,
    seed: u64,
    replication: u64,
    measure: Measure,
) -> Result<PathBundle> {
    let (y, lambda) = simulate_factor(factor, grid, seed, replication)?;
    let (p, asset_noise) = simulate_asset(market, grid, seed, replication, measure)?;
    let events = simulate_claims(&lambda, claims, grid, seed, replication)?;
    Ok(PathBundle {
        grid: *grid,
        y,
        lambda,
        p,
        asset_noise,
        events,
        seed,
        replication,
        measure,
    })
}

/// Writes `replication,t,Y,lambda,P` rows.
pub fn write_paths_csv<W: Write + ?Sized>(out: &mut W, bundles: &[PathBundle]) -> std::io::Result<()> {
    writeln!(out, "replication,t,Y,lambda,P")?;
    for b in bundles {
        for i in 0..=b.grid.n_steps {
            writeln!(out, "{},{},{},{},{}", b.replication, b.grid.time(i), b.y[i], b.lambda[i], b.p[i])?;
        }
    }
    Ok(())
}

/// Writes `replication,time,mark` rows.
pub fn write_events_csv<W: Write + ?Sized>(out: &mut W, bundles: &[PathBundle]) -> std::io::Result<()> {
    writeln!(out, "replication,time,mark")?;
    for b in bundles {
        for e in &b.events {
            writeln!(out, "{},{},{}", b.replication, e.time, e.mark)?;
        }
    }
    Ok(())
}
