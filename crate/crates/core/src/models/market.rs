//! Risky asset `dP = P[μ(t,P)dt + σ(t,P)dW]` and the risk-free rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SIGMA_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarketKind {
    /// Geometric Brownian motion.
    Constant { mu: f64, sigma: f64 },
    /// `σ(t,p) = σ p^β`, constant drift.
    Cev { mu: f64, sigma: f64, beta: f64 },
    /// Time-invariant coefficients tabulated in `p`, linearly interpolated and
    /// flat outside the table.
    Custom { p: Vec<f64>, mu: Vec<f64>, sigma: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketModel {
    pub rate: f64,
    pub p0: f64,
    pub kind: MarketKind,
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let n = xs.len();
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&v| v <= x) - 1;
    let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + w * (ys[i + 1] - ys[i])
}

impl MarketModel {
    pub fn new(rate: f64, p0: f64, kind: MarketKind) -> Result<Self> {
        let m = Self { rate, p0, kind };
        m.check()?;
        Ok(m)
    }

    /// CEV market of the reference experiments: `μ = 0.1`, `σ = 0.1`, `β = 0.5`,
    /// `R = 0.05`, `P₀ = 1`.
    pub fn reference_cev() -> Self {
        Self {
            rate: 0.05,
            p0: 1.0,
            kind: MarketKind::Cev {
                mu: 0.1,
                sigma: 0.1,
                beta: 0.5,
            },
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::invalid("rate", format!("must be positive, got {}", self.rate)));
        }
        if !(self.p0 > 0.0 && self.p0.is_finite()) {
            return Err(Error::invalid("p0", format!("must be positive, got {}", self.p0)));
        }
        match &self.kind {
            MarketKind::Constant { mu, sigma } | MarketKind::Cev { mu, sigma, .. } => {
                if !mu.is_finite() {
                    return Err(Error::invalid("mu", "must be finite"));
                }
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
                }
                if let MarketKind::Cev { beta, .. } = self.kind {
                    if !beta.is_finite() {
                        return Err(Error::invalid("beta", "must be finite"));
                    }
                }
            }
            MarketKind::Custom { p, mu, sigma } => {
                if p.len() < 2 || p.len() != mu.len() || p.len() != sigma.len() {
                    return Err(Error::invalid("kind", "custom table needs >= 2 rows of equal length"));
                }
                if p.windows(2).any(|w| w[1] <= w[0]) || p[0] <= 0.0 {
                    return Err(Error::invalid("kind", "custom p grid must be positive and strictly increasing"));
                }
                if sigma.iter().any(|&s| !(s > 0.0 && s.is_finite())) || mu.iter().any(|m| !m.is_finite()) {
                    return Err(Error::invalid("kind", "custom table needs finite mu and positive sigma"));
                }
            }
        }
        Ok(())
    }

    pub fn mu(&self, _t: f64, p: f64) -> f64 {
        match &self.kind {
            MarketKind::Constant { mu, .. } | MarketKind::Cev { mu, .. } => *mu,
            MarketKind::Custom { p: ps, mu, .. } => interp(ps, mu, p),
        }
    }

    pub fn sigma(&self, _t: f64, p: f64) -> f64 {
        match &self.kind {
            MarketKind::Constant { sigma, .. } => *sigma,
            MarketKind::Cev { sigma, beta, .. } => sigma * p.powf(*beta),
            MarketKind::Custom { p: ps, sigma, .. } => interp(ps, sigma, p),
        }
    }

    /// `σ(t,p)`, rejecting values below [`SIGMA_FLOOR`].
    pub fn sigma_checked(&self, t: f64, p: f64) -> Result<f64> {
        let s = self.sigma(t, p);
        if s < SIGMA_FLOOR || !s.is_finite() {
            return Err(Error::DegenerateVolatility { t, p, sigma: s });
        }
        Ok(s)
    }

    /// Market price of risk `(μ − R)/σ`.
    pub fn sharpe(&self, t: f64, p: f64) -> f64 {
        (self.mu(t, p) - self.rate) / self.sigma(t, p)
    }

    /// All built-in coefficients are time-invariant, so `g(t,p)` depends on
    /// `T − t` only.
    pub fn is_time_homogeneous(&self) -> bool {
        true
    }

    /// The Sharpe ratio does not depend on `p`, so `∂g/∂p ≡ 0`.
    pub fn has_constant_sharpe(&self) -> bool {
        match &self.kind {
            MarketKind::Constant { .. } => true,
            MarketKind::Cev { beta, .. } => *beta == 0.0,
            MarketKind::Custom { p, mu, sigma } => {
                let s0 = (mu[0] - self.rate) / sigma[0];
                (0..p.len()).all(|i| (mu[i] - self.rate) / sigma[i] == s0)
            }
        }
    }
}
