//! Reinsurance premium principles `q(t,y,u)` with their `u`-derivatives, the
//! insurance premium `c(t,y)`, and the Monte Carlo check that the
//! intensity-adjusted variance premium dominates the variance-principle
//! premium of the ceded loss.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ClaimModel, IntensityMap};
use crate::paths::{simulate_claims, simulate_factor};
use crate::scenario::Scenario;
use crate::stats::{variance, Estimate};

/// Premium rate and its first two derivatives in `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PremiumValue {
    pub q: f64,
    pub dq_du: f64,
    pub d2q_du2: f64,
}

/// Tabulated premium on a `(y, u)` grid. Rows are indexed by `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PremiumTable {
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub dq_du: Vec<Vec<f64>>,
    pub d2q_du2: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PrincipleKind {
    ExpectedValue,
    Variance,
    IntensityAdjustedVariance,
    Custom { table: PremiumTable },
}

impl PrincipleKind {
    pub fn label(&self) -> &'static str {
        match self {
            PrincipleKind::ExpectedValue => "evp",
            PrincipleKind::Variance => "vp",
            PrincipleKind::IntensityAdjustedVariance => "iavp",
            PrincipleKind::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PremiumPrinciple {
    pub kind: PrincipleKind,
    pub theta_r: f64,
    /// Contract horizon entering the intensity-adjusted loading.
    pub horizon: f64,
    mean: f64,
    second: f64,
    intensity: IntensityMap,
}

/// Cubic Hermite interpolation with finite-difference tangents.
fn hermite(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n == 1 {
        return ys[0];
    }
    let x = x.clamp(xs[0], xs[n - 1]);
    let i = (xs.partition_point(|&v| v <= x).max(1) - 1).min(n - 2);
    let slope = |j: usize| -> f64 {
        if j == 0 {
            (ys[1] - ys[0]) / (xs[1] - xs[0])
        } else if j == n - 1 {
            (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2])
        } else {
            (ys[j + 1] - ys[j - 1]) / (xs[j + 1] - xs[j - 1])
        }
    };
    let h = xs[i + 1] - xs[i];
    let s = (x - xs[i]) / h;
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * ys[i] + h10 * h * slope(i) + h01 * ys[i + 1] + h11 * h * slope(i + 1)
}

impl PremiumTable {
    fn interpolate(&self, field: &[Vec<f64>], y: f64, u: f64) -> f64 {
        let column: Vec<f64> = field.iter().map(|row| hermite(&self.u, row, u)).collect();
        hermite(&self.y, &column, y)
    }

    /// Shape and contract checks run at load time.
    pub fn check(&self) -> Result<()> {
        let strictly_increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if self.y.is_empty() || self.u.len() < 3 || !strictly_increasing(&self.y) || !strictly_increasing(&self.u) {
            return Err(Error::invalid("table", "need increasing y and u axes with >= 3 u nodes"));
        }
        if self.u[0] != 0.0 || *self.u.last().unwrap() != 1.0 {
            return Err(Error::invalid("table", "u axis must span [0, 1]"));
        }
        for field in [&self.q, &self.dq_du, &self.d2q_du2] {
            if field.len() != self.y.len() || field.iter().any(|r| r.len() != self.u.len() || r.iter().any(|v| !v.is_finite())) {
                return Err(Error::invalid("table", "every field needs one finite row per y node"));
            }
        }
        for (j, row) in self.q.iter().enumerate() {
            if row[0] != 0.0 {
                return Err(Error::invalid("table", format!("q(y={}, 0) must be 0", self.y[j])));
            }
        }
        if self.dq_du.iter().flatten().any(|&d| d < 0.0) {
            return Err(Error::invalid("table", "dq_du must be non-negative"));
        }
        // Table derivatives against central differences of the tabulated values.
        let scale = |f: &Vec<Vec<f64>>| f.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
        let tol_d1 = 1e-2 * scale(&self.dq_du);
        let tol_d2 = 1e-2 * scale(&self.d2q_du2) + 1e-2 * scale(&self.dq_du);
        for j in 0..self.y.len() {
            for i in 1..self.u.len() - 1 {
                let h = self.u[i + 1] - self.u[i - 1];
                let fd1 = (self.q[j][i + 1] - self.q[j][i - 1]) / h;
                let fd2 = (self.dq_du[j][i + 1] - self.dq_du[j][i - 1]) / h;
                if (fd1 - self.dq_du[j][i]).abs() > tol_d1 || (fd2 - self.d2q_du2[j][i]).abs() > tol_d2 {
                    return Err(Error::invalid(
                        "table",
                        format!("derivatives inconsistent with q near y={}, u={}", self.y[j], self.u[i]),
                    ));
                }
            }
        }
        Ok(())
    }
}

impl PremiumPrinciple {
    pub fn new(kind: PrincipleKind, theta_r: f64, horizon: f64, claims: &ClaimModel, intensity: IntensityMap) -> Result<Self> {
        if !(theta_r >= 0.0 && theta_r.is_finite()) {
            return Err(Error::invalid("theta_r", format!("must be non-negative, got {theta_r}")));
        }
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("premium horizon", format!("must be non-negative, got {horizon}")));
        }
        if let PrincipleKind::Custom { table } = &kind {
            table.check()?;
        }
        if !claims.mean().is_finite() {
            return Err(Error::invalid("claims", "premium needs a finite mean claim"));
        }
        if !matches!(kind, PrincipleKind::ExpectedValue | PrincipleKind::Custom { .. }) && !claims.second_moment().is_finite() {
            return Err(Error::invalid("claims", "variance principles need a finite second moment"));
        }
        Ok(Self {
            kind,
            theta_r,
            horizon,
            mean: claims.mean(),
            second: claims.second_moment(),
            intensity,
        })
    }

    /// `q(t,y,u)` with `λ = λ(t,y)`.
    pub fn eval(&self, t: f64, y: f64, u: f64) -> PremiumValue {
        self.eval_with_lambda(t, y, self.intensity.eval(t, y), u)
    }

    /// `q` at an explicit intensity value; `y` is used by tabulated premiums only.
    pub fn eval_with_lambda(&self, _t: f64, y: f64, lambda: f64, u: f64) -> PremiumValue {
        let (m1, m2, th) = (self.mean, self.second, self.theta_r);
        match &self.kind {
            PrincipleKind::ExpectedValue => {
                let slope = (1.0 + th) * m1 * lambda;
                PremiumValue {
                    q: slope * u,
                    dq_du: slope,
                    d2q_du2: 0.0,
                }
            }
            PrincipleKind::Variance | PrincipleKind::IntensityAdjustedVariance => {
                let load = if matches!(self.kind, PrincipleKind::Variance) {
                    lambda
                } else {
                    lambda + self.horizon * lambda * lambda
                };
                PremiumValue {
                    q: m1 * lambda * u + th * m2 * load * u * u,
                    dq_du: m1 * lambda + 2.0 * th * m2 * load * u,
                    d2q_du2: 2.0 * th * m2 * load,
                }
            }
            PrincipleKind::Custom { table } => PremiumValue {
                q: if u == 0.0 { 0.0 } else { table.interpolate(&table.q, y, u) },
                dq_du: table.interpolate(&table.dq_du, y, u),
                d2q_du2: table.interpolate(&table.d2q_du2, y, u),
            },
        }
    }

    pub fn intensity(&self) -> &IntensityMap {
        &self.intensity
    }

    pub fn claim_mean(&self) -> f64 {
        self.mean
    }

    pub fn claim_second_moment(&self) -> f64 {
        self.second
    }
}

/// Expected-value insurance premium `c = (1 + θ_i) E[Z] λ`.
pub fn insurance_premium(theta_i: f64, claim_mean: f64, lambda: f64) -> f64 {
    (1.0 + theta_i) * claim_mean * lambda
}

/// Monte Carlo comparison of `E[∫q ds]` with `E[∫u dC] + θ_r Var[∫u dC]`.
#[derive(Debug, Clone, Serialize)]
pub struct DominanceReport {
    pub lhs: Estimate,
    pub rhs: Estimate,
    /// `LHS − RHS` with its standard error from per-replication influence values.
    pub difference: Estimate,
    pub holds: bool,
    pub n_reps: usize,
}

/// Checks the premium of `scenario` against the variance principle applied to
/// the ceded loss `∫u dC` under the feedback retention `u(t, y)`.
pub fn iavp_dominance_check<U>(u: U, scenario: &Scenario, n_reps: usize, seed: u64) -> Result<DominanceReport>
where
    U: Fn(f64, f64) -> f64 + Sync,
{
    if n_reps < 2 {
        return Err(Error::InsufficientReplications {
            reason: format!("{n_reps} replications"),
        });
    }
    let grid = scenario.grid()?;
    let principle = scenario.premium()?;
    let rows: Vec<(f64, f64)> = (0..n_reps as u64)
        .into_par_iter()
        .map(|rep| -> Result<(f64, f64)> {
            let (y, lambda) = simulate_factor(&scenario.factor, &grid, seed, rep)?;
            let events = simulate_claims(&lambda, &scenario.claims, &grid, seed, rep)?;
            let premium: Vec<f64> = (0..=grid.n_steps)
                .map(|i| {
                    let t = grid.time(i);
                    principle.eval_with_lambda(t, y[i], lambda[i], u(t, y[i])).q
                })
                .collect();
            let lhs = crate::stats::trapezoid(&premium, grid.dt());
            let ceded = events
                .iter()
                .map(|e| {
                    let i = grid.cell(e.time);
                    u(grid.time(i), y[i]) * e.mark
                })
                .sum::<f64>();
            Ok((lhs, ceded))
        })
        .collect::<Result<Vec<_>>>()?;
    let lhs_samples: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let ceded: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let lhs = Estimate::from_samples(&lhs_samples);
    let ceded_est = Estimate::from_samples(&ceded);
    let var = variance(&ceded);
    let theta = principle.theta_r;
    let rhs_influence: Vec<f64> = ceded
        .iter()
        .map(|&s| s + theta * ((s - ceded_est.mean).powi(2) - var))
        .collect();
    let rhs = Estimate {
        mean: ceded_est.mean + theta * var,
        se: Estimate::from_samples(&rhs_influence).se,
    };
    let diff_influence: Vec<f64> = lhs_samples.iter().zip(&rhs_influence).map(|(l, r)| l - r).collect();
    let difference = Estimate {
        mean: lhs.mean - rhs.mean,
        se: Estimate::from_samples(&diff_influence).se,
    };
    if rhs.mean > 0.0 && rhs.se > 0.1 * rhs.mean {
        return Err(Error::InsufficientReplications {
            reason: format!("SE {} exceeds 10% of RHS {}", rhs.se, rhs.mean),
        });
    }
    Ok(DominanceReport {
        lhs,
        rhs,
        holds: difference.mean >= -3.0 * difference.se,
        difference,
        n_reps,
    })
}
