//! A complete experiment description shared by the solvers and simulators.

use crate::error::{Error, Result};
use crate::models::{ClaimModel, FactorModel, MarketModel, RiskPreferences};
use crate::paths::{SimGrid, DEFAULT_STEPS};
use crate::premium::{insurance_premium, PremiumPrinciple, PrincipleKind};
use crate::reinsurance::ReinsuranceProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct PremiumSpec {
    pub kind: PrincipleKind,
    pub theta_r: f64,
    /// Contract horizon of the intensity-adjusted loading; `None` uses the planning horizon.
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub factor: FactorModel,
    pub market: MarketModel,
    pub claims: ClaimModel,
    pub premium: PremiumSpec,
    /// Insurer loading `θ_i` of `c = (1 + θ_i) E[Z] λ`.
    pub theta_i: f64,
    pub prefs: RiskPreferences,
    pub x0: f64,
    pub n_steps: usize,
    /// Factor range of the validator probe grid.
    pub probe_y: (f64, f64),
}

impl Scenario {
    /// Reference setting: `T = 5`, `η = 0.5`, `θ_r = 0.1`, `R = 0.05`, the
    /// reference factor, the CEV market and truncated Pareto claims.
    pub fn reference(kind: PrincipleKind) -> Self {
        let factor = FactorModel::reference();
        Self {
            probe_y: (factor.y0 - 4.0, factor.y0 + 4.0),
            factor,
            market: MarketModel::reference_cev(),
            claims: ClaimModel::reference_pareto(),
            premium: PremiumSpec {
                kind,
                theta_r: 0.1,
                horizon: None,
            },
            theta_i: 0.03,
            prefs: RiskPreferences { eta: 0.5, horizon: 5.0 },
            x0: 1.0,
            n_steps: DEFAULT_STEPS,
        }
    }

    pub fn check(&self) -> Result<()> {
        self.factor.check()?;
        self.market.check()?;
        self.prefs.check()?;
        if !(self.theta_i >= 0.0 && self.theta_i.is_finite()) {
            return Err(Error::invalid("theta_i", format!("must be non-negative, got {}", self.theta_i)));
        }
        if !self.x0.is_finite() {
            return Err(Error::invalid("x0", "must be finite"));
        }
        if !(self.probe_y.0 < self.probe_y.1) {
            return Err(Error::invalid("probe_y", "need lo < hi"));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        self.prefs.horizon
    }

    pub fn premium_horizon(&self) -> f64 {
        self.premium.horizon.unwrap_or(self.prefs.horizon)
    }

    pub fn premium(&self) -> Result<PremiumPrinciple> {
        PremiumPrinciple::new(
            self.premium.kind.clone(),
            self.premium.theta_r,
            self.premium_horizon(),
            &self.claims,
            self.factor.intensity,
        )
    }

    pub fn grid(&self) -> Result<SimGrid> {
        SimGrid::new(0.0, self.horizon(), self.n_steps)
    }

    /// `c(t,y)`.
    pub fn insurance_premium(&self, t: f64, y: f64) -> f64 {
        insurance_premium(self.theta_i, self.claims.mean(), self.factor.lambda(t, y))
    }

    pub fn problem(&self) -> Result<ReinsuranceProblem> {
        ReinsuranceProblem::new(self.claims.clone(), self.premium()?, self.prefs, self.market.rate)
    }

    pub fn with_principle(&self, kind: PrincipleKind) -> Self {
        let mut s = self.clone();
        s.premium.kind = kind;
        s
    }
}
