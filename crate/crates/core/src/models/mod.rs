//! Coefficient functions, claim-size laws and hypothesis checks.

pub mod claims;
pub mod factor;
pub mod market;
pub mod validate;

pub use claims::{ClaimLaw, ClaimModel};
pub use factor::{Coefficient, FactorModel, IntensityMap};
pub use market::{MarketKind, MarketModel};
pub use validate::{validate_assumptions, Check, CheckStatus, ValidationReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CARA risk aversion and planning horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskPreferences {
    pub eta: f64,
    pub horizon: f64,
}

impl RiskPreferences {
    pub fn new(eta: f64, horizon: f64) -> Result<Self> {
        let prefs = Self { eta, horizon };
        prefs.check()?;
        Ok(prefs)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid("eta", format!("must be positive and finite, got {}", self.eta)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("horizon", format!("must be positive and finite, got {}", self.horizon)));
        }
        Ok(())
    }

    /// `η e^{R(T−t)}`.
    pub fn discounted_eta(&self, rate: f64, t: f64) -> f64 {
        self.eta * (rate * (self.horizon - t)).exp()
    }
}
