//! JSON scenario configuration.
//!
//! One document describes the model, the Monte Carlo settings and the
//! optional sweep. Unknown keys are rejected, `schema_version` must equal
//! [`SCHEMA_VERSION`] and `seed` has no default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use reinsure_core::investment::LatticeSpec;
use reinsure_core::models::{ClaimLaw, ClaimModel, FactorModel, MarketKind, MarketModel, RiskPreferences};
use reinsure_core::premium::PrincipleKind;
use reinsure_core::scenario::PremiumSpec;
use reinsure_core::Scenario;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Truncation {
    None,
    Value { value: f64 },
    Quantile { level: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimsConfig {
    pub law: ClaimLaw,
    pub truncation: Truncation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PremiumConfig {
    pub kind: PrincipleKind,
    pub theta_r: f64,
    /// Contract horizon of the intensity-adjusted loading; defaults to the planning horizon.
    #[serde(default)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n_reps: usize,
    pub n_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeConfig {
    pub n_t: usize,
    pub n_p: usize,
    pub p_range: (f64, f64),
    pub n_reps: usize,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        let d = LatticeSpec::default();
        Self {
            n_t: d.n_t,
            n_p: d.n_p,
            p_range: d.p_range,
            n_reps: d.n_reps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceConfig {
    pub n_t: usize,
    pub n_y: usize,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self { n_t: 51, n_y: 81 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Eta,
    ThetaR,
    /// Planning horizon only; the contract horizon stays at its configured value.
    Horizon,
    /// Planning and contract horizon together.
    HorizonCoupled,
    Sigma,
    Rate,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Eta => "eta",
            SweepParameter::ThetaR => "theta_r",
            SweepParameter::Horizon => "horizon",
            SweepParameter::HorizonCoupled => "horizon_coupled",
            SweepParameter::Sigma => "sigma",
            SweepParameter::Rate => "rate",
        }
    }

    pub fn affects_retention(self) -> bool {
        !matches!(self, SweepParameter::Sigma)
    }

    pub fn affects_investment(self) -> bool {
        matches!(self, SweepParameter::Eta | SweepParameter::Sigma | SweepParameter::Rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl SweepConfig {
    pub fn values(&self) -> Vec<f64> {
        let n = self.steps - 1;
        (0..self.steps)
            .map(|i| self.from + (self.to - self.from) * i as f64 / n as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicConfig {
    pub n_paths: usize,
}

impl Default for DynamicConfig {
    fn default() -> Self {
        Self { n_paths: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RetentionChoice {
    Constant { u: f64 },
    Optimal,
}

impl Default for RetentionChoice {
    fn default() -> Self {
        RetentionChoice::Constant { u: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub factor: FactorModel,
    pub market: MarketModel,
    pub claims: ClaimsConfig,
    pub premium: PremiumConfig,
    pub theta_i: f64,
    pub preferences: RiskPreferences,
    pub x0: f64,
    pub mc: McConfig,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub surface: SurfaceConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub dynamic: DynamicConfig,
    #[serde(default)]
    pub retention: RetentionChoice,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    /// Reference setting: `T = 5`, `η = 0.5`, `θ_r = 0.1`, `R = 0.05`, CEV market,
    /// Pareto claims truncated at the 99.99th percentile.
    pub fn reference(seed: u64) -> Self {
        let s = Scenario::reference(PrincipleKind::IntensityAdjustedVariance);
        Self {
            schema_version: SCHEMA_VERSION,
            seed,
            factor: s.factor,
            market: s.market,
            claims: ClaimsConfig {
                law: ClaimLaw::Pareto {
                    shape: 1.8182,
                    scale: 0.0545,
                },
                truncation: Truncation::Quantile { level: 0.9999 },
            },
            premium: PremiumConfig {
                kind: s.premium.kind,
                theta_r: s.premium.theta_r,
                horizon: None,
            },
            theta_i: s.theta_i,
            preferences: s.prefs,
            x0: s.x0,
            mc: McConfig {
                n_reps: 100_000,
                n_steps: s.n_steps,
            },
            lattice: LatticeConfig::default(),
            surface: SurfaceConfig::default(),
            sweep: None,
            dynamic: DynamicConfig::default(),
            retention: RetentionChoice::default(),
            output_dir: None,
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: Self = serde_json::from_str(&text).map_err(|source| CliError::ConfigParse {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> CliResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if self.mc.n_reps < 2 {
            return Err(CliError::config("mc.n_reps", "need at least 2 replications"));
        }
        if self.mc.n_steps == 0 {
            return Err(CliError::config("mc.n_steps", "must be positive"));
        }
        if self.surface.n_t < 2 || self.surface.n_y < 2 {
            return Err(CliError::config("surface", "need at least 2 nodes per axis"));
        }
        if self.dynamic.n_paths == 0 {
            return Err(CliError::config("dynamic.n_paths", "must be positive"));
        }
        if let RetentionChoice::Constant { u } = self.retention {
            if !(0.0..=1.0).contains(&u) {
                return Err(CliError::config("retention.u", format!("must lie in [0, 1], got {u}")));
            }
        }
        if let Some(sw) = &self.sweep {
            if sw.steps < 2 {
                return Err(CliError::config("sweep.steps", "need at least 2 points"));
            }
            if !(sw.from.is_finite() && sw.to.is_finite()) || sw.from == sw.to {
                return Err(CliError::config("sweep", "range must be finite and non-degenerate"));
            }
        }
        self.scenario()?.check()?;
        Ok(())
    }

    pub fn claim_model(&self) -> CliResult<ClaimModel> {
        let d = match (&self.claims.truncation, &self.claims.law) {
            (Truncation::None, _) => None,
            (Truncation::Value { value }, _) => Some(*value),
            (Truncation::Quantile { level }, law) => {
                if !(*level > 0.0 && *level < 1.0) {
                    return Err(CliError::config("claims.truncation.level", format!("must lie in (0, 1), got {level}")));
                }
                Some(match law {
                    ClaimLaw::Pareto { shape, scale } => scale * (1.0 - level).powf(-1.0 / shape),
                    ClaimLaw::Exponential { rate } => -(1.0 - level).ln() / rate,
                    ClaimLaw::Empirical { .. } => {
                        return Err(CliError::config("claims.truncation", "quantile truncation needs a continuous law"))
                    }
                })
            }
        };
        Ok(ClaimModel::new(self.claims.law.clone(), d)?)
    }

    pub fn scenario(&self) -> CliResult<Scenario> {
        let y0 = self.factor.y0;
        Ok(Scenario {
            factor: self.factor,
            market: self.market.clone(),
            claims: self.claim_model()?,
            premium: PremiumSpec {
                kind: self.premium.kind.clone(),
                theta_r: self.premium.theta_r,
                horizon: self.premium.horizon,
            },
            theta_i: self.theta_i,
            prefs: self.preferences,
            x0: self.x0,
            n_steps: self.mc.n_steps,
            probe_y: (y0 - 4.0, y0 + 4.0),
        })
    }

    pub fn lattice_spec(&self, seed: u64) -> LatticeSpec {
        LatticeSpec {
            n_t: self.lattice.n_t,
            n_p: self.lattice.n_p,
            p_range: self.lattice.p_range,
            n_steps: self.mc.n_steps,
            n_reps: self.lattice.n_reps,
            seed,
        }
    }
}

/// Applies one sweep value to a scenario.
pub fn apply_sweep(base: &Scenario, parameter: SweepParameter, value: f64) -> CliResult<Scenario> {
    let mut s = base.clone();
    match parameter {
        SweepParameter::Eta => s.prefs.eta = value,
        SweepParameter::ThetaR => s.premium.theta_r = value,
        SweepParameter::Horizon => {
            s.premium.horizon = Some(base.premium_horizon());
            s.prefs.horizon = value;
        }
        SweepParameter::HorizonCoupled => {
            s.premium.horizon = None;
            s.prefs.horizon = value;
        }
        SweepParameter::Sigma => {
            s.market.kind = match &base.market.kind {
                MarketKind::Constant { mu, .. } => MarketKind::Constant { mu: *mu, sigma: value },
                MarketKind::Cev { mu, beta, .. } => MarketKind::Cev {
                    mu: *mu,
                    sigma: value,
                    beta: *beta,
                },
                MarketKind::Custom { .. } => {
                    return Err(CliError::config("sweep.parameter", "sigma sweeps need a constant or CEV market"))
                }
            }
        }
        SweepParameter::Rate => s.market.rate = value,
    }
    s.check()?;
    Ok(s)
}
