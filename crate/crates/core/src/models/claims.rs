//! Claim-size laws on `[0, D]` and their exponentially weighted moments
//! `M_k(c) = E[Z^k e^{cZ}]`.
//!
//! A finite truncation bound `D` means the law is conditioned on `Z ≤ D`, so
//! that `F_Z(D) = 1`. Only the exponential law has closed-form moments without
//! truncation; the other laws are representable with `D = ∞` so that
//! validators can diagnose them, but every exponential moment then diverges.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClaimLaw {
    Exponential { rate: f64 },
    /// Pareto type I: `P[Z > z] = (scale/z)^shape` for `z ≥ scale`.
    Pareto { shape: f64, scale: f64 },
    /// Finite atoms with optional weights (uniform when absent).
    Empirical {
        values: Vec<f64>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClaimModel {
    law: ClaimLaw,
    truncation: Option<f64>,
    /// `F(D)` of the untruncated law.
    mass: f64,
    mean: f64,
    second: f64,
    /// Normalised weights for empirical laws.
    atoms: Vec<(f64, f64)>,
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

impl ClaimModel {
    /// Builds the law truncated at `truncation` (`None` for `D = ∞`).
    pub fn new(law: ClaimLaw, truncation: Option<f64>) -> Result<Self> {
        if let Some(d) = truncation {
            if !(d > 0.0) || d.is_nan() {
                return Err(Error::invalid("truncation", format!("must be positive, got {d}")));
            }
        }
        let truncation = truncation.filter(|d| d.is_finite());
        let mut atoms = Vec::new();
        let mass = match &law {
            ClaimLaw::Exponential { rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(Error::invalid("rate", format!("must be positive, got {rate}")));
                }
                truncation.map_or(1.0, |d| -(-rate * d).exp_m1())
            }
            ClaimLaw::Pareto { shape, scale } => {
                if !(*shape > 0.0 && shape.is_finite() && *scale > 0.0 && scale.is_finite()) {
                    return Err(Error::invalid("pareto", "shape and scale must be positive"));
                }
                match truncation {
                    Some(d) if d <= *scale => {
                        return Err(Error::invalid("truncation", format!("must exceed the Pareto scale {scale}")))
                    }
                    Some(d) => 1.0 - (scale / d).powf(*shape),
                    None => 1.0,
                }
            }
            ClaimLaw::Empirical { values, weights } => {
                if values.is_empty() || values.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                    return Err(Error::invalid("values", "need at least one finite non-negative atom"));
                }
                let ws = match weights {
                    Some(w) if w.len() != values.len() => {
                        return Err(Error::invalid("weights", "length must match values"))
                    }
                    Some(w) if w.iter().any(|&x| !(x >= 0.0 && x.is_finite())) => {
                        return Err(Error::invalid("weights", "must be finite and non-negative"))
                    }
                    Some(w) => w.clone(),
                    None => vec![1.0; values.len()],
                };
                let total: f64 = ws.iter().sum();
                if !(total > 0.0) {
                    return Err(Error::invalid("weights", "must not all be zero"));
                }
                if let Some(d) = truncation {
                    if values.iter().any(|&v| v > d) {
                        return Err(Error::invalid("truncation", "empirical atoms exceed the truncation bound"));
                    }
                }
                atoms = values.iter().zip(&ws).map(|(&v, &w)| (v, w / total)).collect();
                1.0
            }
        };
        let mut model = Self {
            law,
            truncation,
            mass,
            mean: f64::NAN,
            second: f64::NAN,
            atoms,
        };
        if let ClaimLaw::Empirical { values, .. } = &model.law {
            let max = values.iter().cloned().fold(0.0, f64::max);
            model.truncation = Some(model.truncation.unwrap_or(max));
        }
        model.mean = model.raw_moment_or_inf(1)?;
        model.second = model.raw_moment_or_inf(2)?;
        Ok(model)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(ClaimLaw::Exponential { rate }, None)
    }

    /// Pareto law truncated at its `level` quantile.
    pub fn pareto_at_quantile(shape: f64, scale: f64, level: f64) -> Result<Self> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::invalid("level", format!("must lie in (0, 1), got {level}")));
        }
        let law = ClaimLaw::Pareto { shape, scale };
        let d = scale * (1.0 - level).powf(-1.0 / shape);
        Self::new(law, Some(d))
    }

    /// Pareto law of the reference experiments (shape 1.8182, scale 0.0545),
    /// truncated at its 99.99th percentile.
    pub fn reference_pareto() -> Self {
        Self::pareto_at_quantile(1.8182, 0.0545, 0.9999).expect("valid reference law")
    }

    fn raw_moment_or_inf(&self, k: u32) -> Result<f64> {
        match self.weighted_moment(0.0, k) {
            Ok(v) => Ok(v),
            Err(Error::DivergentMoment { .. }) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    }

    pub fn law(&self) -> &ClaimLaw {
        &self.law
    }

    /// Truncation bound `D`; `None` means `D = ∞`.
    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn second_moment(&self) -> f64 {
        self.second
    }

    pub fn exponential_rate(&self) -> Option<f64> {
        match self.law {
            ClaimLaw::Exponential { rate } if self.truncation.is_none() => Some(rate),
            _ => None,
        }
    }

    /// `E[Z^k e^{cZ}]` under the (truncated) law.
    pub fn weighted_moment(&self, c: f64, k: u32) -> Result<f64> {
        if !c.is_finite() {
            return Err(Error::DivergentMoment {
                c,
                order: k,
                reason: "non-finite exponent".into(),
            });
        }
        let settings = QuadSettings::default();
        match (&self.law, self.truncation) {
            (ClaimLaw::Exponential { rate }, None) => {
                if c >= *rate {
                    return Err(Error::DivergentMoment {
                        c,
                        order: k,
                        reason: format!("exponential moment pole at c = {rate}"),
                    });
                }
                Ok(rate * factorial(k) / (rate - c).powi(k as i32 + 1))
            }
            (ClaimLaw::Exponential { rate }, Some(d)) => {
                let rate = *rate;
                let kf = k as i32;
                let f = |z: f64| z.powi(kf) * ((c - rate) * z).exp() * rate;
                let r = integrate(f, 0.0, d, settings)?;
                Ok(r.value / self.mass)
            }
            (ClaimLaw::Pareto { shape, scale }, trunc) => {
                let (a, xm) = (*shape, *scale);
                let kf = f64::from(k);
                if c == 0.0 {
                    return match trunc {
                        None if kf >= a => Err(Error::DivergentMoment {
                            c,
                            order: k,
                            reason: format!("Pareto moments of order >= {a} are infinite"),
                        }),
                        None => Ok(a * xm.powf(kf) / (a - kf)),
                        Some(d) => {
                            let e = kf - a;
                            let integral = if e.abs() < 1e-12 {
                                (d / xm).ln()
                            } else {
                                ((d / xm).powf(e) - 1.0) / e
                            };
                            Ok(a * xm.powf(kf) * integral / self.mass)
                        }
                    };
                }
                let s_max = match trunc {
                    Some(d) => (d / xm).ln(),
                    None if c > 0.0 => {
                        return Err(Error::DivergentMoment {
                            c,
                            order: k,
                            reason: "Pareto law has no exponential moments without truncation".into(),
                        })
                    }
                    None => (750.0 / (-c * xm)).ln().max(1.0),
                };
                let f = |s: f64| {
                    let z = xm * s.exp();
                    z.powf(kf) * (c * z).exp() * a * (-a * s).exp()
                };
                let r = integrate(f, 0.0, s_max, settings)?;
                Ok(r.value / self.mass)
            }
            (ClaimLaw::Empirical { .. }, _) => Ok(self
                .atoms
                .iter()
                .map(|&(z, w)| w * z.powi(k as i32) * (c * z).exp())
                .sum()),
        }
    }

    /// Draws one claim from the truncated law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match &self.law {
            ClaimLaw::Exponential { rate } => -(-u * self.mass).ln_1p() / rate,
            ClaimLaw::Pareto { shape, scale } => scale * (1.0 - u * self.mass).powf(-1.0 / shape),
            ClaimLaw::Empirical { .. } => {
                let mut acc = 0.0;
                for &(z, w) in &self.atoms {
                    acc += w;
                    if u < acc {
                        return z;
                    }
                }
                self.atoms.last().map(|a| a.0).unwrap_or(0.0)
            }
        }
    }
}
