//! Stochastic factor `dY = b(t,Y)dt + γ(t,Y)dW` and the claim intensity `λ(t,y)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Built-in coefficient `a + s·y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Coefficient {
    Constant { value: f64 },
    Affine { intercept: f64, slope: f64 },
}

impl Coefficient {
    pub fn eval(&self, _t: f64, y: f64) -> f64 {
        match *self {
            Coefficient::Constant { value } => value,
            Coefficient::Affine { intercept, slope } => intercept + slope * y,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(*self, Coefficient::Constant { value } if value == 0.0)
            || matches!(*self, Coefficient::Affine { intercept, slope } if intercept == 0.0 && slope == 0.0)
    }

    fn check(&self, name: &'static str) -> Result<()> {
        let ok = match *self {
            Coefficient::Constant { value } => value.is_finite(),
            Coefficient::Affine { intercept, slope } => intercept.is_finite() && slope.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(name, "coefficients must be finite"))
        }
    }
}

/// Built-in positive intensity maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntensityMap {
    /// `λ(t,y) = value`.
    Constant { value: f64 },
    /// `λ(t,y) = λ₀ e^{κ y}`.
    Exponential { lambda0: f64, scale: f64 },
    /// `λ(t,y) = lo + (hi − lo)/(1 + e^{−κ y})`, bounded.
    Logistic { lo: f64, hi: f64, scale: f64 },
}

impl IntensityMap {
    pub fn eval(&self, _t: f64, y: f64) -> f64 {
        match *self {
            IntensityMap::Constant { value } => value,
            IntensityMap::Exponential { lambda0, scale } => lambda0 * (scale * y).exp(),
            IntensityMap::Logistic { lo, hi, scale } => lo + (hi - lo) / (1.0 + (-scale * y).exp()),
        }
    }

    /// Whether `λ` is bounded over `y ∈ ℝ`.
    pub fn is_bounded(&self) -> bool {
        match *self {
            IntensityMap::Constant { .. } | IntensityMap::Logistic { .. } => true,
            IntensityMap::Exponential { scale, .. } => scale == 0.0,
        }
    }

    /// A state `y` with `λ(t, y) = lambda`, when the map is invertible.
    pub fn state_for(&self, lambda: f64) -> Option<f64> {
        match *self {
            IntensityMap::Constant { value } => (value == lambda).then_some(0.0),
            IntensityMap::Exponential { lambda0, scale } if scale != 0.0 => Some((lambda / lambda0).ln() / scale),
            IntensityMap::Exponential { lambda0, .. } => (lambda0 == lambda).then_some(0.0),
            IntensityMap::Logistic { lo, hi, scale } => {
                let s = (lambda - lo) / (hi - lo);
                (s > 0.0 && s < 1.0 && scale != 0.0).then(|| -((1.0 / s) - 1.0).ln() / scale)
            }
        }
    }

    fn check(&self) -> Result<()> {
        let ok = match *self {
            IntensityMap::Constant { value } => value > 0.0 && value.is_finite(),
            IntensityMap::Exponential { lambda0, scale } => lambda0 > 0.0 && lambda0.is_finite() && scale.is_finite(),
            IntensityMap::Logistic { lo, hi, scale } => lo > 0.0 && hi >= lo && hi.is_finite() && scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("intensity", format!("{self:?} is not strictly positive")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorModel {
    pub drift: Coefficient,
    pub diffusion: Coefficient,
    pub y0: f64,
    pub intensity: IntensityMap,
}

impl FactorModel {
    pub fn new(drift: Coefficient, diffusion: Coefficient, y0: f64, intensity: IntensityMap) -> Result<Self> {
        let model = Self {
            drift,
            diffusion,
            y0,
            intensity,
        };
        model.check()?;
        Ok(model)
    }

    /// Factor used in the reference experiments: `b = 0.3`, `γ = 0.3`,
    /// `Y₀ = 1`, `λ = 0.1 e^{y/2}`.
    pub fn reference() -> Self {
        Self {
            drift: Coefficient::Constant { value: 0.3 },
            diffusion: Coefficient::Constant { value: 0.3 },
            y0: 1.0,
            intensity: IntensityMap::Exponential {
                lambda0: 0.1,
                scale: 0.5,
            },
        }
    }

    /// Deterministic factor with constant intensity.
    pub fn constant_intensity(lambda: f64) -> Self {
        Self {
            drift: Coefficient::Constant { value: 0.0 },
            diffusion: Coefficient::Constant { value: 0.0 },
            y0: 0.0,
            intensity: IntensityMap::Constant { value: lambda },
        }
    }

    pub fn check(&self) -> Result<()> {
        self.drift.check("drift")?;
        self.diffusion.check("diffusion")?;
        if !self.y0.is_finite() {
            return Err(Error::invalid("y0", "must be finite"));
        }
        self.intensity.check()
    }

    pub fn b(&self, t: f64, y: f64) -> f64 {
        self.drift.eval(t, y)
    }

    pub fn gamma(&self, t: f64, y: f64) -> f64 {
        self.diffusion.eval(t, y)
    }

    pub fn lambda(&self, t: f64, y: f64) -> f64 {
        self.intensity.eval(t, y)
    }

    /// The factor path is deterministic.
    pub fn is_deterministic(&self) -> bool {
        self.diffusion.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_intensity() {
        let f = FactorModel::reference();
        assert!((f.lambda(0.0, 1.0) - 0.1 * 0.5f64.exp()).abs() < 1e-15);
        assert!(!f.intensity.is_bounded());
    }

    #[test]
    fn inverse_intensity_round_trips() {
        let maps = [
            IntensityMap::Exponential { lambda0: 0.1, scale: 0.5 },
            IntensityMap::Logistic { lo: 0.05, hi: 0.5, scale: 2.0 },
        ];
        for map in maps {
            for lambda in [0.06, 0.1, 0.3, 0.45] {
                let y = map.state_for(lambda).unwrap();
                assert!((map.eval(0.0, y) - lambda).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn nonpositive_intensity_rejected() {
        let r = FactorModel::new(
            Coefficient::Constant { value: 0.0 },
            Coefficient::Constant { value: 0.0 },
            0.0,
            IntensityMap::Constant { value: 0.0 },
        );
        assert!(r.is_err());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let ok: IntensityMap = serde_json::from_str(r#"{"kind":"exponential","lambda0":0.1,"scale":0.5}"#).unwrap();
        assert_eq!(ok, IntensityMap::Exponential { lambda0: 0.1, scale: 0.5 });
        let bad = serde_json::from_str::<IntensityMap>(r#"{"kind":"constant","value":0.1,"extra":1}"#);
        assert!(bad.is_err());
    }
}
