//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use crate::error::{Error, Result};

// Kronrod 15-point abscissae on [0, 1] (symmetric), with the Gauss 7-point
// rule embedded at the odd indices.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadSettings {
    pub rel_tol: f64,
    /// Absolute floor, for integrals that are exactly zero.
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    (value, error)
}

/// Integrates `f` over `[a, b]`, bisecting the worst subinterval until the
/// summed error estimate is below `max(rel_tol * |I|, abs_tol)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, settings: QuadSettings) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    let (value, error) = gk15(&f, a, b);
    let mut segments = vec![Segment { a, b, value, error }];
    loop {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let err: f64 = segments.iter().map(|s| s.error).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::QuadratureFailure {
                tolerance: settings.rel_tol,
                budget: settings.max_intervals,
                estimate: total,
                error: err,
            });
        }
        if err <= (settings.rel_tol * total.abs()).max(settings.abs_tol) {
            return Ok(QuadResult {
                value: total,
                error: err,
                intervals: segments.len(),
            });
        }
        if segments.len() >= settings.max_intervals {
            return Err(Error::QuadratureFailure {
                tolerance: settings.rel_tol,
                budget: settings.max_intervals,
                estimate: total,
                error: err,
            });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        let (lv, le) = gk15(&f, seg.a, mid);
        let (rv, re) = gk15(&f, mid, seg.b);
        segments.push(Segment {
            a: seg.a,
            b: mid,
            value: lv,
            error: le,
        });
        segments.push(Segment {
            a: mid,
            b: seg.b,
            value: rv,
            error: re,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, QuadSettings::default()).unwrap();
        assert!((r.value - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn peaked_integrand_converges() {
        let r = integrate(|x| (-200.0 * x).exp() * 200.0, 0.0, 1.0, QuadSettings::default()).unwrap();
        assert!((r.value - (1.0 - (-200.0f64).exp())).abs() < 1e-10);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let settings = QuadSettings {
            max_intervals: 2,
            ..QuadSettings::default()
        };
        let err = integrate(|x: f64| x.powf(-0.5), 1e-12, 1.0, settings).unwrap_err();
        assert!(matches!(err, Error::QuadratureFailure { .. }));
    }

    #[test]
    fn empty_interval() {
        let r = integrate(|x| x, 3.0, 3.0, QuadSettings::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }
}
