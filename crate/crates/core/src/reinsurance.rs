//! The retention problem `sup_{u∈[0,1]} Ψ^u(t,y)`.
//!
//! With `a = ηe^{R(T−t)}` and `M_k(c) = E[Z^k e^{cZ}]`,
//!
//! ```text
//! Ψ^u       = −a q(t,y,u) + λ (1 − M_0(a(1−u)))
//! ∂Ψ/∂u     = −a [∂q/∂u − λ M_1(a(1−u))]
//! ∂²Ψ/∂u²   = −a [∂²q/∂u² + a λ M_2(a(1−u))]
//! ```
//!
//! Under strict concavity the marginal `m(u) = ∂q/∂u − λ M_1(a(1−u))` is
//! strictly increasing, which yields the three regions and a bisection root.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{ClaimModel, RiskPreferences};
use crate::premium::{PremiumPrinciple, PrincipleKind};

/// Bracket width at which bisection stops.
pub const BISECTION_TOL: f64 = 1e-10;

/// Interior retention levels used by the direct concavity check.
pub const CONCAVITY_PROBES: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Region {
    /// No reinsurance is optimal.
    A0,
    Interior,
    /// Full reinsurance is optimal.
    A1,
}

impl Region {
    pub fn label(&self) -> &'static str {
        match self {
            Region::A0 => "A0",
            Region::Interior => "interior",
            Region::A1 => "A1",
        }
    }
}

/// Which sufficient condition established strict concavity of `Ψ^u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConcavityCertificate {
    /// `∂q(t,y,0)/∂u = 0`.
    ZeroMarginalAtZero,
    /// `∂²q/∂u² ≥ 0` on the probes.
    ConvexPremium,
    /// `−∂²q/∂u² < ηλE[Z²]` on the probes.
    BoundedCurvature,
    /// `∂²Ψ/∂u² < 0` checked directly on the probes.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiValue {
    pub value: f64,
    pub d_du: f64,
    pub d2_du2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReinsuranceSolution {
    pub u_star: f64,
    pub region: Region,
    /// Marginal `∂q/∂u − λM_1` at `u_star`, i.e. `−∂Ψ/∂u / (ηe^{R(T−t)})`.
    pub residual: f64,
    pub certificate: ConcavityCertificate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReinsuranceProblem {
    pub claims: ClaimModel,
    pub premium: PremiumPrinciple,
    pub prefs: RiskPreferences,
    pub rate: f64,
}

impl ReinsuranceProblem {
    pub fn new(claims: ClaimModel, premium: PremiumPrinciple, prefs: RiskPreferences, rate: f64) -> Result<Self> {
        prefs.check()?;
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::invalid("rate", format!("must be non-negative, got {rate}")));
        }
        Ok(Self {
            claims,
            premium,
            prefs,
            rate,
        })
    }

    pub fn lambda(&self, t: f64, y: f64) -> f64 {
        self.premium.intensity().eval(t, y)
    }

    /// `ηe^{R(T−t)}`.
    pub fn discounted_eta(&self, t: f64) -> f64 {
        self.prefs.discounted_eta(self.rate, t)
    }

    pub fn psi_u(&self, t: f64, y: f64, u: f64) -> Result<PsiValue> {
        self.psi_u_with_lambda(t, y, self.lambda(t, y), u)
    }

    pub fn psi_u_with_lambda(&self, t: f64, y: f64, lambda: f64, u: f64) -> Result<PsiValue> {
        check_u(u)?;
        let a = self.discounted_eta(t);
        let c = a * (1.0 - u);
        let pv = self.premium.eval_with_lambda(t, y, lambda, u);
        let m0 = self.claims.weighted_moment(c, 0)?;
        let m1 = self.claims.weighted_moment(c, 1)?;
        let m2 = self.claims.weighted_moment(c, 2)?;
        Ok(PsiValue {
            value: -a * pv.q + lambda * (1.0 - m0),
            d_du: -a * (pv.dq_du - lambda * m1),
            d2_du2: -a * (pv.d2q_du2 + a * lambda * m2),
        })
    }

    /// `∂q/∂u − λ M_1(a(1−u))`, increasing in `u` under concavity.
    pub fn marginal(&self, t: f64, y: f64, lambda: f64, u: f64) -> Result<f64> {
        let a = self.discounted_eta(t);
        let dq = self.premium.eval_with_lambda(t, y, lambda, u).dq_du;
        Ok(dq - lambda * self.claims.weighted_moment(a * (1.0 - u), 1)?)
    }

    pub fn concavity(&self, t: f64, y: f64, lambda: f64) -> Result<ConcavityCertificate> {
        if self.premium.eval_with_lambda(t, y, lambda, 0.0).dq_du == 0.0 {
            return Ok(ConcavityCertificate::ZeroMarginalAtZero);
        }
        let probes: Vec<f64> = (1..=CONCAVITY_PROBES)
            .map(|i| i as f64 / (CONCAVITY_PROBES + 1) as f64)
            .collect();
        let curvature: Vec<f64> = probes
            .iter()
            .map(|&u| self.premium.eval_with_lambda(t, y, lambda, u).d2q_du2)
            .collect();
        if curvature.iter().all(|&d2| d2 >= 0.0) {
            return Ok(ConcavityCertificate::ConvexPremium);
        }
        let bound = self.prefs.eta * lambda * self.claims.second_moment();
        if curvature.iter().all(|&d2| -d2 < bound) {
            return Ok(ConcavityCertificate::BoundedCurvature);
        }
        for &u in &probes {
            if self.psi_u_with_lambda(t, y, lambda, u)?.d2_du2 >= 0.0 {
                return Err(Error::ConcavityViolated { t, y, u });
            }
        }
        Ok(ConcavityCertificate::Direct)
    }

    pub fn classify_region(&self, t: f64, y: f64) -> Result<(Region, ConcavityCertificate)> {
        self.classify_region_with_lambda(t, y, self.lambda(t, y))
    }

    /// Ties go to `A₀` and `A₁`.
    pub fn classify_region_with_lambda(&self, t: f64, y: f64, lambda: f64) -> Result<(Region, ConcavityCertificate)> {
        let certificate = self.concavity(t, y, lambda)?;
        let a = self.discounted_eta(t);
        let dq0 = self.premium.eval_with_lambda(t, y, lambda, 0.0).dq_du;
        if lambda * self.claims.weighted_moment(a, 1)? <= dq0 {
            return Ok((Region::A0, certificate));
        }
        let dq1 = self.premium.eval_with_lambda(t, y, lambda, 1.0).dq_du;
        if dq1 <= self.claims.mean() * lambda {
            return Ok((Region::A1, certificate));
        }
        Ok((Region::Interior, certificate))
    }

    pub fn optimal_u(&self, t: f64, y: f64) -> Result<ReinsuranceSolution> {
        self.optimal_u_with_lambda(t, y, self.lambda(t, y))
    }

    pub fn optimal_u_with_lambda(&self, t: f64, y: f64, lambda: f64) -> Result<ReinsuranceSolution> {
        let (region, certificate) = self.classify_region_with_lambda(t, y, lambda)?;
        let solution = |u_star: f64| -> Result<ReinsuranceSolution> {
            Ok(ReinsuranceSolution {
                u_star,
                region,
                residual: self.marginal(t, y, lambda, u_star)?,
                certificate,
            })
        };
        match region {
            Region::A0 => solution(0.0),
            Region::A1 => solution(1.0),
            Region::Interior => {
                let m = |u: f64| self.marginal(t, y, lambda, u);
                let (at_zero, at_one) = (m(0.0)?, m(1.0)?);
                if !(at_zero < 0.0 && at_one > 0.0) {
                    return Err(Error::RootBracketFailure { t, y, at_zero, at_one });
                }
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                while hi - lo > BISECTION_TOL {
                    let mid = 0.5 * (lo + hi);
                    if m(mid)? < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                solution(0.5 * (lo + hi))
            }
        }
    }
}

fn check_u(u: f64) -> Result<()> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(Error::invalid("u", format!("must lie in [0, 1], got {u}")))
    }
}

/// Inputs of the explicit exponential-claim strategies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialParams {
    pub zeta: f64,
    pub eta: f64,
    pub rate: f64,
    pub horizon: f64,
    pub theta_r: f64,
    /// Horizon inside the intensity-adjusted loading `θ_r[1 + Tλ]`.
    pub premium_horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub u_star: f64,
    /// Switching time after which no reinsurance is bought (expected-value principle only).
    pub t0: Option<f64>,
    /// `ζ/η − e^{RT}`.
    pub guard_margin: f64,
}

/// Explicit optimal retention for exponential claims `Exp(ζ)`.
///
/// Expected-value principle:
/// `u* = 1 − (ζ/η)(1 − 1/√(1+θ_r)) e^{−R(T−t)}`, zero from
/// `t₀ = T − ln[(ζ/η)(1 − 1/√(1+θ_r))]/R` on when `t₀ ≤ T`.
///
/// Variance principle: `u* = 1 − (ζ/η)(1 − √(ζ/(ζ+4θ_r))) e^{−R(T−t)}`;
/// the intensity-adjusted principle replaces `θ_r` with `θ_r[1 + Tλ]`.
/// Both are clipped to `[0, 1]`.
pub fn closed_form_exponential(kind: &PrincipleKind, t: f64, lambda: f64, p: &ExponentialParams) -> Result<ClosedForm> {
    let ratio = p.zeta / p.eta;
    let bound = (p.rate * p.horizon).exp();
    if !(ratio > bound) {
        return Err(Error::GuardViolated { ratio, bound });
    }
    let discount = (-p.rate * (p.horizon - t)).exp();
    let guard_margin = ratio - bound;
    match kind {
        PrincipleKind::ExpectedValue => {
            let k = ratio * (1.0 - 1.0 / (1.0 + p.theta_r).sqrt());
            let t0 = p.horizon - k.ln() / p.rate;
            let u = if t0 <= p.horizon && t >= t0 { 0.0 } else { (1.0 - k * discount).max(0.0) };
            Ok(ClosedForm {
                u_star: u,
                t0: Some(t0),
                guard_margin,
            })
        }
        PrincipleKind::Variance | PrincipleKind::IntensityAdjustedVariance => {
            let theta = if matches!(kind, PrincipleKind::Variance) {
                p.theta_r
            } else {
                p.theta_r * (1.0 + p.premium_horizon * lambda)
            };
            let k = ratio * (1.0 - (p.zeta / (p.zeta + 4.0 * theta)).sqrt());
            Ok(ClosedForm {
                u_star: (1.0 - k * discount).clamp(0.0, 1.0),
                t0: None,
                guard_margin,
            })
        }
        PrincipleKind::Custom { .. } => Err(Error::invalid("kind", "no closed form for tabulated premiums")),
    }
}

/// Optimal retention tabulated on a `(t, y)` grid, bilinearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySurface {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    /// Row-major by `t`.
    pub lambda: Vec<f64>,
    pub u_star: Vec<f64>,
    pub region: Vec<Region>,
    /// `Ψ^{u*}` at the nodes.
    pub psi_star: Vec<f64>,
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

impl StrategySurface {
    /// Solves on the uniform grid `t ∈ [0,T]` (`n_t` nodes) × `y ∈ [y_lo, y_hi]` (`n_y` nodes).
    pub fn build(problem: &ReinsuranceProblem, n_t: usize, y_range: (f64, f64), n_y: usize) -> Result<Self> {
        if n_t < 2 || n_y < 2 || !(y_range.0 < y_range.1) {
            return Err(Error::invalid("surface", "need >= 2 nodes per axis and y_lo < y_hi"));
        }
        let horizon = problem.prefs.horizon;
        let t: Vec<f64> = (0..n_t).map(|i| horizon * i as f64 / (n_t - 1) as f64).collect();
        let y: Vec<f64> = (0..n_y)
            .map(|j| y_range.0 + (y_range.1 - y_range.0) * j as f64 / (n_y - 1) as f64)
            .collect();
        let nodes: Vec<(f64, f64)> = t.iter().flat_map(|&tt| y.iter().map(move |&yy| (tt, yy))).collect();
        let solved: Vec<(f64, ReinsuranceSolution, f64)> = nodes
            .par_iter()
            .map(|&(tt, yy)| {
                let sol = problem.optimal_u(tt, yy)?;
                let psi = problem.psi_u(tt, yy, sol.u_star)?.value;
                Ok((problem.lambda(tt, yy), sol, psi))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            t,
            y,
            lambda: solved.iter().map(|s| s.0).collect(),
            u_star: solved.iter().map(|s| s.1.u_star).collect(),
            region: solved.iter().map(|s| s.1.region).collect(),
            psi_star: solved.iter().map(|s| s.2).collect(),
        })
    }

    fn bilinear(&self, field: &[f64], t: f64, y: f64) -> f64 {
        let (i, wt) = locate(&self.t, t);
        let (j, wy) = locate(&self.y, y);
        let ny = self.y.len();
        let at = |a: usize, b: usize| field[a.min(self.t.len() - 1) * ny + b.min(ny - 1)];
        let lo = at(i, j) * (1.0 - wy) + at(i, j + 1) * wy;
        let hi = at(i + 1, j) * (1.0 - wy) + at(i + 1, j + 1) * wy;
        lo * (1.0 - wt) + hi * wt
    }

    /// Interpolated `u*(t, y)`, flat outside the grid.
    pub fn eval(&self, t: f64, y: f64) -> f64 {
        self.bilinear(&self.u_star, t, y).clamp(0.0, 1.0)
    }

    /// Interpolated `Ψ^{u*}(t, y)`.
    pub fn psi_star(&self, t: f64, y: f64) -> f64 {
        self.bilinear(&self.psi_star, t, y)
    }

    /// Writes `t,y,lambda,region,u_star` rows.
    pub fn write_csv<W: Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "t,y,lambda,region,u_star")?;
        let ny = self.y.len();
        for (i, t) in self.t.iter().enumerate() {
            for (j, y) in self.y.iter().enumerate() {
                let k = i * ny + j;
                writeln!(out, "{t},{y},{},{},{}", self.lambda[k], self.region[k].label(), self.u_star[k])?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::IntensityMap;

    fn exp_problem(kind: PrincipleKind, theta: f64) -> ReinsuranceProblem {
        let claims = ClaimModel::exponential(2.0).unwrap();
        let intensity = IntensityMap::Exponential { lambda0: 0.1, scale: 0.5 };
        let premium = PremiumPrinciple::new(kind, theta, 5.0, &claims, intensity).unwrap();
        ReinsuranceProblem::new(claims, premium, RiskPreferences { eta: 0.5, horizon: 5.0 }, 0.05).unwrap()
    }

    fn params(theta: f64) -> ExponentialParams {
        ExponentialParams {
            zeta: 2.0,
            eta: 0.5,
            rate: 0.05,
            horizon: 5.0,
            theta_r: theta,
            premium_horizon: 5.0,
        }
    }

    #[test]
    fn full_reinsurance_psi_is_premium_only() {
        let p = exp_problem(PrincipleKind::Variance, 0.1);
        let psi = p.psi_u(1.0, 1.0, 1.0).unwrap();
        let q = p.premium.eval(1.0, 1.0, 1.0).q;
        assert!((psi.value + p.discounted_eta(1.0) * q).abs() < 1e-15);
    }

    #[test]
    fn evp_closed_form_and_bisection_agree() {
        let p = exp_problem(PrincipleKind::ExpectedValue, 0.1);
        let sol = p.optimal_u(0.0, 1.0).unwrap();
        let cf = closed_form_exponential(&PrincipleKind::ExpectedValue, 0.0, p.lambda(0.0, 1.0), &params(0.1)).unwrap();
        assert!((sol.u_star - cf.u_star).abs() < 1e-8);
        assert!((cf.u_star - 0.8550).abs() < 5e-5);
        assert!(cf.t0.unwrap() > 5.0);
        assert_eq!(sol.region, Region::Interior);
        assert_eq!(sol.certificate, ConcavityCertificate::ConvexPremium);
    }

    #[test]
    fn evp_large_loading_is_a0() {
        let claims = ClaimModel::exponential(2.0).unwrap();
        let a = 0.5 * (0.05f64 * 5.0).exp();
        let ratio = claims.weighted_moment(a, 1).unwrap() / claims.mean();
        let p = exp_problem(PrincipleKind::ExpectedValue, ratio - 1.0 + 0.01);
        let sol = p.optimal_u(0.0, 1.0).unwrap();
        assert_eq!(sol.region, Region::A0);
        assert_eq!(sol.u_star, 0.0);
    }

    #[test]
    fn variance_principles_are_interior() {
        for kind in [PrincipleKind::Variance, PrincipleKind::IntensityAdjustedVariance] {
            let p = exp_problem(kind, 0.1);
            for t in [0.0, 2.5, 5.0] {
                for y in [-2.0, 1.0, 4.0] {
                    let sol = p.optimal_u(t, y).unwrap();
                    assert_eq!(sol.region, Region::Interior);
                    assert!(sol.u_star > 0.0 && sol.u_star < 1.0);
                    assert!(sol.residual.abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn vanishing_intensity_means_no_reinsurance() {
        let p = exp_problem(PrincipleKind::ExpectedValue, 0.1);
        let sol = p.optimal_u_with_lambda(0.0, 0.0, 0.0).unwrap();
        assert_eq!(sol.u_star, 0.0);
    }

    #[test]
    fn vp_zero_loading_limit_is_full_cover() {
        let cf = closed_form_exponential(&PrincipleKind::Variance, 1.0, 0.1, &params(0.0)).unwrap();
        assert_eq!(cf.u_star, 1.0);
    }

    #[test]
    fn iavp_zero_intensity_is_vp() {
        let vp = closed_form_exponential(&PrincipleKind::Variance, 2.0, 0.0, &params(0.1)).unwrap();
        let iavp = closed_form_exponential(&PrincipleKind::IntensityAdjustedVariance, 2.0, 0.0, &params(0.1)).unwrap();
        assert_eq!(vp.u_star, iavp.u_star);
    }

    #[test]
    fn guard_is_enforced() {
        let mut pr = params(0.1);
        pr.eta = 2.0;
        assert!(matches!(
            closed_form_exponential(&PrincipleKind::ExpectedValue, 0.0, 0.1, &pr),
            Err(Error::GuardViolated { .. })
        ));
    }

    #[test]
    fn surface_interpolates_nodes_and_exports() {
        let p = exp_problem(PrincipleKind::IntensityAdjustedVariance, 0.1);
        let s = StrategySurface::build(&p, 6, (-1.0, 3.0), 5).unwrap();
        let direct = p.optimal_u(2.0, 2.0).unwrap().u_star;
        assert!((s.eval(2.0, 2.0) - direct).abs() < 1e-12);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,y,lambda,region,u_star\n"));
        assert_eq!(text.lines().count(), 31);
    }
}
