//! Hypothesis checks on a scenario, evaluated on a 21×21 probe grid over
//! `[0,T] × [y_lo, y_hi]`. Validation never fails; callers decide which
//! failed checks are fatal.

use std::fmt;

use serde::Serialize;

use crate::error::Error;
use crate::models::ClaimLaw;
use crate::premium::PrincipleKind;
use crate::scenario::Scenario;

pub const PROBE_NODES: usize = 21;

const PROBE_U: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Warn,
    Fail,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Warn => "WARN",
            CheckStatus::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn status_of(&self, name: &str) -> Option<CheckStatus> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.status)
    }

    pub fn has_failures(&self) -> bool {
        self.checks.iter().any(|c| c.status == CheckStatus::Fail)
    }

    fn push(&mut self, name: &'static str, ok: bool, fail: CheckStatus, detail: String) {
        self.checks.push(Check {
            name,
            status: if ok { CheckStatus::Pass } else { fail },
            detail,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "[{}] {}: {}", c.status, c.name, c.detail)?;
        }
        Ok(())
    }
}

fn probe_points(s: &Scenario) -> Vec<(f64, f64)> {
    let horizon = s.horizon();
    let (lo, hi) = s.probe_y;
    let step = (PROBE_NODES - 1) as f64;
    (0..PROBE_NODES)
        .flat_map(|i| (0..PROBE_NODES).map(move |j| (horizon * i as f64 / step, lo + (hi - lo) * j as f64 / step)))
        .collect()
}

pub fn validate_assumptions(s: &Scenario) -> ValidationReport {
    let mut report = ValidationReport { checks: Vec::new() };
    if let Err(e) = s.check() {
        report.push("scenario", false, CheckStatus::Fail, e.to_string());
        return report;
    }
    let horizon = s.horizon();
    let rate = s.market.rate;
    let c_max = s.prefs.eta * (rate * horizon).exp();

    let moments: Vec<Result<f64, Error>> = (0..=2).map(|k| s.claims.weighted_moment(c_max, k)).collect();
    let finite = moments.iter().all(|m| matches!(m, Ok(v) if v.is_finite()));
    let detail = match moments.iter().find_map(|m| m.as_ref().err()) {
        Some(e) => e.to_string(),
        None => format!("E[Z^k e^(cZ)] finite for k = 0, 1, 2 at c = ηe^(RT) = {c_max}"),
    };
    report.push("exponential_moments", finite, CheckStatus::Fail, detail);

    if let ClaimLaw::Exponential { rate: zeta } = s.claims.law() {
        let ratio = zeta / s.prefs.eta;
        let bound = (rate * horizon).exp();
        report.push(
            "closed_form_guard",
            ratio > bound,
            CheckStatus::Fail,
            format!("zeta/eta = {ratio} vs e^(RT) = {bound}"),
        );
    }

    let premium = match s.premium() {
        Ok(p) => p,
        Err(e) => {
            report.push("premium", false, CheckStatus::Fail, e.to_string());
            return report;
        }
    };
    let points = probe_points(s);
    let mut k_bound = 0.0f64;
    let (mut zero_ok, mut mono_ok, mut expensive_ok, mut profit_ok) = (true, true, true, true);
    let mut first_bad: [Option<(f64, f64)>; 4] = [None; 4];
    for &(t, y) in &points {
        let c = s.insurance_premium(t, y);
        let lambda = s.factor.lambda(t, y);
        for &u in &PROBE_U {
            let v = premium.eval(t, y, u);
            k_bound = k_bound.max((v.q - c).abs());
            if v.dq_du < 0.0 {
                mono_ok = false;
                first_bad[1].get_or_insert((t, y));
            }
        }
        if premium.eval(t, y, 0.0).q != 0.0 {
            zero_ok = false;
            first_bad[0].get_or_insert((t, y));
        }
        if !(premium.eval(t, y, 1.0).q > c) {
            expensive_ok = false;
            first_bad[2].get_or_insert((t, y));
        }
        if !(c > s.claims.mean() * lambda) {
            profit_ok = false;
            first_bad[3].get_or_insert((t, y));
        }
    }
    let at = |p: Option<(f64, f64)>| p.map_or(String::new(), |(t, y)| format!(" (first failure at t = {t}, y = {y})"));
    report.push("null_protection_free", zero_ok, CheckStatus::Fail, format!("q(t,y,0) = 0{}", at(first_bad[0])));
    report.push("premium_increasing", mono_ok, CheckStatus::Fail, format!("dq/du >= 0{}", at(first_bad[1])));
    report.push(
        "reinsurance_not_cheap",
        expensive_ok,
        CheckStatus::Fail,
        format!("q(t,y,1) > c(t,y){}", at(first_bad[2])),
    );
    report.push("net_profit", profit_ok, CheckStatus::Fail, format!("c(t,y) > E[Z]λ(t,y){}", at(first_bad[3])));
    report.push(
        "premium_gap_bound",
        k_bound.is_finite(),
        CheckStatus::Warn,
        format!("empirical K = max |q - c| = {k_bound} on the probe grid"),
    );

    if !matches!(premium.kind, PrincipleKind::Custom { .. }) || finite {
        match s.problem() {
            Ok(problem) => {
                let violation = points.iter().find_map(|&(t, y)| problem.classify_region(t, y).err());
                report.push(
                    "concavity",
                    violation.is_none(),
                    CheckStatus::Fail,
                    violation.map_or("Ψ^u strictly concave at every probe".into(), |e| e.to_string()),
                );
            }
            Err(e) => report.push("concavity", false, CheckStatus::Fail, e.to_string()),
        }
    }

    regularity_probes(s, &points, &mut report);
    report
}

/// Boundedness and regularity probes for the existence theory; these only warn.
fn regularity_probes(s: &Scenario, points: &[(f64, f64)], report: &mut ValidationReport) {
    let bounded = s.factor.intensity.is_bounded();
    let (lo, hi) = s.probe_y;
    let wide = [lo - 10.0, hi + 10.0].map(|y| s.factor.lambda(0.0, y));
    report.push(
        "intensity_bounded",
        bounded,
        CheckStatus::Warn,
        format!("λ at y = {} and y = {}: {} and {}", lo - 10.0, hi + 10.0, wide[0], wide[1]),
    );

    let min_gamma2 = points
        .iter()
        .map(|&(t, y)| s.factor.gamma(t, y).powi(2))
        .fold(f64::INFINITY, f64::min);
    report.push(
        "factor_nondegenerate",
        min_gamma2 >= 1e-8,
        CheckStatus::Warn,
        format!("min γ² on probe grid = {min_gamma2}"),
    );

    let mut lipschitz = 0.0f64;
    for w in points.windows(2) {
        let ((t0, y0), (t1, y1)) = (w[0], w[1]);
        if t0 == t1 && y1 != y0 {
            let db = (s.factor.b(t0, y1) - s.factor.b(t0, y0)).abs();
            let dg = (s.factor.gamma(t0, y1) - s.factor.gamma(t0, y0)).abs();
            lipschitz = lipschitz.max(db.max(dg) / (y1 - y0).abs());
        }
    }
    report.push(
        "factor_lipschitz",
        lipschitz.is_finite(),
        CheckStatus::Warn,
        format!("empirical Lipschitz constant of (b, γ) in y = {lipschitz}"),
    );

    let p0 = s.market.p0;
    let sigma_ref = s.market.sigma(0.0, p0);
    let sigma_min = [1e-6, 1e-4, 1e-2, 1.0, 1e2, 1e4]
        .iter()
        .map(|&m| s.market.sigma(0.0, m * p0))
        .fold(f64::INFINITY, f64::min);
    report.push(
        "volatility_bounded_below",
        sigma_min >= 1e-2 * sigma_ref,
        CheckStatus::Warn,
        format!("min σ over p in [1e-6, 1e4]·P0 = {sigma_min} (σ(P0) = {sigma_ref})"),
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ClaimModel;

    #[test]
    fn reference_exponential_scenario_passes() {
        let mut s = Scenario::reference(PrincipleKind::ExpectedValue);
        s.claims = ClaimModel::exponential(2.0).unwrap();
        let r = validate_assumptions(&s);
        assert!(!r.has_failures(), "{r}");
        assert_eq!(r.status_of("closed_form_guard"), Some(CheckStatus::Pass));
        assert_eq!(r.status_of("intensity_bounded"), Some(CheckStatus::Warn));
        assert_eq!(r.status_of("volatility_bounded_below"), Some(CheckStatus::Warn));
    }

    #[test]
    fn moment_pole_is_flagged() {
        let mut s = Scenario::reference(PrincipleKind::ExpectedValue);
        s.claims = ClaimModel::exponential(2.0).unwrap();
        s.prefs.eta = 2.0;
        let r = validate_assumptions(&s);
        assert_eq!(r.status_of("exponential_moments"), Some(CheckStatus::Fail));
        assert_eq!(r.status_of("closed_form_guard"), Some(CheckStatus::Fail));
    }

    #[test]
    fn untruncated_pareto_fails_moment_check() {
        let mut s = Scenario::reference(PrincipleKind::ExpectedValue);
        s.claims = ClaimModel::new(ClaimLaw::Pareto { shape: 1.8182, scale: 0.0545 }, None).unwrap();
        let r = validate_assumptions(&s);
        assert_eq!(r.status_of("exponential_moments"), Some(CheckStatus::Fail));
    }

    #[test]
    fn insurer_loading_above_reinsurer_breaks_contract() {
        let mut s = Scenario::reference(PrincipleKind::ExpectedValue);
        s.theta_i = 0.2;
        let r = validate_assumptions(&s);
        assert_eq!(r.status_of("reinsurance_not_cheap"), Some(CheckStatus::Fail));
    }
}
