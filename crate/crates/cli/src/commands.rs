//! The experiment verbs. Each writes its artifacts into an [`OutDir`] and
//! returns the computed data.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use reinsure_core::investment::{estimate_g, optimal_w, GEstimate, GLattice};
use reinsure_core::models::{validate_assumptions, MarketKind, ValidationReport};
use reinsure_core::paths::simulate_factor;
use reinsure_core::premium::{iavp_dominance_check, DominanceReport, PrincipleKind};
use reinsure_core::reinsurance::StrategySurface;
use reinsure_core::rng::derived_seed;
use reinsure_core::valuation::{dominance_tournament, variance_decomposition, DominanceTournament, StrategyField, VarianceReport};
use reinsure_core::Scenario;

use crate::config::{apply_sweep, RetentionChoice, ScenarioConfig, SweepParameter};
use crate::error::{CliError, CliResult};
use crate::output::OutDir;

/// Seed indices of the sub-computations derived from the master seed.
const LATTICE_STREAM: u64 = 1_000_001;
const TOURNAMENT_STREAM: u64 = 1_000_002;
const VARIANCE_STREAM: u64 = 1_000_003;
const PREMIUM_STREAM: u64 = 1_000_004;

pub fn run_validate(cfg: &ScenarioConfig, out: &mut OutDir) -> CliResult<ValidationReport> {
    let report = validate_assumptions(&cfg.scenario()?);
    let text = report.to_string();
    out.write_with("validation.txt", |w| w.write_all(text.as_bytes()))?;
    out.write_json("validation.json", &report)?;
    Ok(report)
}

fn validated(cfg: &ScenarioConfig) -> CliResult<Scenario> {
    let s = cfg.scenario()?;
    let report = validate_assumptions(&s);
    if report.has_failures() {
        return Err(CliError::ValidationFailed {
            report: report.to_string(),
        });
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub u_star_evp: Option<f64>,
    pub u_star_iavp: Option<f64>,
    pub w_star: Option<f64>,
    pub merton: Option<f64>,
    pub correction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn column(&self, pick: impl Fn(&SweepRow) -> Option<f64>) -> Vec<f64> {
        self.rows.iter().filter_map(pick).collect()
    }
}

fn retention_at_origin(s: &Scenario, kind: PrincipleKind) -> CliResult<f64> {
    let p = s.with_principle(kind).problem()?;
    Ok(p.optimal_u(0.0, s.factor.y0)?.u_star)
}

fn investment_at_origin(s: &Scenario, g: &GEstimate) -> CliResult<(f64, f64, f64)> {
    let d = optimal_w(0.0, s.market.p0, &s.market, &s.prefs, g.dg_dp)?;
    Ok((d.w_star, d.merton, d.correction))
}

fn origin_g(s: &Scenario, n_reps: usize, seed: u64) -> CliResult<GEstimate> {
    Ok(estimate_g(0.0, s.market.p0, &s.market, s.horizon(), s.n_steps, n_reps, seed)?)
}

pub fn run_sweep(cfg: &ScenarioConfig, out: &mut OutDir) -> CliResult<SweepTable> {
    let sweep = cfg
        .sweep
        .ok_or_else(|| CliError::config("sweep", "the sweep verb needs a sweep section"))?;
    let base = validated(cfg)?;
    let parameter = sweep.parameter;
    let shared_g = if parameter == SweepParameter::Eta {
        Some(origin_g(&base, cfg.mc.n_reps, derived_seed(cfg.seed, 0))?)
    } else {
        None
    };
    let rows: Vec<SweepRow> = sweep
        .values()
        .into_par_iter()
        .enumerate()
        .map(|(i, value)| -> CliResult<SweepRow> {
            let s = apply_sweep(&base, parameter, value)?;
            let mut row = SweepRow {
                value,
                u_star_evp: None,
                u_star_iavp: None,
                w_star: None,
                merton: None,
                correction: None,
            };
            if parameter.affects_retention() {
                row.u_star_evp = Some(retention_at_origin(&s, PrincipleKind::ExpectedValue)?);
                row.u_star_iavp = Some(retention_at_origin(&s, PrincipleKind::IntensityAdjustedVariance)?);
            }
            if parameter.affects_investment() {
                let g = match shared_g {
                    Some(g) => g,
                    None => origin_g(&s, cfg.mc.n_reps, derived_seed(cfg.seed, i as u64))?,
                };
                let (w, m, c) = investment_at_origin(&s, &g)?;
                row.w_star = Some(w);
                row.merton = Some(m);
                row.correction = Some(c);
            }
            Ok(row)
        })
        .collect::<CliResult<_>>()?;
    let table = SweepTable { parameter, rows };
    let name = format!("sweep_{}.csv", parameter.name());
    out.write_with(&name, |w| write_sweep_csv(w, &table))?;
    Ok(table)
}

fn write_sweep_csv(w: &mut dyn Write, table: &SweepTable) -> std::io::Result<()> {
    let retention = table.parameter.affects_retention();
    let investment = table.parameter.affects_investment();
    let mut header = vec!["param_value"];
    if retention {
        header.extend(["u_star_evp", "u_star_iavp"]);
    }
    if investment {
        header.extend(["w_star", "merton", "correction"]);
    }
    writeln!(w, "{}", header.join(","))?;
    for r in &table.rows {
        let mut cells = vec![r.value.to_string()];
        let fields = [r.u_star_evp, r.u_star_iavp, r.w_star, r.merton, r.correction];
        cells.extend(fields.iter().flatten().map(f64::to_string));
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicTable {
    pub t: Vec<f64>,
    /// One intensity path per sample path.
    pub lambda: Vec<Vec<f64>>,
    pub u_star_iavp: Vec<Vec<f64>>,
    pub u_star_evp: Vec<f64>,
}

impl DynamicTable {
    pub fn mean_iavp(&self) -> Vec<f64> {
        let n = self.u_star_iavp.len() as f64;
        (0..self.t.len())
            .map(|i| self.u_star_iavp.iter().map(|p| p[i]).sum::<f64>() / n)
            .collect()
    }

    fn mean_lambda(&self) -> Vec<f64> {
        let n = self.lambda.len() as f64;
        (0..self.t.len())
            .map(|i| self.lambda.iter().map(|p| p[i]).sum::<f64>() / n)
            .collect()
    }
}

pub fn run_dynamic(cfg: &ScenarioConfig, out: &mut OutDir) -> CliResult<DynamicTable> {
    let s = validated(cfg)?;
    let grid = s.grid()?;
    let t = grid.times();
    let evp = s.with_principle(PrincipleKind::ExpectedValue).problem()?;
    let iavp = s.with_principle(PrincipleKind::IntensityAdjustedVariance).problem()?;
    let y0 = s.factor.y0;
    let u_star_evp: Vec<f64> = t
        .par_iter()
        .map(|&ti| Ok(evp.optimal_u(ti, y0)?.u_star))
        .collect::<CliResult<_>>()?;
    let paths: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.dynamic.n_paths as u64)
        .into_par_iter()
        .map(|k| -> CliResult<(Vec<f64>, Vec<f64>)> {
            let (y, lambda) = simulate_factor(&s.factor, &grid, cfg.seed, k)?;
            let u = t
                .iter()
                .enumerate()
                .map(|(i, &ti)| Ok(iavp.optimal_u_with_lambda(ti, y[i], lambda[i])?.u_star))
                .collect::<CliResult<Vec<f64>>>()?;
            Ok((lambda, u))
        })
        .collect::<CliResult<_>>()?;
    let (lambda, u_star_iavp) = paths.into_iter().unzip();
    let table = DynamicTable {
        t,
        lambda,
        u_star_iavp,
        u_star_evp,
    };
    out.write_with("dynamic_paths.csv", |w| {
        writeln!(w, "path,t,lambda,u_star_iavp,u_star_evp")?;
        for (k, (lam, u)) in table.lambda.iter().zip(&table.u_star_iavp).enumerate() {
            for i in 0..table.t.len() {
                writeln!(w, "{k},{},{},{},{}", table.t[i], lam[i], u[i], table.u_star_evp[i])?;
            }
        }
        Ok(())
    })?;
    let (mean_u, mean_l) = (table.mean_iavp(), table.mean_lambda());
    out.write_with("dynamic_mean.csv", |w| {
        writeln!(w, "t,lambda_mean,u_star_iavp_mean,u_star_evp")?;
        for i in 0..table.t.len() {
            writeln!(w, "{},{},{},{}", table.t[i], mean_l[i], mean_u[i], table.u_star_evp[i])?;
        }
        Ok(())
    })?;
    Ok(table)
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeDiagnostics {
    /// Largest `|∂g/∂p| / (1 + p^β)` over the lattice.
    pub growth_constant: f64,
    pub beta: f64,
    pub max_se_g: f64,
    pub max_se_dg_dp: f64,
}

fn build_lattice(cfg: &ScenarioConfig, s: &Scenario) -> CliResult<GLattice> {
    let spec = cfg.lattice_spec(derived_seed(cfg.seed, LATTICE_STREAM));
    Ok(GLattice::build(&s.market, s.horizon(), &spec)?)
}

pub fn run_g_lattice(cfg: &ScenarioConfig, out: &mut OutDir) -> CliResult<GLattice> {
    let s = validated(cfg)?;
    let lattice = build_lattice(cfg, &s)?;
    out.write_with("g_lattice.csv", |w| lattice.write_csv(w))?;
    let beta = match s.market.kind {
        MarketKind::Cev { beta, .. } => beta,
        _ => 0.0,
    };
    let diag = LatticeDiagnostics {
        growth_constant: lattice.growth_constant(beta),
        beta,
        max_se_g: lattice.nodes.iter().map(|n| n.se_g).fold(0.0, f64::max),
        max_se_dg_dp: lattice.nodes.iter().map(|n| n.se_dgdp).fold(0.0, f64::max),
    };
    out.write_json("g_lattice_diagnostics.json", &diag)?;
    Ok(lattice)
}

fn build_surface(cfg: &ScenarioConfig, s: &Scenario) -> CliResult<StrategySurface> {
    Ok(StrategySurface::build(&s.problem()?, cfg.surface.n_t, s.probe_y, cfg.surface.n_y)?)
}

pub fn run_dominance(cfg: &ScenarioConfig, out: &mut OutDir) -> CliResult<DominanceTournament> {
    let s = validated(cfg)?;
    let surface = Arc::new(build_surface(cfg, &s)?);
    let lattice = Arc::new(build_lattice(cfg, &s)?);
    out.write_with("strategy_surface.csv", |w| surface.write_csv(w))?;
    let optimal = StrategyField::optimal(surface, lattice, &s);
    let result = dominance_tournament(&optimal, &s, cfg.mc.n_reps, derived_seed(cfg.seed, TOURNAMENT_STREAM))?;
    out.write_with("dominance.csv", |w| {
        writeln!(w, "label,mean_utility,advantage,advantage_se,passes")?;
        for c in &result.challengers {
            writeln!(w, "{},{},{},{},{}", c.label, c.mean_utility, c.advantage.mean, c.advantage.se, c.passes)?;
        }
        Ok(())
    })?;
    out.write_json("optimal_summary.json", &result.optimal)?;
    Ok(result)
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceCheck {
    pub decomposition: VarianceReport,
    /// Present for the intensity-adjusted principle only.
    pub premium_dominance: Option<DominanceReport>,
}

pub fn run_variance_check(cfg: &ScenarioConfig, out: &mut OutDir) -> CliResult<VarianceCheck> {
    let s = validated(cfg)?;
    let u: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync> = match cfg.retention {
        RetentionChoice::Constant { u } => Arc::new(move |_, _| u),
        RetentionChoice::Optimal => {
            let surface = build_surface(cfg, &s)?;
            Arc::new(move |t, y| surface.eval(t, y))
        }
    };
    let decomposition = variance_decomposition(|t, y| u(t, y), &s, cfg.mc.n_reps, derived_seed(cfg.seed, VARIANCE_STREAM))?;
    let premium_dominance = match s.premium.kind {
        PrincipleKind::IntensityAdjustedVariance => Some(iavp_dominance_check(
            |t, y| u(t, y),
            &s,
            cfg.mc.n_reps,
            derived_seed(cfg.seed, PREMIUM_STREAM),
        )?),
        _ => None,
    };
    let check = VarianceCheck {
        decomposition,
        premium_dominance,
    };
    out.write_json("variance_check.json", &check)?;
    Ok(check)
}
