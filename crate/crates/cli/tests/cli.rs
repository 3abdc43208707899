use std::path::{Path, PathBuf};
use std::process::Command;

use reinsure_cli::commands::{run_dynamic, run_g_lattice, run_sweep, run_validate, run_variance_check};
use reinsure_cli::config::{LatticeConfig, RetentionChoice, ScenarioConfig, SweepConfig, SweepParameter, Truncation};
use reinsure_cli::error::CliError;
use reinsure_cli::output::{config_hash, OutDir};
use reinsure_cli::{execute, Verb};
use reinsure_core::models::{CheckStatus, FactorModel};
use reinsure_testkit::evp_exponential;
use serde_json::Value;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn load(name: &str) -> ScenarioConfig {
    ScenarioConfig::load(&config_path(name)).unwrap()
}

fn light(mut cfg: ScenarioConfig) -> ScenarioConfig {
    cfg.mc.n_reps = 2000;
    cfg.mc.n_steps = 100;
    cfg.dynamic.n_paths = 20;
    cfg.surface.n_t = 11;
    cfg.surface.n_y = 21;
    cfg.lattice = LatticeConfig {
        n_t: 3,
        n_p: 4,
        p_range: (0.5, 2.0),
        n_reps: 1000,
    };
    cfg
}

fn out_dir() -> (tempfile::TempDir, OutDir) {
    let dir = tempfile::tempdir().unwrap();
    let out = OutDir::create(dir.path()).unwrap();
    (dir, out)
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reinsure"))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn binary_writes_manifest_with_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let status = binary()
        .args(["validate", "--config"])
        .arg(config_path("reference.json"))
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let manifest = read_json(&dir.path().join("manifest.json"));
    let cfg = load("reference.json");
    assert_eq!(manifest["config_sha256"], config_hash(&cfg).unwrap());
    assert_eq!(manifest["seed"], cfg.seed);
    assert_eq!(manifest["command"], "validate");
    assert_eq!(manifest["artifacts"], serde_json::json!(["validation.txt", "validation.json"]));
}

#[test]
fn seed_and_reps_overrides_reach_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let status = binary()
        .args(["validate", "--seed", "7", "--reps", "1234", "--threads", "2", "--config"])
        .arg(config_path("reference.json"))
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let manifest = read_json(&dir.path().join("manifest.json"));
    let mut cfg = load("reference.json");
    cfg.seed = 7;
    cfg.mc.n_reps = 1234;
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["n_reps"], 1234);
    assert_eq!(manifest["config_sha256"], config_hash(&cfg).unwrap());
}

#[test]
fn binary_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = read_json(&config_path("reference.json"));
    doc["surplus"] = serde_json::json!(1.0);
    let path = dir.path().join("bad.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let output = binary().args(["validate", "--config"]).arg(&path).output().unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("surplus"), "{stderr}");
}

#[test]
fn binary_rejects_missing_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = read_json(&config_path("reference.json"));
    doc.as_object_mut().unwrap().remove("seed");
    let path = dir.path().join("no_seed.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let output = binary().args(["validate", "--config"]).arg(&path).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("seed"));
}

#[test]
fn untruncated_pareto_fails_moment_checks_and_aborts_experiments() {
    let mut cfg = load("reference.json");
    cfg.claims.truncation = Truncation::None;
    let (_dir, mut out) = out_dir();
    let report = run_validate(&cfg, &mut out).unwrap();
    assert_eq!(report.status_of("exponential_moments"), Some(CheckStatus::Fail));
    assert!(report.has_failures());
    let (_dir, mut out) = out_dir();
    assert!(matches!(run_dynamic(&cfg, &mut out), Err(CliError::ValidationFailed { .. })));
}

#[test]
fn shipped_configs_have_no_failures() {
    for entry in std::fs::read_dir(config_path("")).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ScenarioConfig::load(&path).unwrap();
        let (_dir, mut out) = out_dir();
        let report = run_validate(&cfg, &mut out).unwrap();
        assert!(!report.has_failures(), "{}: {report}", path.display());
    }
}

#[test]
fn dynamic_evp_column_matches_explicit_strategy() {
    let cfg = light(load("exponential.json"));
    let (_dir, mut out) = out_dir();
    let table = run_dynamic(&cfg, &mut out).unwrap();
    let (eta, horizon) = (cfg.preferences.eta, cfg.preferences.horizon);
    for (&t, &u) in table.t.iter().zip(&table.u_star_evp) {
        let (oracle, _) = evp_exponential(2.0, eta, cfg.market.rate, horizon, cfg.premium.theta_r, t);
        assert!((u - oracle).abs() <= 1e-8, "t = {t}: {u} vs {oracle}");
    }
}

#[test]
fn dynamic_strategy_is_pathwise_constant_under_a_frozen_factor() {
    let mut cfg = light(load("reference.json"));
    cfg.factor = FactorModel::constant_intensity(0.2);
    let (_dir, mut out) = out_dir();
    let table = run_dynamic(&cfg, &mut out).unwrap();
    let first = &table.u_star_iavp[0];
    assert!(table.u_star_iavp.iter().all(|p| p == first));
    assert!(table.lambda.iter().flatten().all(|&l| l == 0.2));
}

#[test]
fn mean_intensity_adjusted_strategy_decreases_over_time() {
    let cfg = load("reference.json");
    assert_eq!(cfg.dynamic.n_paths, 200);
    let (_dir, mut out) = out_dir();
    let table = run_dynamic(&cfg, &mut out).unwrap();
    let mean = table.mean_iavp();
    let block = (mean.len() - 1) / 10;
    let blocks: Vec<f64> = mean.chunks(block).take(10).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    assert!(blocks.windows(2).all(|w| w[1] < w[0]), "{blocks:?}");
    assert!(mean[mean.len() - 1] < mean[0]);
}

#[test]
fn sweep_needs_a_sweep_section() {
    let cfg = light(load("reference.json"));
    let (_dir, mut out) = out_dir();
    assert!(matches!(run_sweep(&cfg, &mut out), Err(CliError::ConfigInvalid { .. })));
}

#[test]
fn sweep_csv_layout_follows_the_parameter() {
    let mut cfg = light(load("reference.json"));
    cfg.sweep = Some(SweepConfig {
        parameter: SweepParameter::ThetaR,
        from: 0.05,
        to: 0.5,
        steps: 4,
    });
    let (dir, mut out) = out_dir();
    run_sweep(&cfg, &mut out).unwrap();
    let text = std::fs::read_to_string(dir.path().join("sweep_theta_r.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("param_value,u_star_evp,u_star_iavp"));
    assert_eq!(text.lines().count(), 5);

    cfg.sweep = Some(SweepConfig {
        parameter: SweepParameter::Sigma,
        from: 0.05,
        to: 0.5,
        steps: 3,
    });
    let (dir, mut out) = out_dir();
    let table = run_sweep(&cfg, &mut out).unwrap();
    let text = std::fs::read_to_string(dir.path().join("sweep_sigma.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("param_value,w_star,merton,correction"));
    for r in &table.rows {
        let (w, m, c) = (r.w_star.unwrap(), r.merton.unwrap(), r.correction.unwrap());
        assert!((w - m - c).abs() <= 1e-12 * w.abs());
    }
}

#[test]
fn g_lattice_writes_finite_diagnostics() {
    let cfg = light(load("reference.json"));
    let (dir, mut out) = out_dir();
    let lattice = run_g_lattice(&cfg, &mut out).unwrap();
    assert_eq!(lattice.nodes.len(), 12);
    let diag = read_json(&dir.path().join("g_lattice_diagnostics.json"));
    for key in ["growth_constant", "beta", "max_se_g", "max_se_dg_dp"] {
        assert!(diag[key].as_f64().unwrap().is_finite(), "{key}");
    }
}

#[test]
fn variance_check_reports_premium_dominance_for_the_adjusted_principle() {
    let mut cfg = light(load("reference.json"));
    cfg.retention = RetentionChoice::Optimal;
    cfg.mc.n_reps = 20_000;
    let (_dir, mut out) = out_dir();
    let check = run_variance_check(&cfg, &mut out).unwrap();
    assert!(check.premium_dominance.is_some());

    let mut cfg = light(load("exponential.json"));
    cfg.mc.n_reps = 20_000;
    let (_dir, mut out) = out_dir();
    let check = run_variance_check(&cfg, &mut out).unwrap();
    assert!(check.premium_dominance.is_none());
    assert!(check.decomposition.holds);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cfg = light(load("reference.json"));
    let read = |dir: &Path| std::fs::read(dir.join("dominance.csv")).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    execute(Verb::Dominance, &cfg, a.path()).unwrap();
    execute(Verb::Dominance, &cfg, b.path()).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}
