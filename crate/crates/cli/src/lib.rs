//! Configuration, orchestration and artifact output for the `reinsure`
//! command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use clap::ValueEnum;

use crate::config::ScenarioConfig;
use crate::error::CliResult;
use crate::output::{Manifest, OutDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Verb {
    Validate,
    Sweep,
    Dynamic,
    GLattice,
    Dominance,
    VarianceCheck,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Validate => "validate",
            Verb::Sweep => "sweep",
            Verb::Dynamic => "dynamic",
            Verb::GLattice => "g-lattice",
            Verb::Dominance => "dominance",
            Verb::VarianceCheck => "variance-check",
        }
    }
}

/// Output directory: the explicit flag, then the config entry, then `out/`.
pub fn resolve_out_dir(flag: Option<&Path>, cfg: &ScenarioConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Runs one verb and writes its artifacts plus `manifest.json`; returns the
/// artifact names.
pub fn execute(verb: Verb, cfg: &ScenarioConfig, out_dir: &Path) -> CliResult<Vec<String>> {
    let mut out = OutDir::create(out_dir)?;
    match verb {
        Verb::Validate => {
            commands::run_validate(cfg, &mut out)?;
        }
        Verb::Sweep => {
            commands::run_sweep(cfg, &mut out)?;
        }
        Verb::Dynamic => {
            commands::run_dynamic(cfg, &mut out)?;
        }
        Verb::GLattice => {
            commands::run_g_lattice(cfg, &mut out)?;
        }
        Verb::Dominance => {
            commands::run_dominance(cfg, &mut out)?;
        }
        Verb::VarianceCheck => {
            commands::run_variance_check(cfg, &mut out)?;
        }
    }
    out.finish(Manifest::new(verb.name(), cfg)?)
}
