//! Batch front-end for the NLS-KdV lab: load a JSON config, run one named
//! experiment, write `results.csv`, `plot.svg` and `manifest.json`.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{debug, error, info};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{CliError, Result};
use crate::experiments::{run_experiment, ExperimentOutput, Failure};
use crate::output::{emit_csv, emit_svg};

pub const RESULTS_FILE: &str = "results.csv";
pub const PLOT_FILE: &str = "plot.svg";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Command-line overrides for one `run`.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub config_path: PathBuf,
    /// Worker threads; `None` uses one per core.
    pub jobs: Option<usize>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub config: Option<serde_json::Value>,
    pub config_sha256: Option<String>,
    pub jobs: Option<usize>,
    pub status: &'static str,
    pub exit_code: i32,
    pub message: Option<String>,
    pub failure: Option<Failure>,
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
    pub wall_time_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub output_dir: PathBuf,
    pub manifest: Manifest,
}

fn status_for(code: i32) -> &'static str {
    match code {
        0 => "ok",
        2 => "validation_failure",
        3 => "instability",
        _ => "error",
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("nlskdv-output")
}

/// Runs the configured experiment. Never panics on bad input; the manifest is
/// written in every case where the output directory can be created.
pub fn run(options: &RunOptions) -> RunOutcome {
    let started = Instant::now();
    let mut manifest = Manifest {
        tool: "nlskdv-lab",
        version: env!("CARGO_PKG_VERSION"),
        experiment: None,
        seed: None,
        config: None,
        config_sha256: None,
        jobs: options.jobs,
        status: "ok",
        exit_code: 0,
        message: None,
        failure: None,
        outputs: Vec::new(),
        notes: Vec::new(),
        wall_time_seconds: 0.0,
    };
    let mut output_dir = options.output.clone().unwrap_or_else(default_output_dir);

    let result = execute(options, &mut manifest, &mut output_dir);
    let code = match &result {
        Ok(()) if manifest.failure.is_some() => 3,
        Ok(()) => 0,
        Err(e) => {
            debug!("run failed: {e}");
            if let CliError::Lab(nlskdv_core::LabError::Instability { t }) = e {
                manifest.failure.get_or_insert(Failure { leg: None, t: *t });
            }
            manifest.message = Some(e.to_string());
            e.exit_code()
        }
    };
    if code == 3 && manifest.message.is_none() {
        if let Some(f) = manifest.failure {
            manifest.message = Some(match f.leg {
                Some(leg) => format!("numerical instability in leg {leg} at t = {}", f.t),
                None => format!("numerical instability at t = {}", f.t),
            });
        }
    }
    manifest.exit_code = code;
    manifest.status = status_for(code);
    manifest.wall_time_seconds = started.elapsed().as_secs_f64();

    let mut exit_code = code;
    if let Err(e) = write_manifest(&manifest, &output_dir) {
        error!("{e}");
        if exit_code == 0 {
            exit_code = e.exit_code();
        }
    }
    RunOutcome { exit_code, output_dir, manifest }
}

fn execute(options: &RunOptions, manifest: &mut Manifest, output_dir: &mut PathBuf) -> Result<()> {
    let path = &options.config_path;
    let bytes = std::fs::read(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    manifest.config_sha256 = Some(hex::encode(Sha256::digest(&bytes)));
    let text = String::from_utf8(bytes).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = options.seed {
        config.seed = seed;
    }
    match &options.output {
        Some(dir) => config.output_dir = dir.clone(),
        None => *output_dir = config.output_dir.clone(),
    }
    manifest.experiment = Some(config.experiment);
    manifest.seed = Some(config.seed);
    manifest.config = Some(serde_json::to_value(&config)?);
    if options.jobs == Some(0) {
        return Err(CliError::Validation("--jobs must be at least 1".into()));
    }

    std::fs::create_dir_all(&*output_dir).map_err(|e| CliError::io(&*output_dir, e))?;
    info!("running {:?} with seed {} into {}", config.experiment, config.seed, output_dir.display());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Validation(format!("cannot start worker pool: {e}")))?;
    let out: ExperimentOutput = pool.install(|| run_experiment(&config, output_dir))?;

    manifest.notes = out.notes;
    manifest.failure = out.failure;
    if !out.table.rows.is_empty() {
        emit_csv(&out.table, &output_dir.join(RESULTS_FILE))?;
        manifest.outputs.push(RESULTS_FILE.into());
        if let Some(chart) = &out.chart {
            emit_svg(chart, &output_dir.join(PLOT_FILE))?;
            manifest.outputs.push(PLOT_FILE.into());
        }
    }
    Ok(())
}

fn write_manifest(manifest: &Manifest, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}
