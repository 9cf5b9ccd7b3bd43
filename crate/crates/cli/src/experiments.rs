//! The named experiments. Each one turns a validated configuration into a
//! results table, an optional chart and free-form notes for the manifest.

use std::path::Path;

use log::{debug, info, warn};
use nlskdv_core::bourgain::{estimate_ratio, fit_slope, strichartz_ratio, RatioStats};
use nlskdv_core::continuation::{continuation_run, gwp_threshold};
use nlskdv_core::functionals::{modified_functionals, FunctionalReport};
use nlskdv_core::i_operator::IOperatorSpec;
use nlskdv_core::solver::{integrate, step_plan, SystemState, Trajectory};
use nlskdv_core::commutators::derivative_identity_residual;
use nlskdv_core::LabError;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{CliError, Result};
use crate::output::{emit_csv, read_csv, Cell, Chart, Table};

/// Where and when a run became unstable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub leg: Option<usize>,
    pub t: f64,
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentOutput {
    pub table: Table,
    pub chart: Option<Chart>,
    pub notes: Vec<String>,
    /// Set when the integration became unstable; `table` holds the rows computed before.
    pub failure: Option<Failure>,
}

impl ExperimentOutput {
    fn new(table: Table) -> Self {
        Self { table, ..Self::default() }
    }
}

pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutput> {
    match config.experiment {
        ExperimentKind::Simulate => simulate(config),
        ExperimentKind::AlmostConservationSweep => almost_conservation_sweep(config, out_dir),
        ExperimentKind::IdentityResidual => identity_residual(config),
        ExperimentKind::LemmaRatios => lemma_ratios(config),
        ExperimentKind::Thresholds => thresholds(config.thresholds()?.branch),
        ExperimentKind::Continuation => continuation(config),
    }
}

fn initial_state(config: &ExperimentConfig) -> Result<SystemState> {
    let grid = config.grid()?;
    let (u, v) = config.data()?.generate(&grid, config.seed)?;
    Ok(SystemState::new(0.0, u, v)?)
}

fn positive(what: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{what} must be positive, got {x}")))
    }
}

/// Slope of `ln y` against `ln x` over the points with positive finite `y`,
/// or `None` with fewer than three such points.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(_, y)| **y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    (lx.len() >= 3).then(|| fit_slope(&lx, &ly))
}

fn simulate(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let sim = config.simulate()?;
    positive("simulate.t_final", sim.t_final)?;
    let solver = config.solver()?;
    let params = config.system()?;
    let spec = config.i_operator()?;
    let state = initial_state(config)?;
    let (steps, _) = step_plan(sim.t_final, solver.dt)?;
    let stride = (steps / sim.samples.max(1)).max(1);
    info!("simulate: {steps} steps, reporting every {stride}");

    let mut snapshots = Vec::new();
    let result = integrate(&state, sim.t_final, &solver, &params, stride, |s| snapshots.push(s.clone()));
    let mut failure = match result {
        Ok(_) => None,
        Err(LabError::Instability { t }) => Some(Failure { leg: None, t }),
        Err(e) => return Err(e.into()),
    };

    let mut table = Table::new(&["t", "mass", "momentum_l", "energy_e", "modified_l", "modified_e", "iu_h1", "iv_h1"]);
    for s in &snapshots {
        // finite states can still overflow the quartic terms
        let r = match FunctionalReport::compute(s, &spec, &params) {
            Ok(r) => r,
            Err(LabError::Instability { t }) => {
                failure = Some(Failure { leg: None, t });
                break;
            }
            Err(e) => return Err(e.into()),
        };
        table.push(
            [r.t, r.mass, r.momentum_l, r.energy_e, r.modified_l, r.modified_e, r.h1_norms.0, r.h1_norms.1]
                .into_iter()
                .map(Cell::Float)
                .collect(),
        );
    }
    if let Some(f) = failure {
        warn!("instability at t = {}; keeping {} rows", f.t, table.rows.len());
    }
    let chart = Chart::from_table(&table, "Functionals along the trajectory", "t", &["mass", "momentum_l", "energy_e", "modified_l", "modified_e"], false);
    Ok(ExperimentOutput { chart: Some(chart), failure, ..ExperimentOutput::new(table) })
}

const SWEEP_HEADER: [&str; 3] = ["n", "increment_l", "increment_e"];

/// Largest `|F(t) − F(0)|` over the snapshots, for `F = L(Iu, Iv)` and `E(Iu, Iv)`.
fn sweep_point(snapshots: &[SystemState], spec: &IOperatorSpec, params: &nlskdv_core::solver::SystemParams) -> Result<(f64, f64)> {
    let (l0, e0) = modified_functionals(&snapshots[0].u, &snapshots[0].v, spec, params)?;
    let (mut dl, mut de) = (0.0f64, 0.0f64);
    for s in &snapshots[1..] {
        let (l, e) = modified_functionals(&s.u, &s.v, spec, params)?;
        if !(l.is_finite() && e.is_finite()) {
            return Err(LabError::Instability { t: s.t }.into());
        }
        dl = dl.max((l - l0).abs());
        de = de.max((e - e0).abs());
    }
    Ok((dl, de))
}

fn almost_conservation_sweep(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutput> {
    let sweep = config.sweep()?;
    positive("sweep.delta", sweep.delta)?;
    if sweep.n_values.is_empty() {
        return Err(CliError::Validation("sweep.n_values is empty".into()));
    }
    let specs = sweep
        .n_values
        .iter()
        .map(|&n| IOperatorSpec::for_regularity(n, sweep.s, sweep.variant))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let solver = config.solver()?;
    let params = config.system()?;
    let state = initial_state(config)?;

    // One trajectory serves every N.
    let mut snapshots = Vec::new();
    let result = integrate(&state, sweep.delta, &solver, &params, sweep.stride, |s| snapshots.push(s.clone()));
    if let Err(e) = result {
        return match e {
            LabError::Instability { t } => Ok(ExperimentOutput {
                failure: Some(Failure { leg: None, t }),
                ..ExperimentOutput::new(Table::new(&SWEEP_HEADER))
            }),
            e => Err(e.into()),
        };
    }
    info!("sweep: {} snapshots over [0, {}]", snapshots.len(), sweep.delta);

    let staging = out_dir.join("staging");
    std::fs::create_dir_all(&staging).map_err(|e| CliError::io(&staging, e))?;
    let staged: Vec<std::result::Result<std::path::PathBuf, String>> = specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| {
            let path = staging.join(format!("point-{i:03}.csv"));
            let (dl, de) = sweep_point(&snapshots, spec, &params).map_err(|e| e.to_string())?;
            let mut row = Table::new(&SWEEP_HEADER);
            row.push(vec![Cell::Float(spec.n), Cell::Float(dl), Cell::Float(de)]);
            emit_csv(&row, &path).map_err(|e| e.to_string())?;
            debug!("sweep point N = {} done", spec.n);
            Ok(path)
        })
        .collect();

    // Ordered merge: point files are read back in configuration order.
    let mut table = Table::new(&SWEEP_HEADER);
    let mut notes = Vec::new();
    for (n, point) in sweep.n_values.iter().zip(staged) {
        match point {
            Ok(path) => {
                let (_, rows) = read_csv(&path)?;
                for row in rows {
                    let cells = row
                        .iter()
                        .map(|c| c.parse::<f64>().map(Cell::Float))
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
                    table.push(cells);
                }
            }
            Err(msg) => notes.push(format!("sweep point N = {n} failed: {msg}")),
        }
    }
    std::fs::remove_dir_all(&staging).map_err(|e| CliError::io(&staging, e))?;

    let chart = Chart::from_table(&table, "Almost-conservation increments", "n", &["increment_l", "increment_e"], true);
    let ns = table.column("n");
    match (log_log_slope(&ns, &table.column("increment_l")), log_log_slope(&ns, &table.column("increment_e"))) {
        (Some(sl), Some(se)) => table.push(vec!["slope".into(), Cell::Float(sl), Cell::Float(se)]),
        _ => notes.push("fewer than three usable sweep points; slopes omitted".into()),
    }
    Ok(ExperimentOutput { chart: Some(chart), notes, ..ExperimentOutput::new(table) })
}

fn identity_residual(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let cfg = config.identity_residual()?;
    if cfg.h_values.is_empty() {
        return Err(CliError::Validation("identity_residual.h_values is empty".into()));
    }
    for &h in &cfg.h_values {
        positive("identity_residual.h_values entry", h)?;
        if cfg.t - h < 0.0 {
            return Err(CliError::Validation(format!("t - h must be nonnegative (t = {}, h = {h})", cfg.t)));
        }
    }
    let solver = config.solver()?;
    let params = config.system()?;
    let spec = config.i_operator()?;
    let state = initial_state(config)?;

    let mut times: Vec<f64> = cfg.h_values.iter().flat_map(|&h| [cfg.t - h, cfg.t + h]).chain([cfg.t]).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let trajectory = match Trajectory::record(&state, &times, &solver, &params) {
        Ok(t) => t,
        Err(LabError::Instability { t }) => {
            return Ok(ExperimentOutput {
                failure: Some(Failure { leg: None, t }),
                ..ExperimentOutput::new(Table::new(&["h", "res_l", "res_e"]))
            })
        }
        Err(e) => return Err(e.into()),
    };

    let mut table = Table::new(&["h", "res_l", "res_e"]);
    for &h in &cfg.h_values {
        let r = derivative_identity_residual(&trajectory, cfg.t, h, &spec, &params, cfg.reading)?;
        table.push(vec![Cell::Float(r.h), Cell::Float(r.res_l), Cell::Float(r.res_e)]);
    }
    let chart = Chart::from_table(&table, "Derivative-identity residuals", "h", &["res_l", "res_e"], true);
    let hs = table.column("h");
    let mut notes = Vec::new();
    match (log_log_slope(&hs, &table.column("res_l")), log_log_slope(&hs, &table.column("res_e"))) {
        (Some(sl), Some(se)) => table.push(vec!["slope".into(), Cell::Float(sl), Cell::Float(se)]),
        _ => notes.push("fewer than three positive residuals; slopes omitted".into()),
    }
    Ok(ExperimentOutput { chart: Some(chart), notes, ..ExperimentOutput::new(table) })
}

const LEMMA_HEADER: [&str; 14] =
    ["estimate", "m", "m_t", "k", "s", "b", "b_prime", "count", "min", "median", "p90", "max", "mean", "t_exponent"];

fn stats_row(name: &str, lattice: &nlskdv_core::bourgain::Lattice, exps: [f64; 4], st: &RatioStats, t_exp: Option<f64>) -> Vec<Cell> {
    let mut row = vec![Cell::from(name), Cell::Int(lattice.m as i64), Cell::Int(lattice.m_t as i64)];
    row.extend(exps.map(Cell::Float));
    row.push(Cell::Int(st.count as i64));
    row.extend([st.min, st.median, st.p90, st.max, st.mean].map(Cell::Float));
    row.push(t_exp.map_or(Cell::from(""), Cell::Float));
    row
}

fn lemma_ratios(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let cfg = config.lemma_ratios()?;
    if cfg.lattices.is_empty() {
        return Err(CliError::Validation("lemma_ratios.lattices is empty".into()));
    }
    let mut table = Table::new(&LEMMA_HEADER);
    let mut notes = Vec::new();
    for lattice in &cfg.lattices {
        lattice.validate()?;
        if cfg.strichartz {
            let st = strichartz_ratio(cfg.sample_count, *lattice, config.seed)?;
            table.push(stats_row("strichartz_schrodinger", lattice, [0.0; 4], &st.schrodinger, None));
            table.push(stats_row("strichartz_airy", lattice, [0.0; 4], &st.airy, None));
        }
        for entry in &cfg.lemmas {
            let p = entry.params();
            let report = estimate_ratio(entry.lemma, p, *lattice, cfg.sample_count, config.seed)?;
            let name = serde_json::to_value(entry.lemma)?.as_str().unwrap_or_default().to_string();
            if let Some(sweep) = &report.sweep {
                if !sweep.passes() {
                    notes.push(format!(
                        "{name} on {}x{}: exponent {:.3} below floor {:.3}",
                        lattice.m, lattice.m_t, sweep.exponent, sweep.floor
                    ));
                }
            }
            table.push(stats_row(&name, lattice, [p.k, p.s, p.b, p.b_prime], &report.stats, report.sweep.map(|s| s.exponent)));
        }
    }
    if table.rows.is_empty() {
        return Err(CliError::Validation("lemma_ratios selects no estimates".into()));
    }
    Ok(ExperimentOutput { notes, ..ExperimentOutput::new(table) })
}

/// Per-inequality thresholds plus the binding row.
pub fn thresholds(branch: nlskdv_core::continuation::Branch) -> Result<ExperimentOutput> {
    let report = gwp_threshold(branch.p_delta(), branch)?;
    let mut table = Table::new(&["inequality", "threshold"]);
    let mut notes = Vec::new();
    for e in &report.entries {
        table.push(vec![e.label.into(), e.threshold.to_string().into()]);
        if e.coefficient_mismatch {
            notes.push(format!(
                "{}: delta-loss coefficient {} (printed {}, which would give {})",
                e.label, e.q, e.printed_q, e.threshold_from_printed_q
            ));
        }
        if !e.matches_printed {
            notes.push(format!("{}: threshold {} differs from the reference value {}", e.label, e.threshold, e.printed));
        }
    }
    table.push(vec!["binding".into(), report.binding.to_string().into()]);
    Ok(ExperimentOutput { notes, ..ExperimentOutput::new(table) })
}

fn continuation(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let cfg = config.continuation()?;
    let solver = config.solver()?;
    let params = config.system()?;
    let state = initial_state(config)?;
    let report = continuation_run(&state.u, &state.v, cfg, &params, &solver)?;

    let mut table = Table::new(&[
        "leg", "t_start", "delta", "length", "steps", "mass", "modified_l", "modified_e", "delta_l", "delta_e", "budget_l", "budget_e",
    ]);
    for leg in &report.legs {
        let mut row = vec![Cell::Int(leg.index as i64)];
        row.extend([leg.t_start, leg.delta, leg.length].map(Cell::Float));
        row.push(Cell::Int(leg.steps as i64));
        row.extend(
            [leg.mass, leg.modified_l, leg.modified_e, leg.delta_l, leg.delta_e, leg.budget_l, leg.budget_e].map(Cell::Float),
        );
        table.push(row);
    }
    let mut notes = vec![format!(
        "{} legs, elapsed {}, cumulative |dL| {}, |dE| {}",
        report.legs.len(),
        report.elapsed(),
        report.cumulative_abs_delta_l,
        report.cumulative_abs_delta_e
    )];
    if let Some(leg) = report.budget_breach {
        notes.push(format!("increment budget exceeded at leg {leg}"));
    }
    let chart = Chart::from_table(&table, "Cumulative budget usage", "t_start", &["budget_l", "budget_e"], false);
    Ok(ExperimentOutput {
        chart: Some(chart),
        notes,
        failure: report.instability.map(|f| Failure { leg: Some(f.leg), t: f.t }),
        table,
    })
}
