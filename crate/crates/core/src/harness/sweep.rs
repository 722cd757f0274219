use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Cell, ConfigError, Mode, SweepSpec};
use crate::eigen::SolverConfig;
use crate::metrics::{
    exact_recovery, snr_ratio, sync_error, PhaseTimings, TrialOutcome, LOG_ZERO_FLOOR,
};
use crate::model::{add_gaussian_noise, generate_ground_truth, generate_observation, ModelParams};
use crate::pipeline::{solve, PipelineConfig, PipelineError};
use crate::rng::mix;

/// Bumped whenever [`COLUMNS`] or their meaning change.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const COLUMNS: [&str; 20] = [
    "mode",
    "n",
    "K",
    "d",
    "alpha",
    "beta",
    "p",
    "q",
    "sigma",
    "eta",
    "trial",
    "subseed",
    "exact",
    "sync_error_log",
    "snr_min",
    "t_eigen_ms",
    "t_cpqr_ms",
    "t_recover_ms",
    "t_refine_ms",
    "flags",
];

/// One trial of one cell.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub mode: Mode,
    pub cell: Cell,
    pub trial: usize,
    pub subseed: u64,
    /// `None` when the pipeline failed; `flags` says why.
    pub outcome: Option<TrialOutcome>,
    pub flags: Vec<String>,
}

/// Per-cell means over its trials. Failed trials count as failures in
/// `success_rate` and are left out of the other means.
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub mode: Mode,
    pub cell: Cell,
    pub trials: usize,
    pub failed: usize,
    pub success_rate: f64,
    pub mean_sync_error_log: Option<f64>,
    pub mean_snr_min: Option<f64>,
    pub mean_timings: Option<PhaseTimings>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub records: Vec<RunRecord>,
    pub summaries: Vec<CellSummary>,
}

/// Seed of one trial; depends only on the master seed, the cell's
/// coordinates and the trial index, never on scheduling.
pub fn subseed(master: u64, cell: &Cell, trial: usize) -> u64 {
    mix(&[
        master,
        cell.n as u64,
        cell.k as u64,
        cell.d as u64,
        cell.p.to_bits(),
        cell.q.to_bits(),
        cell.sigma.to_bits(),
        trial as u64,
    ])
}

/// Generates, solves and scores one realization.
pub fn run_trial(spec: &SweepSpec, cell: &Cell, trial: usize) -> RunRecord {
    let seed = subseed(spec.seed, cell, trial);
    let mut flags = Vec::new();
    let outcome = match trial_outcome(spec, cell, seed, &mut flags) {
        Ok(o) => Some(o),
        Err(e) => {
            flags.push(failure_tag(&e));
            None
        }
    };
    RunRecord {
        mode: spec.mode,
        cell: cell.clone(),
        trial,
        subseed: seed,
        outcome,
        flags,
    }
}

fn failure_tag(e: &TrialError) -> String {
    match e {
        TrialError::Pipeline(PipelineError::Eigen(crate::eigen::EigenError::NoConvergence {
            ..
        })) => "no_convergence".into(),
        other => format!("error:{}", other.to_string().replace([',', '\n'], " ")),
    }
}

#[derive(Debug, thiserror::Error)]
enum TrialError {
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

fn trial_outcome(
    spec: &SweepSpec,
    cell: &Cell,
    seed: u64,
    flags: &mut Vec<String>,
) -> Result<TrialOutcome, TrialError> {
    let params = ModelParams {
        n: cell.n,
        k: cell.k,
        d: cell.d,
        p: cell.p,
        q: cell.q,
        sizes: cell.sizes.clone(),
        sigma: cell.sigma,
        seed,
    };
    params.validate()?;
    let gt = generate_ground_truth(&params)?;
    let mut a = generate_observation(&gt, cell.p, cell.q, seed);
    if cell.sigma > 0.0 {
        a = add_gaussian_noise(&a, cell.sigma, seed);
    }
    let cfg = PipelineConfig {
        solver: SolverConfig {
            tolerance: spec.tolerance,
            max_iterations: spec.max_iterations,
            block_size: None,
            seed,
        },
        refine: spec.refine,
        refine_fraction: spec.refine_fraction,
    };
    let out = solve(&a, cell.k, &cfg)?;
    flags.extend(out.result.warnings.iter().map(|w| w.tag()));
    let sync = sync_error(&out.result.transforms, &gt);
    if sync == LOG_ZERO_FLOOR {
        flags.push("sync_floor".into());
    }
    let snr_min = if spec.mode == Mode::Snr {
        snr_ratio(&out.factors, &gt.labels).ok()
    } else {
        None
    };
    Ok(TrialOutcome {
        exact: exact_recovery(&out.result.labels, &gt.labels),
        sync_error_log: sync,
        eta: cell.eta,
        runtime: out.timings,
        snr_min,
    })
}

/// Runs every (cell, trial) pair on a pool of `spec.workers` threads.
/// Records come back ordered by cell, then trial.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, ConfigError> {
    spec.validate()?;
    let cells = spec.cells()?;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.trials).map(move |t| (c, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| ConfigError::Validation(format!("cannot start {} workers: {e}", spec.workers)))?;
    let records: Vec<RunRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, t)| run_trial(spec, &cells[c], t))
            .collect()
    });
    let summaries = records
        .chunks(spec.trials)
        .map(|chunk| summarize(spec.mode, chunk))
        .collect();
    Ok(SweepResult { records, summaries })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Means over the trials of one cell.
pub fn summarize(mode: Mode, records: &[RunRecord]) -> CellSummary {
    let done: Vec<&TrialOutcome> = records.iter().filter_map(|r| r.outcome.as_ref()).collect();
    let trials = records.len();
    let successes = done.iter().filter(|o| o.exact).count();
    let timings = mean(done.iter().map(|o| o.runtime.eigen_ms)).map(|eigen_ms| PhaseTimings {
        eigen_ms,
        cpqr_ms: mean(done.iter().map(|o| o.runtime.cpqr_ms)).unwrap_or(0.0),
        recover_ms: mean(done.iter().map(|o| o.runtime.recover_ms)).unwrap_or(0.0),
        refine_ms: mean(done.iter().map(|o| o.runtime.refine_ms)).unwrap_or(0.0),
    });
    CellSummary {
        mode,
        cell: records[0].cell.clone(),
        trials,
        failed: trials - done.len(),
        success_rate: successes as f64 / trials as f64,
        mean_sync_error_log: mean(done.iter().map(|o| o.sync_error_log)),
        mean_snr_min: mean(done.iter().filter_map(|o| o.snr_min)),
        mean_timings: timings,
    }
}

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn cell_fields(mode: Mode, c: &Cell) -> Vec<String> {
    vec![
        mode.to_string(),
        c.n.to_string(),
        c.k.to_string(),
        c.d.to_string(),
        num(c.alpha),
        num(c.beta),
        num(c.p),
        num(c.q),
        num(c.sigma),
        opt(c.eta),
    ]
}

fn timing_fields(t: Option<&PhaseTimings>) -> [String; 4] {
    match t {
        Some(t) => [num(t.eigen_ms), num(t.cpqr_ms), num(t.recover_ms), num(t.refine_ms)],
        None => Default::default(),
    }
}

/// Writes trial rows, then one `trial = mean` row per cell. Timing columns
/// stay empty unless `with_timings`, which keeps the file reproducible.
pub fn write_csv<W: Write>(w: W, result: &SweepResult, with_timings: bool) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(COLUMNS)?;
    for r in &result.records {
        let mut row = cell_fields(r.mode, &r.cell);
        row.push(r.trial.to_string());
        row.push(r.subseed.to_string());
        match &r.outcome {
            Some(o) => {
                row.push(u8::from(o.exact).to_string());
                row.push(num(o.sync_error_log));
                row.push(opt(o.snr_min));
                row.extend(timing_fields(with_timings.then_some(&o.runtime)));
            }
            None => {
                row.extend(["0".to_string(), String::new(), String::new()]);
                row.extend(timing_fields(None));
            }
        }
        row.push(r.flags.join(";"));
        out.write_record(&row)?;
    }
    for s in &result.summaries {
        let mut row = cell_fields(s.mode, &s.cell);
        row.push("mean".into());
        row.push(String::new());
        row.push(num(s.success_rate));
        row.push(opt(s.mean_sync_error_log));
        row.push(opt(s.mean_snr_min));
        row.extend(timing_fields(if with_timings { s.mean_timings.as_ref() } else { None }));
        row.push(if s.failed > 0 { format!("failed:{}", s.failed) } else { String::new() });
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Resolved run description written next to the CSV.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub csv_schema_version: u32,
    pub columns: &'static [&'static str],
    pub master_seed: u64,
    pub log_base: &'static str,
    pub sync_error_floor: f64,
    pub timing_method: String,
    pub spec: &'a SweepSpec,
}

impl<'a> Manifest<'a> {
    pub fn new(spec: &'a SweepSpec) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            csv_schema_version: CSV_SCHEMA_VERSION,
            columns: &COLUMNS,
            master_seed: spec.seed,
            log_base: "e",
            sync_error_floor: LOG_ZERO_FLOOR,
            timing_method: format!(
                "monotonic clock; bench: warm-up discarded, median of {} repetitions",
                spec.repetitions
            ),
            spec,
        }
    }
}
