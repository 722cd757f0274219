use std::hint::black_box;
use std::io::Write;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::config::{Cell, ConfigError, Mode, SweepSpec};
use super::sweep::subseed;
use crate::cpqr::{blockwise_cpqr, BlockCpqrFactors};
use crate::eigen::{top_eigenpairs, EigenBasis, SolverConfig};
use crate::model::{generate_ground_truth, generate_observation, ModelParams, SparseBlockMatrix};
use crate::pipeline::RefineMode;
use crate::recovery::{assign_and_extract, refine_clusters, refine_transforms, RecoveryResult};

/// Each timing sample repeats its phase until at least this much time passed.
const MIN_SAMPLE: Duration = Duration::from_millis(20);

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub phase: &'static str,
    pub ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Log-log slope of cpqr + recover + refine against `n`.
    pub slope_excluding_eigen: f64,
    /// Log-log slope of the whole pipeline.
    pub slope_full: f64,
    /// Log-log slope of the quadratic all-pairs control kernel.
    pub slope_control: f64,
}

impl BenchReport {
    pub fn series(&self, phase: &str) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter(|r| r.phase == phase)
            .map(|r| (r.n, r.ms))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Milliseconds per call of `f`, averaged over enough calls to span
/// [`MIN_SAMPLE`].
pub fn sample_ms<T>(mut f: impl FnMut() -> T) -> f64 {
    let start = Instant::now();
    let mut calls = 0u32;
    while calls == 0 || start.elapsed() < MIN_SAMPLE {
        black_box(f());
        calls += 1;
    }
    start.elapsed().as_secs_f64() * 1e3 / f64::from(calls)
}

fn median(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(f64::total_cmp);
    samples[samples.len() / 2]
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = logs.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Θ(n²) control: sum of inner products over all pairs of `n` points in `R^d`.
pub fn all_pairs_kernel(points: &[f64], d: usize) -> f64 {
    let n = points.len() / d;
    let mut acc = 0.0;
    for i in 0..n {
        let xi = &points[i * d..(i + 1) * d];
        for j in i + 1..n {
            let xj = &points[j * d..(j + 1) * d];
            acc += xi.iter().zip(xj).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    acc
}

struct Prepared {
    n: usize,
    d: usize,
    kd: usize,
    a: SparseBlockMatrix,
    solver: SolverConfig,
    basis: EigenBasis,
    factors: BlockCpqrFactors,
    assigned: RecoveryResult,
    points: Vec<f64>,
}

const PHASES: [&str; 5] = ["eigen", "cpqr", "recover", "refine", "control_all_pairs"];

impl Prepared {
    fn new(spec: &SweepSpec, cell: &Cell) -> Result<Self, ConfigError> {
        let seed = subseed(spec.seed, cell, 0);
        let params = ModelParams {
            n: cell.n,
            k: cell.k,
            d: cell.d,
            p: cell.p,
            q: cell.q,
            sizes: cell.sizes.clone(),
            sigma: 0.0,
            seed,
        };
        let gt = generate_ground_truth(&params).map_err(|e| ConfigError::Validation(e.to_string()))?;
        let a = generate_observation(&gt, cell.p, cell.q, seed);
        let solver = SolverConfig {
            tolerance: spec.tolerance,
            max_iterations: spec.max_iterations,
            block_size: None,
            seed,
        };
        let kd = cell.k * cell.d;
        let basis = match top_eigenpairs(&a, kd, &solver) {
            Ok(b) => b,
            Err(crate::eigen::EigenError::NoConvergence { best }) => *best,
            Err(e) => return Err(ConfigError::Validation(e.to_string())),
        };
        let factors = blockwise_cpqr(&basis.vectors.transpose(), cell.d)
            .map_err(|e| ConfigError::Validation(e.to_string()))?;
        let assigned = assign_and_extract(&factors);
        let points = basis.vectors.column(0).iter().copied().collect();
        Ok(Self {
            n: cell.n,
            d: cell.d,
            kd,
            a,
            solver,
            basis,
            factors,
            assigned,
            points,
        })
    }

    fn time(&self, phase: &str, refine: RefineMode, fraction: f64) -> f64 {
        match phase {
            "eigen" => sample_ms(|| top_eigenpairs(&self.a, self.kd, &self.solver).is_ok()),
            "cpqr" => sample_ms(|| blockwise_cpqr(&self.basis.vectors.transpose(), self.d)),
            "recover" => sample_ms(|| assign_and_extract(&self.factors)),
            "refine" if refine == RefineMode::None => 0.0,
            "refine" => sample_ms(|| {
                let mut r = self.assigned.clone();
                if refine.clusters() {
                    r = refine_clusters(&self.factors, &r, fraction).expect("validated fraction");
                }
                if refine.transforms() {
                    r = refine_transforms(&self.a, &r, &self.solver).unwrap_or(r);
                }
                r
            }),
            _ => sample_ms(|| all_pairs_kernel(&self.points, self.d)),
        }
    }
}

/// Times every phase for each `n` in `spec.n_values` and fits slopes.
///
/// Repetitions are interleaved across sizes (each repetition visits every
/// size once) so that drift in machine speed affects all sizes alike; the
/// reported time is the per-size median.
pub fn run_runtime_bench(spec: &SweepSpec) -> Result<BenchReport, ConfigError> {
    if spec.mode != Mode::Runtime {
        return Err(ConfigError::Validation(format!(
            "bench needs mode = runtime, got {}",
            spec.mode
        )));
    }
    spec.validate()?;
    let prepared = spec
        .cells()?
        .iter()
        .map(|cell| Prepared::new(spec, cell))
        .collect::<Result<Vec<_>, _>>()?;
    let time = |p: &Prepared, phase: &str| p.time(phase, spec.refine, spec.refine_fraction);
    // warm-up
    for p in &prepared {
        for phase in PHASES {
            time(p, phase);
        }
    }
    let mut samples = vec![[(); PHASES.len()].map(|_| Vec::new()); prepared.len()];
    for _ in 0..spec.repetitions.max(1) {
        for (p, slot) in prepared.iter().zip(&mut samples) {
            for (phase, bucket) in PHASES.iter().zip(slot.iter_mut()) {
                bucket.push(time(p, phase));
            }
        }
    }

    let mut rows = Vec::new();
    for (p, slot) in prepared.iter().zip(samples) {
        let [eigen, cpqr, recover, refine, control] = slot.map(median);
        let excl = cpqr + recover + refine;
        for (phase, ms) in [
            ("eigen", eigen),
            ("cpqr", cpqr),
            ("recover", recover),
            ("refine", refine),
            ("pipeline_excluding_eigen", excl),
            ("pipeline_full", excl + eigen),
            ("control_all_pairs", control),
        ] {
            rows.push(BenchRow { n: p.n, phase, ms });
        }
    }
    let slope = |phase: &str| {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.phase == phase)
            .map(|r| (r.n as f64, r.ms))
            .collect();
        if pts.len() >= 2 {
            loglog_slope(&pts)
        } else {
            f64::NAN
        }
    };
    Ok(BenchReport {
        slope_excluding_eigen: slope("pipeline_excluding_eigen"),
        slope_full: slope("pipeline_full"),
        slope_control: slope("control_all_pairs"),
        rows,
    })
}
