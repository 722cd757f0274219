//! Evaluation quantities: exact recovery, synchronization error, the
//! threshold statistic η and the minimum signal-to-noise ratio of `R`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::cpqr::BlockCpqrFactors;
use crate::linalg::{polar_factor, OrthogonalMatrix};
use crate::model::GroundTruth;

/// Reported in place of `ln 0`.
pub const LOG_ZERO_FLOOR: f64 = -746.0;

/// Ratio denominators at or below this fraction of the block column norm
/// count as zero, giving an infinite ratio.
pub const SNR_ZERO_RELATIVE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("eta is undefined: {0}")]
    Domain(String),
    #[error("the signal-to-noise ratio needs K = 2, got K = {0}")]
    WrongK(usize),
    #[error("no admissible {axis} reaches eta = {eta}")]
    Unreachable { axis: &'static str, eta: f64 },
}

/// Wall-clock time spent in each pipeline phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct PhaseTimings {
    pub eigen_ms: f64,
    pub cpqr_ms: f64,
    pub recover_ms: f64,
    pub refine_ms: f64,
}

/// Scores of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub exact: bool,
    /// Natural log of the aligned error; see [`sync_error`].
    pub sync_error_log: f64,
    pub eta: Option<f64>,
    pub runtime: PhaseTimings,
    pub snr_min: Option<f64>,
}

/// Whether two labelings induce the same partition, ignoring cluster names.
pub fn exact_recovery(estimated: &[usize], truth: &[usize]) -> bool {
    estimated.len() == truth.len() && canonical_labels(estimated) == canonical_labels(truth)
}

/// Renames clusters in order of their smallest member.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut names = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = names.len();
            *names.entry(*l).or_insert(next)
        })
        .collect()
}

/// `max_k max_{i∈C_k} ‖Ô_i − O_i G⁽ᵏ⁾‖_F / √d` with the per-cluster Procrustes
/// alignment `G⁽ᵏ⁾ = P(Σ_{i∈C_k} O_iᵀ Ô_i)`. Clusters are the true ones.
pub fn max_aligned_error(estimated: &[OrthogonalMatrix], gt: &GroundTruth) -> f64 {
    assert_eq!(estimated.len(), gt.n, "one estimate per node");
    let d = gt.d;
    let mut worst = 0.0f64;
    for cluster in gt.clusters() {
        let mut cross = DMatrix::<f64>::zeros(d, d);
        for &i in &cluster {
            cross.gemm_tr(1.0, gt.transforms[i].as_matrix(), estimated[i].as_matrix(), 1.0);
        }
        let g = polar_factor(cross.as_view()).expect("transforms are finite");
        for &i in &cluster {
            let err = (estimated[i].as_matrix() - gt.transforms[i].as_matrix() * g.as_matrix()).norm();
            worst = worst.max(err);
        }
    }
    worst / (d as f64).sqrt()
}

/// Natural log of [`max_aligned_error`], floored at [`LOG_ZERO_FLOOR`].
pub fn sync_error(estimated: &[OrthogonalMatrix], gt: &GroundTruth) -> f64 {
    log_floored(max_aligned_error(estimated, gt))
}

pub fn log_floored(x: f64) -> f64 {
    let l = x.ln();
    if l < LOG_ZERO_FLOOR {
        LOG_ZERO_FLOOR
    } else {
        l
    }
}

/// `η = √((p(1−p)+q)·ln(nd)) / (p√n)`.
pub fn eta(n: usize, p: f64, q: f64, d: usize) -> Result<f64, MetricsError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(MetricsError::Domain(format!("p = {p} must lie in (0, 1]")));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(MetricsError::Domain(format!("q = {q} must lie in [0, 1]")));
    }
    if n < 2 || d < 1 {
        return Err(MetricsError::Domain(format!("need n >= 2 and d >= 1, got n = {n}, d = {d}")));
    }
    let nf = n as f64;
    Ok(((p * (1.0 - p) + q) * (nf * d as f64).ln()).sqrt() / (p * nf.sqrt()))
}

/// `log n / n`, the scale of `p = α·log n/n` and `q = β·log n/n`.
pub fn log_scale(n: usize) -> f64 {
    let nf = n as f64;
    nf.ln() / nf
}

/// The `β` that makes `eta(n, α·log n/n, β·log n/n, d) == target`.
pub fn beta_for_eta(n: usize, d: usize, alpha: f64, target: f64) -> Result<f64, MetricsError> {
    let s = log_scale(n);
    let p = alpha * s;
    if !(p > 0.0 && p <= 1.0) {
        return Err(MetricsError::Domain(format!("p = {p} must lie in (0, 1]")));
    }
    let nf = n as f64;
    let q = target * target * p * p * nf / (nf * d as f64).ln() - p * (1.0 - p);
    if !(0.0..=1.0).contains(&q) {
        return Err(MetricsError::Unreachable { axis: "beta", eta: target });
    }
    Ok(q / s)
}

/// The `α` that makes `eta(n, α·log n/n, β·log n/n, d) == target`; the
/// positive root of `(c+1)p² − p − q = 0` with `c = η²n/ln(nd)`.
pub fn alpha_for_eta(n: usize, d: usize, beta: f64, target: f64) -> Result<f64, MetricsError> {
    let s = log_scale(n);
    let q = beta * s;
    if !(0.0..=1.0).contains(&q) {
        return Err(MetricsError::Domain(format!("q = {q} must lie in [0, 1]")));
    }
    if target.is_nan() || target <= 0.0 {
        return Err(MetricsError::Unreachable { axis: "alpha", eta: target });
    }
    let nf = n as f64;
    let c = target * target * nf / (nf * d as f64).ln() + 1.0;
    let p = (1.0 + (1.0 + 4.0 * c * q).sqrt()) / (2.0 * c);
    if !(p > 0.0 && p <= 1.0) {
        return Err(MetricsError::Unreachable { axis: "alpha", eta: target });
    }
    Ok(p / s)
}

/// `min_{i∈C₁} ‖R_{1i}‖_F / ‖R_{2i}‖_F` for `K = 2`, where block row 1 is the
/// first pivot's and `C₁` is the true cluster of that pivot. A vanishing
/// denominator yields `+∞`.
pub fn snr_ratio(factors: &BlockCpqrFactors, true_labels: &[usize]) -> Result<f64, MetricsError> {
    let k = factors.num_block_rows();
    if k != 2 {
        return Err(MetricsError::WrongK(k));
    }
    let first = factors.pivots.first().copied().unwrap_or(0);
    let home = true_labels[first];
    let mut min = f64::INFINITY;
    for (i, _) in true_labels.iter().enumerate().filter(|(_, &l)| l == home) {
        let signal = factors.block(0, i).norm();
        let noise = factors.block(1, i).norm();
        let total = factors.block_column(i).norm();
        let ratio = if noise <= SNR_ZERO_RELATIVE * total || noise < 1e-300 {
            f64::INFINITY
        } else {
            signal / noise
        };
        min = min.min(ratio);
    }
    Ok(min)
}
