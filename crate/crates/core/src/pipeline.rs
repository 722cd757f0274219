use std::time::Instant;

use thiserror::Error;

use crate::cpqr::{blockwise_cpqr, BlockCpqrFactors, CpqrError};
use crate::eigen::{top_eigenpairs, EigenBasis, EigenError, SolverConfig};
use crate::metrics::PhaseTimings;
use crate::model::SparseBlockMatrix;
use crate::recovery::{
    assign_and_extract, refine_clusters, refine_transforms, RecoveryError, RecoveryResult,
    DEFAULT_REFINE_FRACTION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefineMode {
    #[default]
    None,
    Clusters,
    Transforms,
    Both,
}

impl RefineMode {
    pub fn clusters(self) -> bool {
        matches!(self, Self::Clusters | Self::Both)
    }

    pub fn transforms(self) -> bool {
        matches!(self, Self::Transforms | Self::Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Clusters => "clusters",
            Self::Transforms => "transforms",
            Self::Both => "both",
        }
    }
}

impl std::str::FromStr for RefineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "clusters" => Ok(Self::Clusters),
            "transforms" => Ok(Self::Transforms),
            "both" => Ok(Self::Both),
            other => Err(format!(
                "unknown refine mode `{other}` (expected none, clusters, transforms or both)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub solver: SolverConfig,
    pub refine: RefineMode,
    pub refine_fraction: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            refine: RefineMode::None,
            refine_fraction: DEFAULT_REFINE_FRACTION,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("eigensolver: {0}")]
    Eigen(#[from] EigenError),
    #[error("cpqr: {0}")]
    Cpqr(#[from] CpqrError),
    #[error("recovery: {0}")]
    Recovery(#[from] RecoveryError),
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub basis: EigenBasis,
    pub factors: BlockCpqrFactors,
    /// Straight off `R`, before any refinement.
    pub initial: RecoveryResult,
    /// After the refinements requested in the config.
    pub result: RecoveryResult,
    pub timings: PhaseTimings,
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Runs eigensolve, blockwise CPQR and recovery for `k` clusters, then the
/// refinements selected by `cfg.refine` (clusters first).
pub fn solve(
    a: &SparseBlockMatrix,
    k: usize,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    let d = a.d();
    let start = Instant::now();
    let basis = top_eigenpairs(a, k * d, &cfg.solver)?;
    let t_eigen = elapsed_ms(start);
    let (factors, t_cpqr, initial, t_recover) = factor_and_assign(&basis, d)?;

    let start = Instant::now();
    let mut result = initial.clone();
    if cfg.refine.clusters() {
        result = refine_clusters(&factors, &result, cfg.refine_fraction)?;
    }
    if cfg.refine.transforms() {
        result = refine_transforms(a, &result, &cfg.solver)?;
    }
    let t_refine = elapsed_ms(start);

    Ok(PipelineOutput {
        basis,
        factors,
        initial,
        result,
        timings: PhaseTimings {
            eigen_ms: t_eigen,
            cpqr_ms: t_cpqr,
            recover_ms: t_recover,
            refine_ms: t_refine,
        },
    })
}

/// CPQR of `Φᵀ` and the label/transform read-off, with their timings.
pub fn factor_and_assign(
    basis: &EigenBasis,
    d: usize,
) -> Result<(BlockCpqrFactors, f64, RecoveryResult, f64), PipelineError> {
    let start = Instant::now();
    let factors = blockwise_cpqr(&basis.vectors.transpose(), d)?;
    let t_cpqr = elapsed_ms(start);
    let start = Instant::now();
    let result = assign_and_extract(&factors);
    Ok((factors, t_cpqr, result, elapsed_ms(start)))
}
