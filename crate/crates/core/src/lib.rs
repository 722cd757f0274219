//! Joint community detection and orthogonal group synchronization.
//!
//! Given an `n × n` symmetric block matrix whose `d × d` blocks carry
//! observed pairwise orthogonal transforms, the pipeline recovers a cluster
//! label and an orthogonal transform for every node:
//!
//! 1. [`eigen::top_eigenpairs`] computes the top `K·d` eigenvectors `Φ`.
//! 2. [`cpqr::blockwise_cpqr`] factors `Φᵀ` with block column pivoting.
//! 3. [`recovery::assign_and_extract`] reads labels and transforms off `R`,
//!    optionally followed by [`recovery::refine_clusters`] and
//!    [`recovery::refine_transforms`].
//!
//! [`model`] generates synthetic instances, [`metrics`] scores them and
//! [`harness`] drives parameter sweeps and runtime benchmarks.

pub mod cpqr;
pub mod eigen;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod recovery;
pub mod rng;

pub use cpqr::{blockwise_cpqr, BlockCpqrFactors};
pub use eigen::{top_eigenpairs, EigenBasis, SolverConfig};
pub use linalg::{OrthogonalMatrix, PolarFactors, SquareMatrix};
pub use model::{GroundTruth, ModelParams, SparseBlockMatrix};
pub use pipeline::{solve, PipelineConfig, PipelineOutput, RefineMode};
pub use recovery::RecoveryResult;
