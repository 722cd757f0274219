//! Top algebraic eigenpairs of a symmetric block-sparse matrix.
//!
//! Thick-restart block Lanczos with full reorthogonalization. The matrix is
//! touched only through block products `A·X`; the working basis holds at
//! most `4·block_size` columns (or `k + block_size` when that is larger).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::model::SparseBlockMatrix;
use crate::rng::{stream, Domain};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    /// Bound on `‖AΦ − ΦΛ‖_F` relative to the largest Ritz value magnitude.
    pub tolerance: f64,
    /// Cap on block matrix products.
    pub max_iterations: usize,
    /// Block width; `None` uses the number of requested eigenpairs.
    pub block_size: Option<usize>,
    /// Seed of the starting block.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 5000,
            block_size: None,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Orthonormal eigenvectors (columns) with eigenvalues in non-increasing order.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    pub vectors: DMatrix<f64>,
    pub values: Vec<f64>,
    /// Achieved `‖AΦ − ΦΛ‖_F`.
    pub residual: f64,
    /// `|λ_k − λ_{k+1}| < 1e-10·|λ₁|`: the returned subspace is not unique.
    pub degenerate_gap: bool,
    /// Block products spent.
    pub iterations: usize,
}

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("requested {k} eigenpairs of a {dim}x{dim} matrix")]
    InvalidCount { k: usize, dim: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("node subset is empty")]
    EmptyNodeSet,
    #[error("node index {0} out of range")]
    NodeIndex(usize),
    #[error("no convergence after {} block products (residual {:.3e})", best.iterations, best.residual)]
    NoConvergence { best: Box<EigenBasis> },
}

/// Anything that can multiply an `n × b` block of vectors.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
}

impl SymmetricOperator for SparseBlockMatrix {
    fn dim(&self) -> usize {
        SparseBlockMatrix::dim(self)
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.mul_dense(x)
    }
}

/// The `k` eigenpairs of `a` with the largest algebraic eigenvalues.
pub fn top_eigenpairs(
    a: &SparseBlockMatrix,
    k: usize,
    cfg: &SolverConfig,
) -> Result<EigenBasis, EigenError> {
    lanczos(a, k, cfg)
}

/// [`top_eigenpairs`] of the principal block submatrix on `nodes`; row block
/// `t` of the result belongs to `nodes[t]`.
pub fn restricted_top_eigenpairs(
    a: &SparseBlockMatrix,
    nodes: &[usize],
    k: usize,
    cfg: &SolverConfig,
) -> Result<EigenBasis, EigenError> {
    if nodes.is_empty() {
        return Err(EigenError::EmptyNodeSet);
    }
    if let Some(&bad) = nodes.iter().find(|&&v| v >= a.n()) {
        return Err(EigenError::NodeIndex(bad));
    }
    lanczos(&a.restrict(nodes), k, cfg)
}

struct Basis {
    v: DMatrix<f64>,
    av: DMatrix<f64>,
    cols: usize,
}

/// Block Lanczos driver over any symmetric operator.
pub fn lanczos<A: SymmetricOperator + ?Sized>(
    a: &A,
    k: usize,
    cfg: &SolverConfig,
) -> Result<EigenBasis, EigenError> {
    let dim = a.dim();
    if k == 0 || k > dim {
        return Err(EigenError::InvalidCount { k, dim });
    }
    if cfg.tolerance.is_nan() || cfg.tolerance <= 0.0 {
        return Err(EigenError::InvalidConfig("tolerance must be positive"));
    }
    if cfg.max_iterations == 0 {
        return Err(EigenError::InvalidConfig("max_iterations must be at least 1"));
    }
    let b = cfg.block_size.unwrap_or(k).clamp(1, dim);
    let capacity = (4 * b).max(k + b).min(dim);
    let keep_target = k + (b / 2).max(1);

    let mut rng = stream(cfg.seed, Domain::SolverStart, 0);
    let mut basis = Basis {
        v: DMatrix::zeros(dim, capacity),
        av: DMatrix::zeros(dim, capacity),
        cols: 0,
    };
    let mut products = 0usize;

    let start = DMatrix::<f64>::from_fn(dim, b.min(capacity), |_, _| rng.sample(StandardNormal));
    let mut last = append_block(a, &mut basis, start, &mut rng, &mut products);

    loop {
        // at least k + 1 columns are needed before a Rayleigh-Ritz step
        while basis.cols < capacity && (products < cfg.max_iterations || basis.cols <= k) {
            let width = b.min(capacity - basis.cols);
            let mut w = basis.av.columns(last.0, last.1).into_owned();
            if w.ncols() > width {
                w = w.columns(0, width).into_owned();
            }
            last = append_block(a, &mut basis, w, &mut rng, &mut products);
        }

        let ritz = rayleigh_ritz(&basis);
        let (values, vectors, residual) = ritz.top(&basis, k);
        let scale = ritz.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let degenerate_gap = basis.cols > k
            && (ritz.values[k - 1] - ritz.values[k]).abs() < 1e-10 * ritz.values[0].abs();
        let result = EigenBasis {
            vectors,
            values,
            residual,
            degenerate_gap,
            iterations: products,
        };
        if residual <= cfg.tolerance * scale || residual == 0.0 || basis.cols == dim {
            return Ok(result);
        }
        if products >= cfg.max_iterations {
            return Err(EigenError::NoConvergence {
                best: Box::new(result),
            });
        }

        // Thick restart: keep the leading Ritz vectors, continue from the
        // dominant directions of their residuals.
        let keep = keep_target.min(capacity - b).max(k);
        let s = ritz.vectors.columns(0, keep);
        let v_new = basis.v.columns(0, basis.cols) * s;
        let av_new = basis.av.columns(0, basis.cols) * s;
        let theta = DMatrix::from_diagonal(&DVector::from_column_slice(&ritz.values[..keep]));
        let resid = &av_new - &v_new * theta;
        basis.v.columns_mut(0, keep).copy_from(&v_new);
        basis.av.columns_mut(0, keep).copy_from(&av_new);
        basis.cols = keep;

        let width = b.min(capacity - basis.cols);
        let next = dominant_directions(&basis, resid, width);
        last = append_block(a, &mut basis, next, &mut rng, &mut products);
    }
}

struct Ritz {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl Ritz {
    /// Leading `k` Ritz pairs and their Frobenius residual.
    fn top(&self, basis: &Basis, k: usize) -> (Vec<f64>, DMatrix<f64>, f64) {
        let s = self.vectors.columns(0, k);
        let y = basis.v.columns(0, basis.cols) * s;
        let ay = basis.av.columns(0, basis.cols) * s;
        let theta = DMatrix::from_diagonal(&DVector::from_column_slice(&self.values[..k]));
        let r = ay - &y * theta;
        (self.values[..k].to_vec(), y, r.norm())
    }
}

fn rayleigh_ritz(basis: &Basis) -> Ritz {
    let v = basis.v.columns(0, basis.cols);
    let av = basis.av.columns(0, basis.cols);
    let t = v.tr_mul(&av);
    let t = (&t + t.transpose()) * 0.5;
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..basis.cols).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    Ritz { values, vectors }
}

/// Projects `r` off the basis and returns its `width` strongest directions.
fn dominant_directions(basis: &Basis, mut r: DMatrix<f64>, width: usize) -> DMatrix<f64> {
    project_out(basis, &mut r);
    project_out(basis, &mut r);
    if r.ncols() <= width {
        return r;
    }
    let gram = r.tr_mul(&r);
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..r.ncols()).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let u = DMatrix::from_columns(
        &order[..width]
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    r * u
}

fn project_out(basis: &Basis, w: &mut DMatrix<f64>) {
    if basis.cols == 0 {
        return;
    }
    let v = basis.v.columns(0, basis.cols);
    let coeffs = v.tr_mul(w);
    w.gemm(-1.0, &v, &coeffs, 1.0);
}

/// Orthonormalizes `w` against the basis and itself, appends the result and
/// its image under `a`. Columns that collapse are replaced by random
/// directions. Returns the `(start, width)` column range appended.
fn append_block<A: SymmetricOperator + ?Sized, R: Rng>(
    a: &A,
    basis: &mut Basis,
    mut w: DMatrix<f64>,
    rng: &mut R,
    products: &mut usize,
) -> (usize, usize) {
    let dim = basis.v.nrows();
    let start = basis.cols;
    let width = w.ncols().min(basis.v.ncols() - start);
    project_out(basis, &mut w);
    project_out(basis, &mut w);
    let mut accepted = 0;
    for c in 0..width {
        let mut col = w.column(c).into_owned();
        let original = col.norm();
        let mut attempts = 0;
        loop {
            for _ in 0..2 {
                for t in 0..(start + accepted) {
                    let vt = basis.v.column(t);
                    let h = vt.dot(&col);
                    col.axpy(-h, &vt, 1.0);
                }
            }
            let norm = col.norm();
            if norm > 1e-10 * original.max(f64::MIN_POSITIVE) && norm > 1e-300 {
                col /= norm;
                break;
            }
            attempts += 1;
            assert!(attempts < 16, "failed to extend a basis of {} vectors in dimension {dim}", start + accepted);
            col = DVector::from_fn(dim, |_, _| rng.sample(StandardNormal));
            let fresh = col.norm();
            col /= fresh;
        }
        basis.v.set_column(start + accepted, &col);
        accepted += 1;
    }
    let block = basis.v.columns(start, accepted).into_owned();
    let image = a.apply(&block);
    basis.av.columns_mut(start, accepted).copy_from(&image);
    basis.cols += accepted;
    *products += 1;
    (start, accepted)
}
