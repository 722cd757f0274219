//! Small dense kernels: polar decomposition, Householder reflectors,
//! Haar-distributed orthogonal sampling and a few norms.

use std::fmt;

use nalgebra::{DMatrix, DMatrixView, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Fixed numerical tolerances shared across the crate.
pub mod tol {
    /// Relative Frobenius bound on `‖P·W − X‖ / max(1, ‖X‖)`.
    pub const RECONSTRUCTION: f64 = 1e-8;
    /// Frobenius bound on `‖QᵀQ − I‖` for matrices claimed orthogonal.
    pub const ORTHOGONALITY: f64 = 1e-10;
    /// Bound on reflector symmetry/involution and the zeroed tail of `Q·x`.
    pub const REFLECTOR: f64 = 1e-12;
    /// Below this norm a Householder input is treated as the zero vector.
    pub const ZERO_VECTOR: f64 = 1e-14;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("matrix must be square with dimension >= 1, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("householder input has norm below {}", tol::ZERO_VECTOR)]
    ZeroVector,
    #[error("matrix is not orthogonal: ‖QᵀQ − I‖_F = {defect:.3e}")]
    NotOrthogonal { defect: f64 },
}

/// A `d × d` real matrix with finite entries, `d ≥ 1`.
#[derive(Clone, PartialEq)]
pub struct SquareMatrix(DMatrix<f64>);

impl SquareMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self, LinalgError> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(LinalgError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if !is_finite(&m) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self(m))
    }

    /// Builds from entries listed row by row.
    pub fn from_row_slice(dim: usize, entries: &[f64]) -> Result<Self, LinalgError> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(LinalgError::NotSquare {
                rows: dim,
                cols: entries.len().checked_div(dim).unwrap_or(0),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        Self(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<f64> {
        self.0.transpose().as_slice().to_vec()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SquareMatrix{}", self.0)
    }
}

/// An element of `O(d)`: `QᵀQ = I` to within [`tol::ORTHOGONALITY`].
#[derive(Clone, PartialEq)]
pub struct OrthogonalMatrix(SquareMatrix);

impl OrthogonalMatrix {
    pub fn new(m: SquareMatrix) -> Result<Self, LinalgError> {
        let defect = orthogonality_defect(m.as_matrix().as_view());
        if defect > tol::ORTHOGONALITY {
            return Err(LinalgError::NotOrthogonal { defect });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix the caller has constructed to be orthogonal (a polar
    /// factor, a product of reflectors) without re-checking it.
    pub(crate) fn new_unchecked(m: DMatrix<f64>) -> Self {
        debug_assert!(m.nrows() == m.ncols() && m.nrows() > 0);
        Self(SquareMatrix(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(SquareMatrix::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        self.0.as_matrix()
    }

    pub fn as_square(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0.into_inner()
    }

    pub fn transpose(&self) -> Self {
        Self::new_unchecked(self.as_matrix().transpose())
    }

    pub fn determinant(&self) -> f64 {
        self.as_matrix().determinant()
    }
}

impl fmt::Debug for OrthogonalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OrthogonalMatrix{}", self.as_matrix())
    }
}

/// `X = orthogonal · psd`.
#[derive(Debug, Clone)]
pub struct PolarFactors {
    pub orthogonal: OrthogonalMatrix,
    pub psd: SquareMatrix,
}

/// Polar decomposition through the SVD `X = UΣVᵀ`: `P = UVᵀ`, `W = VΣVᵀ`.
///
/// For rank-deficient input `P` is one valid choice among many; the
/// factorization `P·W = X` still holds.
pub fn polar_decompose(x: &SquareMatrix) -> Result<PolarFactors, LinalgError> {
    let (orthogonal, psd) = polar_parts(x.as_matrix().as_view())?;
    Ok(PolarFactors {
        orthogonal: OrthogonalMatrix::new_unchecked(orthogonal),
        psd: SquareMatrix(psd),
    })
}

/// Just the orthogonal polar factor `P(X)` of a square view.
pub fn polar_factor(x: DMatrixView<'_, f64>) -> Result<OrthogonalMatrix, LinalgError> {
    if x.nrows() != x.ncols() || x.nrows() == 0 {
        return Err(LinalgError::NotSquare {
            rows: x.nrows(),
            cols: x.ncols(),
        });
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let svd = x.into_owned().svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    Ok(OrthogonalMatrix::new_unchecked(u * v_t))
}

fn polar_parts(x: DMatrixView<'_, f64>) -> Result<(DMatrix<f64>, DMatrix<f64>), LinalgError> {
    if !x.iter().all(|v| v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let svd = x.into_owned().svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let sigma = DMatrix::from_diagonal(&svd.singular_values);
    let psd = v_t.transpose() * sigma * &v_t;
    // exact symmetry; rounding in the triple product leaves ~1e-16 skew
    let psd = (&psd + psd.transpose()) * 0.5;
    Ok((u * v_t, psd))
}

/// Draws from the Haar measure on `O(d)`.
///
/// A Gaussian matrix is QR-factored and `Q` is right-multiplied by the signs
/// of `diag(R)`, which removes the bias of the Householder sign convention.
pub fn sample_haar_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> OrthogonalMatrix {
    assert!(d >= 1, "dimension must be positive");
    if d == 1 {
        let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return OrthogonalMatrix::new_unchecked(DMatrix::from_element(1, 1, s));
    }
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        if r[(j, j)] < 0.0 {
            col.neg_mut();
        }
    }
    OrthogonalMatrix::new_unchecked(q)
}

/// The reflector `I − 2vvᵀ` of Householder's construction, kept in vector form.
#[derive(Debug, Clone)]
pub struct Householder {
    v: DVector<f64>,
    alpha: f64,
}

impl Householder {
    /// `α = −sign(x₁)‖x‖` with `sign(0) = +1`, `v = (x − αe₁)/‖x − αe₁‖`.
    pub fn new(x: &[f64]) -> Result<Self, LinalgError> {
        if x.is_empty() {
            return Err(LinalgError::ZeroVector);
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < tol::ZERO_VECTOR {
            return Err(LinalgError::ZeroVector);
        }
        let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
        let alpha = -sign * norm;
        let mut u = DVector::from_column_slice(x);
        u[0] -= alpha;
        // |u₀| = |x₀| + ‖x‖ ≥ ‖x‖, so the normalization never divides by zero
        let u_norm = u.norm();
        u /= u_norm;
        Ok(Self { v: u, alpha })
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// The value `Q·x = α·e₁` lands on.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.v.len();
        DMatrix::identity(n, n) - (&self.v * self.v.transpose()) * 2.0
    }

    /// `M ← (I − 2vvᵀ)·M` for `M` with `len()` rows.
    pub fn apply_left(&self, mut m: nalgebra::DMatrixViewMut<'_, f64>) {
        debug_assert_eq!(m.nrows(), self.v.len());
        let w = m.tr_mul(&self.v); // Mᵀv
        m.ger(-2.0, &self.v, &w, 1.0);
    }

    /// `M ← M·(I − 2vvᵀ)` for `M` with `len()` columns.
    pub fn apply_right(&self, mut m: nalgebra::DMatrixViewMut<'_, f64>) {
        debug_assert_eq!(m.ncols(), self.v.len());
        let w = &m * &self.v;
        m.ger(-2.0, &w, &self.v, 1.0);
    }
}

/// Explicit Householder matrix for `x`; symmetric and orthogonal.
pub fn householder_reflector(x: &[f64]) -> Result<SquareMatrix, LinalgError> {
    Householder::new(x).map(|h| SquareMatrix(h.to_matrix()))
}

/// `‖MᵀM − I‖_F`.
pub fn orthogonality_defect(m: DMatrixView<'_, f64>) -> f64 {
    let gram = m.tr_mul(&m);
    (gram - DMatrix::identity(m.ncols(), m.ncols())).norm()
}

pub fn is_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}
