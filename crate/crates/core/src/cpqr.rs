//! Blockwise column-pivoted QR: `X·(Π_n ⊗ I_d) = Q·R` where pivots are
//! whole `d`-column blocks chosen greedily by residual Frobenius norm.

use nalgebra::{DMatrix, DMatrixView};
use thiserror::Error;

use crate::linalg::{Householder, LinalgError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CpqrError {
    #[error("input contains NaN or infinite entries")]
    NonFinite,
    #[error("a {rows}x{cols} matrix cannot be split into {d}x{d} blocks")]
    Shape { rows: usize, cols: usize, d: usize },
    #[error("need at least as many block columns ({n}) as block rows ({k})")]
    TooFewColumns { k: usize, n: usize },
    #[error("not a permutation of 0..{0}")]
    BadPermutation(usize),
}

/// Output of [`blockwise_cpqr`].
#[derive(Debug, Clone)]
pub struct BlockCpqrFactors {
    /// `Kd × Kd` orthogonal.
    pub q: DMatrix<f64>,
    /// `Kd × nd`, stored permuted back (`R·Π_{nd}ᵀ`), so block column `j`
    /// belongs to node `j` and `Φᵀ = Q·r`.
    pub r: DMatrix<f64>,
    /// Node chosen as pivot in each of the `K` rounds.
    pub pivots: Vec<usize>,
    /// Block permutation: position `t` of the pivoted matrix holds node `perm[t]`.
    pub perm: Vec<usize>,
    pub d: usize,
    /// Some reflection had a vanishing input and was replaced by the identity.
    pub rank_deficient: bool,
    /// `round_residuals[t][j]`: residual norm of node `j` at round `t`
    /// (`None` for nodes already pivoted).
    pub round_residuals: Vec<Vec<Option<f64>>>,
}

impl BlockCpqrFactors {
    pub fn num_block_rows(&self) -> usize {
        self.q.nrows() / self.d
    }

    pub fn num_nodes(&self) -> usize {
        self.r.ncols() / self.d
    }

    /// Block `R_{k,i}` (`d × d`).
    pub fn block(&self, k: usize, i: usize) -> DMatrixView<'_, f64> {
        self.r.view((k * self.d, i * self.d), (self.d, self.d))
    }

    /// Block column `R_{·i}` (`Kd × d`).
    pub fn block_column(&self, i: usize) -> DMatrixView<'_, f64> {
        self.r.columns(i * self.d, self.d)
    }

    /// `R` in pivoted order; its leading `Kd × Kd` block is upper triangular.
    pub fn pivoted_r(&self) -> DMatrix<f64> {
        apply_block_permutation(&self.r, &self.perm, self.d).expect("perm is a permutation")
    }
}

/// Factors a `Kd × nd` matrix `x` with block width `d`.
///
/// Each of the `K` rounds recomputes the residual norm of every remaining
/// block column over rows `t·d..Kd`, swaps the largest (lowest index on
/// ties) into position `t` and triangularizes its `d` columns with
/// Householder reflections applied in their original order.
pub fn blockwise_cpqr(x: &DMatrix<f64>, d: usize) -> Result<BlockCpqrFactors, CpqrError> {
    let (rows, cols) = x.shape();
    if d == 0 || rows % d != 0 || cols % d != 0 || rows == 0 {
        return Err(CpqrError::Shape { rows, cols, d });
    }
    let (k, n) = (rows / d, cols / d);
    if n < k {
        return Err(CpqrError::TooFewColumns { k, n });
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(CpqrError::NonFinite);
    }

    let kd = rows;
    let mut r = x.clone();
    let mut q = DMatrix::<f64>::identity(kd, kd);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut pivots = Vec::with_capacity(k);
    let mut round_residuals = Vec::with_capacity(k);
    let mut rank_deficient = false;

    for t in 0..k {
        let top = t * d;
        let residuals: Vec<f64> = (t..n)
            .map(|j| r.view((top, j * d), (kd - top, d)).norm())
            .collect();
        let mut best = 0;
        for (off, &rho) in residuals.iter().enumerate() {
            if rho > residuals[best] {
                best = off;
            }
        }
        let mut by_node = vec![None; n];
        for (off, &rho) in residuals.iter().enumerate() {
            by_node[perm[t + off]] = Some(rho);
        }
        round_residuals.push(by_node);

        let jstar = t + best;
        if jstar != t {
            for c in 0..d {
                r.swap_columns(t * d + c, jstar * d + c);
            }
            perm.swap(t, jstar);
        }
        pivots.push(perm[t]);

        for c in 0..d {
            let l = top + c;
            let column: Vec<f64> = r.view((l, l), (kd - l, 1)).iter().copied().collect();
            match Householder::new(&column) {
                Ok(h) => {
                    h.apply_left(r.view_mut((l, l), (kd - l, cols - l)));
                    h.apply_right(q.view_mut((0, l), (kd, kd - l)));
                }
                Err(LinalgError::ZeroVector) => rank_deficient = true,
                Err(_) => return Err(CpqrError::NonFinite),
            }
        }
    }

    let r = apply_inverse_block_permutation(&r, &perm, d)?;
    Ok(BlockCpqrFactors {
        q,
        r,
        pivots,
        perm,
        d,
        rank_deficient,
        round_residuals,
    })
}

fn check_perm(perm: &[usize], n: usize) -> Result<(), CpqrError> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(CpqrError::BadPermutation(n));
    }
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(CpqrError::BadPermutation(n));
        }
    }
    Ok(())
}

/// Block column `t` of the output is block column `perm[t]` of `m`.
pub fn apply_block_permutation(
    m: &DMatrix<f64>,
    perm: &[usize],
    d: usize,
) -> Result<DMatrix<f64>, CpqrError> {
    let n = m.ncols() / d.max(1);
    if d == 0 || !m.ncols().is_multiple_of(d) {
        return Err(CpqrError::Shape {
            rows: m.nrows(),
            cols: m.ncols(),
            d,
        });
    }
    check_perm(perm, n)?;
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (t, &src) in perm.iter().enumerate() {
        out.columns_mut(t * d, d).copy_from(&m.columns(src * d, d));
    }
    Ok(out)
}

/// Inverse of [`apply_block_permutation`]: block column `perm[t]` of the
/// output is block column `t` of `m`.
pub fn apply_inverse_block_permutation(
    m: &DMatrix<f64>,
    perm: &[usize],
    d: usize,
) -> Result<DMatrix<f64>, CpqrError> {
    let n = m.ncols() / d.max(1);
    if d == 0 || !m.ncols().is_multiple_of(d) {
        return Err(CpqrError::Shape {
            rows: m.nrows(),
            cols: m.ncols(),
            d,
        });
    }
    check_perm(perm, n)?;
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (t, &dst) in perm.iter().enumerate() {
        out.columns_mut(dst * d, d).copy_from(&m.columns(t * d, d));
    }
    Ok(out)
}
