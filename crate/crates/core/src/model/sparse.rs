use nalgebra::{DMatrix, DMatrixView};

use super::ModelError;

/// Symmetric `n × n` block matrix with `d × d` blocks, stored by block.
///
/// Only blocks `(i, j)` with `i < j` are kept; block `(j, i)` reads back as
/// the transpose and diagonal blocks are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseBlockMatrix {
    n: usize,
    d: usize,
    pairs: Vec<(u32, u32)>,
    // column-major d·d entries per stored pair, in `pairs` order
    data: Vec<f64>,
}

impl SparseBlockMatrix {
    pub fn zeros(n: usize, d: usize) -> Self {
        assert!(d >= 1, "block dimension must be positive");
        Self {
            n,
            d,
            pairs: Vec::new(),
            data: Vec::new(),
        }
    }

    /// Builds from `(i, j, block)` triples in any order. A triple with
    /// `i > j` is stored transposed as `(j, i)`.
    pub fn from_blocks<I>(n: usize, d: usize, blocks: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (usize, usize, DMatrix<f64>)>,
    {
        let mut b = SparseBlockBuilder::new(n, d);
        for (i, j, m) in blocks {
            if m.nrows() != d || m.ncols() != d {
                return Err(ModelError::BlockShape {
                    expected: d,
                    rows: m.nrows(),
                    cols: m.ncols(),
                });
            }
            if i == j {
                return Err(ModelError::DiagonalBlock(i));
            }
            if i >= n || j >= n {
                return Err(ModelError::BlockIndex { i, j, n });
            }
            if i < j {
                b.push(i, j, m.as_slice());
            } else {
                b.push(j, i, m.transpose().as_slice());
            }
        }
        b.finish()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Side length `n·d` of the full matrix.
    pub fn dim(&self) -> usize {
        self.n * self.d
    }

    pub fn num_blocks(&self) -> usize {
        self.pairs.len()
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        self.pairs.binary_search(&(i as u32, j as u32)).ok()
    }

    fn raw(&self, k: usize) -> &[f64] {
        let dd = self.d * self.d;
        &self.data[k * dd..(k + 1) * dd]
    }

    fn view(&self, k: usize) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(self.raw(k), self.d, self.d)
    }

    /// Block `(i, j)`, or `None` when it is not stored (zero).
    pub fn block(&self, i: usize, j: usize) -> Option<DMatrix<f64>> {
        if i < j {
            self.position(i, j).map(|k| self.view(k).into_owned())
        } else if i > j {
            self.position(j, i).map(|k| self.view(k).transpose())
        } else {
            None
        }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        i != j && self.position(a, b).is_some()
    }

    /// Stored upper-triangle blocks `(i, j, A_ij)` with `i < j`, sorted.
    pub fn blocks(&self) -> impl Iterator<Item = (usize, usize, DMatrixView<'_, f64>)> + '_ {
        self.pairs
            .iter()
            .enumerate()
            .map(move |(k, &(i, j))| (i as usize, j as usize, self.view(k)))
    }

    /// `A·X` for an `n·d × b` matrix `X`; one pass over the stored blocks.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.dim(), "operand has wrong row count");
        let d = self.d;
        let mut y = DMatrix::zeros(x.nrows(), x.ncols());
        for (i, j, b) in self.blocks() {
            y.rows_mut(i * d, d).gemm(1.0, &b, &x.rows(j * d, d), 1.0);
            y.rows_mut(j * d, d).gemm_tr(1.0, &b, &x.rows(i * d, d), 1.0);
        }
        y
    }

    /// Principal block submatrix on `nodes`; node `nodes[t]` becomes `t`.
    pub fn restrict(&self, nodes: &[usize]) -> SparseBlockMatrix {
        let mut local = vec![usize::MAX; self.n];
        for (t, &v) in nodes.iter().enumerate() {
            local[v] = t;
        }
        let mut b = SparseBlockBuilder::new(nodes.len(), self.d);
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            let (li, lj) = (local[i as usize], local[j as usize]);
            if li == usize::MAX || lj == usize::MAX {
                continue;
            }
            if li < lj {
                b.push(li, lj, self.raw(k));
            } else {
                b.push(lj, li, self.view(k).transpose().as_slice());
            }
        }
        b.finish().expect("restriction of a valid matrix is valid")
    }

    /// Relabels nodes: node `i` of `self` becomes node `perm[i]`.
    pub fn permute_nodes(&self, perm: &[usize]) -> SparseBlockMatrix {
        assert_eq!(perm.len(), self.n);
        let mut b = SparseBlockBuilder::new(self.n, self.d);
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            let (pi, pj) = (perm[i as usize], perm[j as usize]);
            if pi < pj {
                b.push(pi, pj, self.raw(k));
            } else {
                b.push(pj, pi, self.view(k).transpose().as_slice());
            }
        }
        b.finish().expect("permutation of a valid matrix is valid")
    }

    /// Materializes the full `n·d × n·d` matrix. Meant for tests and small
    /// diagnostics; the solvers never call this.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.d;
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (i, j, b) in self.blocks() {
            m.view_mut((i * d, j * d), (d, d)).copy_from(&b);
            m.view_mut((j * d, i * d), (d, d)).copy_from(&b.transpose());
        }
        m
    }
}

/// Accumulates blocks; sorts and checks for duplicates on `finish`.
pub(crate) struct SparseBlockBuilder {
    n: usize,
    d: usize,
    pairs: Vec<(u32, u32)>,
    data: Vec<f64>,
}

impl SparseBlockBuilder {
    pub(crate) fn new(n: usize, d: usize) -> Self {
        assert!(d >= 1, "block dimension must be positive");
        Self {
            n,
            d,
            pairs: Vec::new(),
            data: Vec::new(),
        }
    }

    /// `block` holds column-major entries of `A_ij`, `i < j`.
    pub(crate) fn push(&mut self, i: usize, j: usize, block: &[f64]) {
        debug_assert!(i < j && j < self.n);
        debug_assert_eq!(block.len(), self.d * self.d);
        self.pairs.push((i as u32, j as u32));
        self.data.extend_from_slice(block);
    }

    pub(crate) fn finish(self) -> Result<SparseBlockMatrix, ModelError> {
        let Self { n, d, pairs, data } = self;
        let sorted = pairs.windows(2).all(|w| w[0] < w[1]);
        let (pairs, data) = if sorted {
            (pairs, data)
        } else {
            let dd = d * d;
            let mut order: Vec<usize> = (0..pairs.len()).collect();
            order.sort_by_key(|&k| pairs[k]);
            let mut sorted_pairs = Vec::with_capacity(pairs.len());
            let mut sorted_data = Vec::with_capacity(data.len());
            for k in order {
                if sorted_pairs.last() == Some(&pairs[k]) {
                    let (i, j) = pairs[k];
                    return Err(ModelError::DuplicateBlock(i as usize, j as usize));
                }
                sorted_pairs.push(pairs[k]);
                sorted_data.extend_from_slice(&data[k * dd..(k + 1) * dd]);
            }
            (sorted_pairs, sorted_data)
        };
        Ok(SparseBlockMatrix { n, d, pairs, data })
    }
}
