//! Synthetic instances: ground truth, the random observation matrix, the
//! clean observation matrix and the additive Gaussian noise variant.

mod sparse;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{sample_haar_orthogonal, OrthogonalMatrix};
use crate::rng::{pair_key, stream, Domain};

pub(crate) use sparse::SparseBlockBuilder;
pub use sparse::SparseBlockMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("block has shape {rows}x{cols}, expected {expected}x{expected}")]
    BlockShape {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("diagonal block ({0}, {0}) must be zero and cannot be stored")]
    DiagonalBlock(usize),
    #[error("block index ({i}, {j}) out of range for n = {n}")]
    BlockIndex { i: usize, j: usize, n: usize },
    #[error("block ({0}, {1}) given twice")]
    DuplicateBlock(usize, usize),
}

/// Parameters of the block model.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    /// Within-cluster edge probability.
    pub p: f64,
    /// Cross-cluster edge probability.
    pub q: f64,
    pub sizes: Vec<usize>,
    /// Standard deviation of the additive Gaussian noise; 0 disables it.
    pub sigma: f64,
    pub seed: u64,
}

impl ModelParams {
    /// `k` clusters of (nearly) equal size; the first `n mod k` get one extra node.
    pub fn equal_sizes(n: usize, k: usize, d: usize, p: f64, q: f64, seed: u64) -> Self {
        Self {
            n,
            k,
            d,
            p,
            q,
            sizes: equal_split(n, k),
            sigma: 0.0,
            seed,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidParams(msg));
        if self.k == 0 {
            return bad("K must be at least 1".into());
        }
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        if self.sizes.len() != self.k {
            return bad(format!("{} cluster sizes given for K = {}", self.sizes.len(), self.k));
        }
        if self.sizes.contains(&0) {
            return bad("every cluster needs at least one node".into());
        }
        if self.sizes.iter().sum::<usize>() != self.n {
            return bad(format!("cluster sizes sum to {}, not n = {}", self.sizes.iter().sum::<usize>(), self.n));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p = {} outside [0, 1]", self.p));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return bad(format!("q = {} outside [0, 1]", self.q));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma = {} must be finite and >= 0", self.sigma));
        }
        if self.n > u32::MAX as usize {
            return bad("n does not fit in 32 bits".into());
        }
        Ok(())
    }
}

pub fn equal_split(n: usize, k: usize) -> Vec<usize> {
    if k == 0 {
        return Vec::new();
    }
    (0..k).map(|c| n / k + usize::from(c < n % k)).collect()
}

/// Cluster labels and true transforms. Labels are 0-based cluster indices.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub labels: Vec<usize>,
    pub transforms: Vec<OrthogonalMatrix>,
    pub sizes: Vec<usize>,
}

impl GroundTruth {
    /// Checks labels against sizes and transform shapes.
    pub fn new(
        k: usize,
        d: usize,
        labels: Vec<usize>,
        transforms: Vec<OrthogonalMatrix>,
    ) -> Result<Self, ModelError> {
        let n = labels.len();
        if transforms.len() != n {
            return Err(ModelError::InvalidParams(format!(
                "{} transforms for {} labels",
                transforms.len(),
                n
            )));
        }
        if transforms.iter().any(|t| t.dim() != d) {
            return Err(ModelError::InvalidParams(format!("transform not {d}x{d}")));
        }
        let mut sizes = vec![0; k];
        for &l in &labels {
            if l >= k {
                return Err(ModelError::InvalidParams(format!("label {l} >= K = {k}")));
            }
            sizes[l] += 1;
        }
        if sizes.contains(&0) {
            return Err(ModelError::InvalidParams("a cluster has no members".into()));
        }
        Ok(Self {
            n,
            k,
            d,
            labels,
            transforms,
            sizes,
        })
    }

    /// Members of each cluster, in increasing node order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        members(&self.labels, self.k)
    }

    /// Relabels nodes: node `i` becomes node `perm[i]`.
    pub fn permute_nodes(&self, perm: &[usize]) -> GroundTruth {
        assert_eq!(perm.len(), self.n);
        let mut labels = vec![0; self.n];
        let mut transforms = vec![OrthogonalMatrix::identity(self.d); self.n];
        for (i, &pi) in perm.iter().enumerate() {
            labels[pi] = self.labels[i];
            transforms[pi] = self.transforms[i].clone();
        }
        GroundTruth {
            labels,
            transforms,
            ..self.clone()
        }
    }
}

pub(crate) fn members(labels: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        if l < k {
            out[l].push(i);
        }
    }
    out
}

/// Contiguous labels (the first `sizes[0]` nodes form cluster 0, …) and
/// i.i.d. Haar transforms drawn from `params.seed`.
pub fn generate_ground_truth(params: &ModelParams) -> Result<GroundTruth, ModelError> {
    params.validate()?;
    let labels: Vec<usize> = params
        .sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &m)| std::iter::repeat_n(c, m))
        .collect();
    let transforms = (0..params.n)
        .map(|i| sample_haar_orthogonal(params.d, &mut stream(params.seed, Domain::Transforms, i as u64)))
        .collect();
    Ok(GroundTruth {
        n: params.n,
        k: params.k,
        d: params.d,
        labels,
        transforms,
        sizes: params.sizes.clone(),
    })
}

/// Random observation matrix: each pair `i < j` is observed independently,
/// carrying `O_i O_jᵀ` within a cluster (probability `p`) and a Haar-random
/// transform across clusters (probability `q`).
pub fn generate_observation(gt: &GroundTruth, p: f64, q: f64, seed: u64) -> SparseBlockMatrix {
    let mut b = SparseBlockBuilder::new(gt.n, gt.d);
    for i in 0..gt.n {
        for j in (i + 1)..gt.n {
            let mut rng = stream(seed, Domain::Edges, pair_key(i, j));
            let u: f64 = rng.random();
            if gt.labels[i] == gt.labels[j] {
                if u < p {
                    let block = gt.transforms[i].as_matrix() * gt.transforms[j].as_matrix().transpose();
                    b.push(i, j, block.as_slice());
                }
            } else if u < q {
                let block = sample_haar_orthogonal(gt.d, &mut rng);
                b.push(i, j, block.as_matrix().as_slice());
            }
        }
    }
    b.finish().expect("blocks are generated in sorted order")
}

/// `A_ij = O_i O_jᵀ` for every same-cluster pair, zero otherwise.
pub fn clean_observation(gt: &GroundTruth) -> SparseBlockMatrix {
    let mut b = SparseBlockBuilder::new(gt.n, gt.d);
    for i in 0..gt.n {
        for j in (i + 1)..gt.n {
            if gt.labels[i] == gt.labels[j] {
                let block = gt.transforms[i].as_matrix() * gt.transforms[j].as_matrix().transpose();
                b.push(i, j, block.as_slice());
            }
        }
    }
    b.finish().expect("blocks are generated in sorted order")
}

/// `Ã_ij = A_ij + W_ij` for every pair `i < j`, observed or not, with
/// `W_ij` entries i.i.d. `N(0, σ²)` and `W_ji = W_ijᵀ`. The result stores all
/// `n(n−1)/2` upper blocks. `sigma = 0` returns the input unchanged.
pub fn add_gaussian_noise(a: &SparseBlockMatrix, sigma: f64, seed: u64) -> SparseBlockMatrix {
    assert!(sigma >= 0.0 && sigma.is_finite(), "sigma must be finite and >= 0");
    if sigma == 0.0 {
        return a.clone();
    }
    let (n, d) = (a.n(), a.d());
    let mut existing = a.blocks().peekable();
    let mut b = SparseBlockBuilder::new(n, d);
    let mut block = DMatrix::<f64>::zeros(d, d);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut rng = stream(seed, Domain::Noise, pair_key(i, j));
            block.iter_mut().for_each(|v| *v = sigma * rng.sample::<f64, _>(StandardNormal));
            if let Some((_, _, obs)) = existing.next_if(|&(bi, bj, _)| (bi, bj) == (i, j)) {
                block += obs;
            }
            b.push(i, j, block.as_slice());
        }
    }
    b.finish().expect("blocks are generated in sorted order")
}

/// Draws a uniformly random relabeling of `n` nodes.
pub fn random_node_permutation(n: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream(seed, Domain::Permutation, 0));
    perm
}
