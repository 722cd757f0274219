//! Reading cluster labels and transforms off the CPQR factor `R`, plus the
//! two optional refinements.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::cpqr::BlockCpqrFactors;
use crate::eigen::{restricted_top_eigenpairs, EigenError, SolverConfig};
use crate::linalg::{polar_factor, OrthogonalMatrix};
use crate::model::{members, SparseBlockMatrix};

/// Block columns with Frobenius norm below this are treated as zero.
pub const ZERO_COLUMN_TOL: f64 = 1e-12;

/// Default share of least-confident nodes revisited by [`refine_clusters`].
pub const DEFAULT_REFINE_FRACTION: f64 = 0.10;

#[derive(Debug, Error)]
pub enum RecoveryError {
    #[error("labels cover {labels} nodes, expected {expected}")]
    LabelCount { labels: usize, expected: usize },
    #[error("refinement fraction {0} outside [0, 1]")]
    Fraction(f64),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// Non-fatal conditions met while recovering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecoveryWarning {
    /// Block column of `R` vanished; the node got cluster 0, the identity
    /// and confidence 0.
    ZeroColumn(usize),
    /// The CPQR replaced a reflection by the identity.
    RankDeficient,
    /// Cluster refinement skipped cluster `k`: no members.
    EmptyCluster(usize),
    /// The observed graph of a cluster splits into several components, each
    /// synchronized separately.
    DisconnectedCluster { cluster: usize, components: usize },
}

impl RecoveryWarning {
    pub fn tag(&self) -> String {
        match self {
            Self::ZeroColumn(i) => format!("zero_column:{i}"),
            Self::RankDeficient => "rank_deficient".into(),
            Self::EmptyCluster(k) => format!("empty_cluster:{k}"),
            Self::DisconnectedCluster { cluster, components } => {
                format!("disconnected:{cluster}/{components}")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryResult {
    /// 0-based cluster index per node.
    pub labels: Vec<usize>,
    pub transforms: Vec<OrthogonalMatrix>,
    /// `max_k ‖R_{ki}‖_F / ‖R_{·i}‖_F`.
    pub confidence: Vec<f64>,
    pub k: usize,
    pub warnings: Vec<RecoveryWarning>,
}

impl RecoveryResult {
    pub fn rank_deficient(&self) -> bool {
        self.warnings.contains(&RecoveryWarning::RankDeficient)
    }

    pub fn clusters(&self) -> Vec<Vec<usize>> {
        members(&self.labels, self.k)
    }
}

/// `κ̂(i) = argmax_k ‖R_{ki}‖_F` (lowest `k` on ties) and `Ô_i = P(R_{κ̂(i),i})ᵀ`.
pub fn assign_and_extract(factors: &BlockCpqrFactors) -> RecoveryResult {
    let (k, n, d) = (factors.num_block_rows(), factors.num_nodes(), factors.d);
    let mut labels = Vec::with_capacity(n);
    let mut transforms = Vec::with_capacity(n);
    let mut confidence = Vec::with_capacity(n);
    let mut warnings = Vec::new();
    if factors.rank_deficient {
        warnings.push(RecoveryWarning::RankDeficient);
    }
    for i in 0..n {
        let total = factors.block_column(i).norm();
        if total < ZERO_COLUMN_TOL {
            labels.push(0);
            transforms.push(OrthogonalMatrix::identity(d));
            confidence.push(0.0);
            warnings.push(RecoveryWarning::ZeroColumn(i));
            continue;
        }
        let (best, best_norm) = (0..k)
            .map(|c| (c, factors.block(c, i).norm()))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let o = polar_factor(factors.block(best, i)).expect("R entries are finite");
        labels.push(best);
        transforms.push(o.transpose());
        confidence.push(best_norm / total);
    }
    RecoveryResult {
        labels,
        transforms,
        confidence,
        k,
        warnings,
    }
}

/// Nodes with the `⌊fraction·n⌉` lowest confidences (ties by index).
pub fn low_confidence_nodes(confidence: &[f64], fraction: f64) -> Vec<usize> {
    let count = ((fraction * confidence.len() as f64).round() as usize).min(confidence.len());
    let mut order: Vec<usize> = (0..confidence.len()).collect();
    order.sort_by(|&a, &b| confidence[a].total_cmp(&confidence[b]).then(a.cmp(&b)));
    order.truncate(count);
    order.sort_unstable();
    order
}

/// `(1/√|Ĉ_k|)·Σ_{j∈Ĉ_k} ‖R_{·i}ᵀ R_{·j}‖_F` for every cluster `k`.
pub fn cluster_similarity(factors: &BlockCpqrFactors, clusters: &[Vec<usize>], i: usize) -> Vec<f64> {
    let ri = factors.block_column(i);
    let mut prod = DMatrix::<f64>::zeros(factors.d, factors.d);
    clusters
        .iter()
        .map(|members| {
            if members.is_empty() {
                return f64::NEG_INFINITY;
            }
            let sum: f64 = members
                .iter()
                .map(|&j| {
                    prod.gemm_tr(1.0, &ri, &factors.block_column(j), 0.0);
                    prod.norm()
                })
                .sum();
            sum / (members.len() as f64).sqrt()
        })
        .collect()
}

/// Reassigns the least-confident `fraction` of nodes to the cluster of
/// highest average similarity. Clusters are frozen from `result` and all
/// reassignments are made at once. Transforms are left alone.
pub fn refine_clusters(
    factors: &BlockCpqrFactors,
    result: &RecoveryResult,
    fraction: f64,
) -> Result<RecoveryResult, RecoveryError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(RecoveryError::Fraction(fraction));
    }
    let n = factors.num_nodes();
    if result.labels.len() != n {
        return Err(RecoveryError::LabelCount {
            labels: result.labels.len(),
            expected: n,
        });
    }
    let clusters = result.clusters();
    let mut out = result.clone();
    for (c, m) in clusters.iter().enumerate() {
        if m.is_empty() {
            out.warnings.push(RecoveryWarning::EmptyCluster(c));
        }
    }
    for i in low_confidence_nodes(&result.confidence, fraction) {
        let sim = cluster_similarity(factors, &clusters, i);
        let best = sim
            .iter()
            .enumerate()
            .fold((result.labels[i], f64::NEG_INFINITY), |acc, (c, &s)| {
                if s > acc.1 {
                    (c, s)
                } else {
                    acc
                }
            })
            .0;
        out.labels[i] = best;
    }
    Ok(out)
}

/// Connected components of the observed graph restricted to `nodes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connectivity {
    pub connected: bool,
    /// Component index of `nodes[t]`.
    pub component_of: Vec<usize>,
    /// Members of each component (global node ids, ascending).
    pub components: Vec<Vec<usize>>,
}

/// Union-find over the stored blocks with both ends in `nodes`.
pub fn connectivity_check(a: &SparseBlockMatrix, nodes: &[usize]) -> Connectivity {
    let mut local = vec![usize::MAX; a.n()];
    for (t, &v) in nodes.iter().enumerate() {
        local[v] = t;
    }
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, j, _) in a.blocks() {
        let (li, lj) = (local[i], local[j]);
        if li == usize::MAX || lj == usize::MAX {
            continue;
        }
        let (ri, rj) = (find(&mut parent, li), find(&mut parent, lj));
        if ri != rj {
            parent[ri.max(rj)] = ri.min(rj);
        }
    }
    let mut root_index = vec![usize::MAX; nodes.len()];
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut component_of = Vec::with_capacity(nodes.len());
    for (t, &node) in nodes.iter().enumerate() {
        let r = find(&mut parent, t);
        if root_index[r] == usize::MAX {
            root_index[r] = components.len();
            components.push(Vec::new());
        }
        component_of.push(root_index[r]);
        components[root_index[r]].push(node);
    }
    for c in &mut components {
        c.sort_unstable();
    }
    Connectivity {
        connected: components.len() <= 1,
        component_of,
        components,
    }
}

/// Re-synchronizes each recovered cluster on its own: the top-`d`
/// eigenvectors `Φ⁽ᵏ⁾` of `A` restricted to the cluster give `Ô_i = P(Φ⁽ᵏ⁾_i)`.
/// Disconnected clusters are handled one component at a time.
pub fn refine_transforms(
    a: &SparseBlockMatrix,
    result: &RecoveryResult,
    cfg: &SolverConfig,
) -> Result<RecoveryResult, RecoveryError> {
    if result.labels.len() != a.n() {
        return Err(RecoveryError::LabelCount {
            labels: result.labels.len(),
            expected: a.n(),
        });
    }
    let d = a.d();
    let mut out = result.clone();
    for (c, cluster) in result.clusters().iter().enumerate() {
        if cluster.is_empty() {
            continue;
        }
        let conn = connectivity_check(a, cluster);
        if !conn.connected {
            out.warnings.push(RecoveryWarning::DisconnectedCluster {
                cluster: c,
                components: conn.components.len(),
            });
        }
        for component in &conn.components {
            let basis = restricted_top_eigenpairs(a, component, d, cfg)?;
            for (t, &node) in component.iter().enumerate() {
                let block = basis.vectors.view((t * d, 0), (d, d));
                out.transforms[node] = polar_factor(block).expect("eigenvectors are finite");
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factors_from_r(r: DMatrix<f64>, d: usize) -> BlockCpqrFactors {
        let n = r.ncols() / d;
        let kd = r.nrows();
        BlockCpqrFactors {
            q: DMatrix::identity(kd, kd),
            r,
            pivots: vec![],
            perm: (0..n).collect(),
            d,
            rank_deficient: false,
            round_residuals: vec![],
        }
    }

    #[test]
    fn hand_built_block_column() {
        // R_{0,0} = 2I, R_{1,0} = I
        let mut r = DMatrix::zeros(4, 2);
        r.view_mut((0, 0), (2, 2)).copy_from(&(DMatrix::identity(2, 2) * 2.0));
        r.view_mut((2, 0), (2, 2)).copy_from(&DMatrix::identity(2, 2));
        let res = assign_and_extract(&factors_from_r(r, 2));
        assert_eq!(res.labels, vec![0]);
        assert!((res.transforms[0].as_matrix() - DMatrix::identity(2, 2)).norm() < 1e-14);
        assert!((res.confidence[0] - 2.0 / 5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn zero_column_defaults() {
        let mut r = DMatrix::zeros(2, 2);
        r[(1, 0)] = 3.0;
        let res = assign_and_extract(&factors_from_r(r, 1));
        assert_eq!(res.labels, vec![1, 0]);
        assert_eq!(res.confidence[1], 0.0);
        assert!(res.warnings.contains(&RecoveryWarning::ZeroColumn(1)));
    }

    #[test]
    fn ties_break_to_lowest_cluster() {
        let r = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        assert_eq!(assign_and_extract(&factors_from_r(r, 1)).labels, vec![0]);
    }

    #[test]
    fn fraction_zero_is_noop() {
        let r = DMatrix::from_row_slice(2, 3, &[1.0, 0.6, 0.0, 0.0, 0.8, 1.0]);
        let f = factors_from_r(r, 1);
        let res = assign_and_extract(&f);
        let refined = refine_clusters(&f, &res, 0.0).unwrap();
        assert_eq!(refined.labels, res.labels);
        assert!(refine_clusters(&f, &res, 1.5).is_err());
    }

    #[test]
    fn low_confidence_selection() {
        let conf = [0.9, 0.5, 0.7, 0.5, 1.0];
        assert_eq!(low_confidence_nodes(&conf, 0.4), vec![1, 3]);
        assert_eq!(low_confidence_nodes(&conf, 0.0), Vec::<usize>::new());
        assert_eq!(low_confidence_nodes(&conf, 1.0).len(), 5);
    }

    #[test]
    fn connectivity_cases() {
        let one = || DMatrix::from_element(1, 1, 1.0);
        let a = SparseBlockMatrix::zeros(2, 1);
        let c = connectivity_check(&a, &[0, 1]);
        assert!(!c.connected);
        assert_eq!(c.components.len(), 2);

        // path 0-1-2-3-4 without the edge 1-2
        let a = SparseBlockMatrix::from_blocks(5, 1, [(0, 1, one()), (2, 3, one()), (3, 4, one())]).unwrap();
        let c = connectivity_check(&a, &[0, 1, 2, 3, 4]);
        let mut sizes: Vec<usize> = c.components.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 3]);
        assert_eq!(c.component_of[0], c.component_of[1]);
        assert_ne!(c.component_of[1], c.component_of[2]);

        let full = SparseBlockMatrix::from_blocks(
            3,
            1,
            [(0, 1, one()), (0, 2, one()), (1, 2, one())],
        )
        .unwrap();
        assert!(connectivity_check(&full, &[0, 1, 2]).connected);
        // restriction ignores edges leaving the subset
        assert!(!connectivity_check(&a, &[1, 2]).connected);
    }
}
