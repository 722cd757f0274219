//! Randomized property suites. Each runs [`CASES`] proptest cases and
//! reports the first failure as a message.

use std::fmt::Debug;

use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use clustersync::cpqr::{apply_block_permutation, apply_inverse_block_permutation, blockwise_cpqr};
use clustersync::harness::{run_sweep, write_csv, Mode, Range, SweepSpec};
use clustersync::linalg::{
    householder_reflector, orthogonality_defect, polar_decompose, sample_haar_orthogonal,
    Householder, OrthogonalMatrix, SquareMatrix,
};
use clustersync::metrics::{eta, exact_recovery, max_aligned_error};
use clustersync::model::{
    add_gaussian_noise, clean_observation, generate_ground_truth, generate_observation,
    GroundTruth, ModelParams,
};
use clustersync::pipeline::{solve, PipelineConfig, RefineMode};
use clustersync::recovery::{assign_and_extract, low_confidence_nodes, refine_clusters};
use clustersync::{top_eigenpairs, SolverConfig};

use super::oracle::{jacobi_eigen, projector_distance};

pub const CASES: u32 = 256;

fn check<S>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S: Strategy,
    S::Value: Debug,
{
    let mut runner = TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn orth(m: DMatrix<f64>) -> OrthogonalMatrix {
    OrthogonalMatrix::new(SquareMatrix::new(m).unwrap()).unwrap()
}

pub fn rotation(theta: f64) -> OrthogonalMatrix {
    orth(DMatrix::from_row_slice(
        2,
        2,
        &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()],
    ))
}

/// Random (cluster sizes, d, seed) with `n` in `2..=max_n`.
fn instance_shape(max_k: usize, max_d: usize, max_size: usize) -> impl Strategy<Value = (Vec<usize>, usize, u64)> {
    (
        prop::collection::vec(1..=max_size, 1..=max_k),
        1..=max_d,
        any::<u64>(),
    )
        .prop_filter("need two nodes", |(s, _, _)| s.iter().sum::<usize>() >= 2)
}

fn params(sizes: &[usize], d: usize, p: f64, q: f64, seed: u64) -> ModelParams {
    ModelParams {
        n: sizes.iter().sum(),
        k: sizes.len(),
        d,
        p,
        q,
        sizes: sizes.to_vec(),
        sigma: 0.0,
        seed,
    }
}

// ---- linalg ----

pub fn polar_orthogonality_and_reconstruction() -> Result<(), String> {
    check((1usize..=6, any::<u64>(), 0usize..4, -3.0..3.0f64), |(d, seed, zero_cols, log_scale)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = gaussian_matrix(d, d, &mut rng) * 10f64.powf(log_scale);
        for c in 0..zero_cols.min(d) {
            x.column_mut(c).fill(0.0);
        }
        let f = polar_decompose(&SquareMatrix::new(x.clone()).unwrap()).unwrap();
        let p = f.orthogonal.as_matrix();
        let w = f.psd.as_matrix();
        ensure(orthogonality_defect(p.as_view()) <= 1e-10, || "P not orthogonal".into())?;
        let rec = (p * w - &x).norm() / x.norm().max(1.0);
        ensure(rec <= 1e-8, || format!("reconstruction {rec:e}"))?;
        ensure((w - w.transpose()).norm() <= 1e-12 * w.norm().max(1.0), || "W not symmetric".into())?;
        let min_eig = w.clone().symmetric_eigen().eigenvalues.min();
        ensure(min_eig >= -1e-10 * w.norm().max(1.0), || format!("W has eigenvalue {min_eig}"))
    })
}

pub fn polar_minimizer() -> Result<(), String> {
    check((1usize..=5, any::<u64>()), |(d, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = gaussian_matrix(d, d, &mut rng);
        let p = polar_decompose(&SquareMatrix::new(x.clone()).unwrap()).unwrap().orthogonal;
        let best = (&x - p.as_matrix()).norm();
        for _ in 0..100 {
            let y = sample_haar_orthogonal(d, &mut rng);
            let other = (&x - y.as_matrix()).norm();
            ensure(best <= other + 1e-12, || format!("{best} > {other}"))?;
        }
        Ok(())
    })
}

pub fn householder_involution() -> Result<(), String> {
    check(prop::collection::vec(-100.0..100.0f64, 1..10), |x| {
        prop_assume!(x.iter().map(|v| v * v).sum::<f64>().sqrt() > 1e-6);
        let q = householder_reflector(&x).unwrap().into_inner();
        let m = q.nrows();
        ensure((&q - q.transpose()).norm() <= 1e-12, || "not symmetric".into())?;
        ensure((&q * &q - DMatrix::identity(m, m)).norm() <= 1e-12, || "Q² ≠ I".into())?;
        let h = Householder::new(&x).unwrap();
        let hx = &q * nalgebra::DVector::from_column_slice(&x);
        let scale = hx.norm();
        ensure((hx[0] - h.alpha()).abs() <= 1e-12 * scale, || "Hx₁ ≠ α".into())?;
        ensure(hx.rows(1, m - 1).norm() <= 1e-12 * scale, || "Hx not along e₁".into())
    })
}

pub fn haar_left_invariance() -> Result<(), String> {
    check((1usize..=4, any::<u64>()), |(d, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = gaussian_matrix(d, d, &mut rng);
        let l = clustersync::linalg::polar_factor(l.as_view()).unwrap();
        let draws = 10_000;
        let mut mean = DMatrix::<f64>::zeros(d, d);
        for _ in 0..draws {
            mean += l.as_matrix() * sample_haar_orthogonal(d, &mut rng).as_matrix();
        }
        mean /= draws as f64;
        let worst = mean.amax();
        ensure(worst < 0.05, || format!("entry mean {worst}"))
    })
}

// ---- model ----

pub fn observation_structure() -> Result<(), String> {
    check((instance_shape(4, 3, 8), 0.0..=1.0f64, 0.0..=1.0f64), |((sizes, d, seed), p, q)| {
        let pr = params(&sizes, d, p, q, seed);
        let gt = generate_ground_truth(&pr).unwrap();
        let a = generate_observation(&gt, p, q, seed);
        let dense = a.to_dense();
        ensure((&dense - dense.transpose()).norm() == 0.0, || "A not symmetric".into())?;
        for i in 0..pr.n {
            ensure(dense.view((i * d, i * d), (d, d)).norm() == 0.0, || format!("diagonal block {i}"))?;
        }
        for (i, j, b) in a.blocks() {
            ensure(orthogonality_defect(b) <= 1e-10, || format!("block ({i},{j}) not orthogonal"))?;
            if gt.labels[i] == gt.labels[j] {
                let expect = gt.transforms[i].as_matrix() * gt.transforms[j].as_matrix().transpose();
                ensure((b - expect).norm() <= 1e-14, || format!("block ({i},{j}) ≠ O_i O_jᵀ"))?;
            }
        }
        Ok(())
    })
}

pub fn observation_reproducible() -> Result<(), String> {
    check((instance_shape(3, 3, 10), 0.0..=1.0f64, 0.0..=1.0f64, 0.0..2.0f64), |((sizes, d, seed), p, q, sigma)| {
        let pr = params(&sizes, d, p, q, seed);
        let gt = generate_ground_truth(&pr).unwrap();
        let a = add_gaussian_noise(&generate_observation(&gt, p, q, seed), sigma, seed);
        let gt2 = generate_ground_truth(&pr).unwrap();
        let b = add_gaussian_noise(&generate_observation(&gt2, p, q, seed), sigma, seed);
        ensure(a == b, || "different matrices for one seed".into())?;
        ensure(gt.labels == gt2.labels, || "different labels".into())
    })
}

pub fn full_probability_is_clean() -> Result<(), String> {
    check(instance_shape(4, 3, 8), |(sizes, d, seed)| {
        let gt = generate_ground_truth(&params(&sizes, d, 1.0, 0.0, seed)).unwrap();
        let a = generate_observation(&gt, 1.0, 0.0, seed);
        ensure(a == clean_observation(&gt), || "p=1, q=0 differs from the clean matrix".into())
    })
}

// ---- eigensolver ----

pub fn eigen_matches_dense() -> Result<(), String> {
    let shape = instance_shape(3, 3, 10).prop_filter("n·d ≤ 60", |(s, d, _)| s.iter().sum::<usize>() * d <= 60);
    check((shape, 0.2..=1.0f64, 0.0..=0.5f64), |((sizes, d, seed), p, q)| {
        let pr = params(&sizes, d, p, q, seed);
        let gt = generate_ground_truth(&pr).unwrap();
        let a = generate_observation(&gt, p, q, seed);
        let kd = sizes.len() * d;
        let basis = top_eigenpairs(&a, kd, &SolverConfig::default().with_seed(seed))
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        let (vals, vecs) = jacobi_eigen(&a.to_dense());
        let scale = vals[0].abs().max(1.0);
        for (x, y) in basis.values.iter().zip(&vals) {
            ensure((x - y).abs() <= 1e-6 * scale, || format!("eigenvalue {x} vs {y}"))?;
        }
        let gap = if kd < vals.len() { vals[kd - 1] - vals[kd] } else { f64::INFINITY };
        if gap > 0.05 * scale {
            let dist = projector_distance(&basis.vectors, &vecs.columns(0, kd).into_owned());
            ensure(dist <= 1e-6, || format!("projector distance {dist:e} (gap {gap})"))?;
        }
        Ok(())
    })
}

// ---- blockwise CPQR ----

fn cpqr_input() -> impl Strategy<Value = (usize, usize, usize, u64, bool)> {
    (1usize..=4, 1usize..=3, 0usize..=6, any::<u64>(), any::<bool>())
}

fn make_input(k: usize, d: usize, extra: usize, seed: u64, deficient: bool) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = k + extra;
    if deficient {
        // rank below K·d: a thin product plus a zeroed block column
        let r = (k * d).saturating_sub(1).max(1);
        let mut x = gaussian_matrix(k * d, r, &mut rng) * gaussian_matrix(r, n * d, &mut rng);
        x.columns_mut(0, d).fill(0.0);
        x
    } else {
        gaussian_matrix(k * d, n * d, &mut rng)
    }
}

pub fn cpqr_reconstruction() -> Result<(), String> {
    check(cpqr_input(), |(k, d, extra, seed, deficient)| {
        let x = make_input(k, d, extra, seed, deficient);
        let f = blockwise_cpqr(&x, d).unwrap();
        let err = (&f.q * &f.r - &x).norm();
        ensure(err <= 1e-8 * x.norm().max(f64::MIN_POSITIVE), || format!("reconstruction {err:e}"))?;
        ensure(orthogonality_defect(f.q.as_view()) <= 1e-10, || "Q not orthogonal".into())?;
        let rp = f.pivoted_r();
        for c in 0..k * d {
            for r in c + 1..k * d {
                ensure(rp[(r, c)].abs() <= 1e-12 * x.norm().max(1.0), || format!("R[{r},{c}] below diagonal"))?;
            }
        }
        Ok(())
    })
}

pub fn cpqr_block_structure() -> Result<(), String> {
    let perm = (1usize..=4, 1usize..=8).prop_flat_map(|(d, n)| {
        (Just(d), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
    });
    check(perm, |(d, perm)| {
        let n = perm.len();
        let tagged = DMatrix::from_fn(2, n * d, |r, c| (c + 1000 * r) as f64);
        let moved = apply_block_permutation(&tagged, &perm, d).unwrap();
        for (t, &src) in perm.iter().enumerate() {
            for c in 0..d {
                ensure(moved[(0, t * d + c)] == (src * d + c) as f64, || "column order within block lost".into())?;
            }
        }
        let back = apply_inverse_block_permutation(&moved, &perm, d).unwrap();
        ensure(back == tagged, || "round trip failed".into())
    })
}

pub fn cpqr_pivot_monotonicity() -> Result<(), String> {
    check(cpqr_input(), |(k, d, extra, seed, deficient)| {
        let x = make_input(k, d, extra, seed, deficient);
        let f = blockwise_cpqr(&x, d).unwrap();
        for (t, round) in f.round_residuals.iter().enumerate() {
            let chosen = round[f.pivots[t]].expect("pivot has a residual");
            for rho in round.iter().flatten() {
                ensure(chosen >= *rho, || format!("round {t}: pivot {chosen} < {rho}"))?;
            }
        }
        Ok(())
    })
}

pub fn cpqr_orthogonal_invariance() -> Result<(), String> {
    check((1usize..=4, 1usize..=3, 0usize..=6, any::<u64>()), |(k, d, extra, seed)| {
        let x = make_input(k, d, extra, seed, false);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let l = sample_haar_orthogonal(k * d, &mut rng);
        let f = blockwise_cpqr(&x, d).unwrap();
        let g = blockwise_cpqr(&(l.as_matrix() * &x), d).unwrap();
        ensure(f.pivots == g.pivots, || format!("pivots {:?} vs {:?}", f.pivots, g.pivots))?;
        // R' = D·R with D orthogonal block diagonal ⇔ equal Gram per block row
        for b in 0..k {
            let rf = f.r.rows(b * d, d);
            let rg = g.r.rows(b * d, d);
            let diff = (rf.transpose() * rf - rg.transpose() * rg).norm();
            ensure(diff <= 1e-8 * x.norm_squared().max(1.0), || format!("block row {b}: {diff:e}"))?;
        }
        Ok(())
    })
}

// ---- recovery ----

pub fn label_permutation_equivariance() -> Result<(), String> {
    let input = (2usize..=4, 1usize..=3, 0usize..=8, any::<u64>())
        .prop_flat_map(|(k, d, extra, seed)| {
            (Just((k, d, extra, seed)), Just((0..k).collect::<Vec<_>>()).prop_shuffle())
        });
    check(input, |((k, d, extra, seed), sigma)| {
        let x = make_input(k, d, extra, seed, false);
        let f = blockwise_cpqr(&x, d).unwrap();
        let base = assign_and_extract(&f);
        let mut g = f.clone();
        for (old, &new) in sigma.iter().enumerate() {
            g.r.rows_mut(new * d, d).copy_from(&f.r.rows(old * d, d));
            g.q.columns_mut(new * d, d).copy_from(&f.q.columns(old * d, d));
        }
        let moved = assign_and_extract(&g);
        for i in 0..base.labels.len() {
            ensure(moved.labels[i] == sigma[base.labels[i]], || format!("node {i} not relabelled"))?;
        }
        ensure(exact_recovery(&moved.labels, &base.labels), || "partition changed".into())
    })
}

pub fn clean_case_gauge() -> Result<(), String> {
    check((prop::collection::vec(2usize..=10, 1..=3), 1usize..=3, any::<u64>()), |(sizes, d, seed)| {
        let gt = generate_ground_truth(&params(&sizes, d, 1.0, 0.0, seed)).unwrap();
        let a = clean_observation(&gt);
        let out = solve(&a, sizes.len(), &PipelineConfig::default())
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
        ensure(exact_recovery(&out.result.labels, &gt.labels), || "clusters not recovered".into())?;
        let err = max_aligned_error(&out.result.transforms, &gt);
        ensure(err <= 1e-8, || format!("per-cluster gauge residual {err:e}"))
    })
}

pub fn refine_clusters_touches_only_low_confidence() -> Result<(), String> {
    check((2usize..=4, 1usize..=3, 0usize..=20, any::<u64>(), 0.0..=1.0f64), |(k, d, extra, seed, fraction)| {
        let x = make_input(k, d, extra, seed, false);
        let f = blockwise_cpqr(&x, d).unwrap();
        let base = assign_and_extract(&f);
        let out = refine_clusters(&f, &base, fraction).unwrap();
        let s = low_confidence_nodes(&base.confidence, fraction);
        for i in 0..base.labels.len() {
            if !s.contains(&i) {
                ensure(out.labels[i] == base.labels[i], || format!("node {i} outside S changed"))?;
            }
        }
        Ok(())
    })
}

pub fn outputs_are_orthogonal() -> Result<(), String> {
    check((instance_shape(3, 3, 10), 0.0..=1.0f64, 0.0..=1.0f64, 0.0..3.0f64, 0usize..4), |((sizes, d, seed), p, q, sigma, refine)| {
        let k = sizes.len();
        let gt = generate_ground_truth(&params(&sizes, d, p, q, seed)).unwrap();
        let a = add_gaussian_noise(&generate_observation(&gt, p, q, seed), sigma, seed);
        let cfg = PipelineConfig {
            refine: [RefineMode::None, RefineMode::Clusters, RefineMode::Transforms, RefineMode::Both][refine],
            ..Default::default()
        };
        let out = solve(&a, k, &cfg).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for (i, o) in out.result.transforms.iter().enumerate() {
            ensure(orthogonality_defect(o.as_matrix().as_view()) <= 1e-8, || format!("Ô_{i} not orthogonal"))?;
        }
        Ok(())
    })
}

// ---- metrics ----

pub fn exact_recovery_invariance() -> Result<(), String> {
    let input = (1usize..=30, 1usize..=5).prop_flat_map(|(n, k)| {
        (
            prop::collection::vec(0..k, n),
            prop::collection::vec(0..k, n),
            Just((0..k).collect::<Vec<_>>()).prop_shuffle(),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            any::<bool>(),
        )
    });
    check(input, |(est, truth, sigma, perm, same)| {
        let est = if same { truth.iter().map(|&l| sigma[l]).collect() } else { est };
        let base = exact_recovery(&est, &truth);
        let relabelled: Vec<usize> = est.iter().map(|&l| sigma[l]).collect();
        ensure(exact_recovery(&relabelled, &truth) == base, || "cluster relabelling changed result".into())?;
        let mut pe = vec![0; est.len()];
        let mut pt = vec![0; est.len()];
        for (i, &to) in perm.iter().enumerate() {
            pe[to] = est[i];
            pt[to] = truth[i];
        }
        ensure(exact_recovery(&pe, &pt) == base, || "node permutation changed result".into())?;
        if same {
            ensure(base, || "relabelled truth not recognized".into())?;
        }
        Ok(())
    })
}

fn random_truth(sizes: &[usize], d: usize, rng: &mut ChaCha8Rng) -> GroundTruth {
    let labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(k, &m)| std::iter::repeat_n(k, m)).collect();
    let transforms = labels.iter().map(|_| sample_haar_orthogonal(d, rng)).collect();
    GroundTruth::new(sizes.len(), d, labels, transforms).unwrap()
}

pub fn sync_error_gauge_invariance() -> Result<(), String> {
    check((instance_shape(4, 4, 8), any::<u64>()), |((sizes, d, seed), seed2)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ seed2);
        let gt = random_truth(&sizes, d, &mut rng);
        let est: Vec<OrthogonalMatrix> = (0..gt.n).map(|_| sample_haar_orthogonal(d, &mut rng)).collect();
        let gauges: Vec<OrthogonalMatrix> = sizes.iter().map(|_| sample_haar_orthogonal(d, &mut rng)).collect();
        let moved: Vec<OrthogonalMatrix> = est
            .iter()
            .zip(&gt.labels)
            .map(|(o, &k)| orth(o.as_matrix() * gauges[k].as_matrix()))
            .collect();
        let (e0, e1) = (max_aligned_error(&est, &gt), max_aligned_error(&moved, &gt));
        ensure((e0 - e1).abs() <= 1e-9, || format!("{e0} vs {e1}"))
    })
}

pub fn sync_error_monotone() -> Result<(), String> {
    check((2usize..=10, any::<u64>(), 0.0..3.0f64, 0.0..3.0f64), |(m, seed, a, b)| {
        prop_assume!((a - b).abs() > 1e-6);
        let (t1, t2) = (a.min(b), a.max(b));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gt = random_truth(&[m], 2, &mut rng);
        let with = |theta: f64| -> Vec<OrthogonalMatrix> {
            let mut est = gt.transforms.clone();
            est[0] = orth(est[0].as_matrix() * rotation(theta).as_matrix());
            est
        };
        let (e1, e2) = (max_aligned_error(&with(t1), &gt), max_aligned_error(&with(t2), &gt));
        ensure(e2 >= e1 - 1e-12, || format!("θ {t1} → {e1}, θ {t2} → {e2}"))
    })
}

pub fn eta_decreasing_in_p() -> Result<(), String> {
    check((2usize..100_000, 1usize..=20, 0.0..=1.0f64), |(n, d, q)| {
        let vals: Vec<f64> = [0.2, 0.4, 0.6, 0.8].iter().map(|&p| eta(n, p, q, d).unwrap()).collect();
        ensure(vals.windows(2).all(|w| w[0] > w[1]), || format!("{vals:?}"))
    })
}

// ---- determinism ----

pub fn pipeline_determinism() -> Result<(), String> {
    check((instance_shape(3, 3, 10), 0.0..=1.0f64, 0.0..=1.0f64, 0.0..1.0f64), |((sizes, d, seed), p, q, sigma)| {
        let run = || {
            let gt = generate_ground_truth(&params(&sizes, d, p, q, seed)).unwrap();
            let a = add_gaussian_noise(&generate_observation(&gt, p, q, seed), sigma, seed);
            let cfg = PipelineConfig {
                solver: SolverConfig::default().with_seed(seed),
                refine: RefineMode::Both,
                ..Default::default()
            };
            solve(&a, sizes.len(), &cfg).map(|o| {
                let bits: Vec<u64> = o
                    .result
                    .transforms
                    .iter()
                    .flat_map(|t| t.as_matrix().iter().map(|v| v.to_bits()).collect::<Vec<_>>())
                    .collect();
                (o.result.labels, bits, o.basis.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>())
            })
            .map_err(|e| e.to_string())
        };
        ensure(run() == run(), || "two runs differ".into())
    })
}

pub fn sweep_independent_of_workers() -> Result<(), String> {
    check((any::<u64>(), 16usize..=40, 1usize..=2), |(seed, n, trials)| {
        let mut spec = SweepSpec::new(Mode::Grid, n);
        spec.alpha = Some(Range::new(1.0, 4.0, 2));
        spec.beta = Some(Range::single(0.5));
        spec.trials = trials;
        spec.seed = seed;
        let csv = |workers: usize| {
            let mut s = spec.clone();
            s.workers = workers;
            let mut buf = Vec::new();
            write_csv(&mut buf, &run_sweep(&s).unwrap(), false).unwrap();
            buf
        };
        let one = csv(1);
        ensure(one == csv(3), || "CSV depends on worker count".into())
    })
}

pub type Suite = fn() -> Result<(), String>;

/// Every suite with its name, in a stable order.
pub const SUITES: &[(&str, Suite)] = &[
    ("polar: orthogonality and reconstruction", polar_orthogonality_and_reconstruction),
    ("polar: closest orthogonal matrix", polar_minimizer),
    ("householder: symmetric involution", householder_involution),
    ("haar: left invariance", haar_left_invariance),
    ("model: block structure", observation_structure),
    ("model: reproducible", observation_reproducible),
    ("model: p=1 q=0 is clean", full_probability_is_clean),
    ("eigen: dense agreement", eigen_matches_dense),
    ("cpqr: reconstruction", cpqr_reconstruction),
    ("cpqr: block structure", cpqr_block_structure),
    ("cpqr: pivot monotonicity", cpqr_pivot_monotonicity),
    ("cpqr: orthogonal invariance", cpqr_orthogonal_invariance),
    ("recovery: label permutation", label_permutation_equivariance),
    ("recovery: clean gauge", clean_case_gauge),
    ("recovery: refinement scope", refine_clusters_touches_only_low_confidence),
    ("recovery: orthogonal outputs", outputs_are_orthogonal),
    ("metrics: partition invariance", exact_recovery_invariance),
    ("metrics: gauge invariance", sync_error_gauge_invariance),
    ("metrics: monotone error", sync_error_monotone),
    ("metrics: eta decreasing", eta_decreasing_in_p),
    ("determinism: pipeline", pipeline_determinism),
    ("determinism: sweep workers", sweep_independent_of_workers),
];
