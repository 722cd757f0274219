//! Reference implementations that share no code path with the library.

use nalgebra::DMatrix;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenvalues come
/// back in descending order with matching eigenvector columns.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// `‖UUᵀ − VVᵀ‖_F` for matrices with orthonormal columns.
pub fn projector_distance(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    (u * u.transpose() - v * v.transpose()).norm()
}

/// Pivot order of scalar column-pivoted QR (Golub–Businger), computed by
/// Gram–Schmidt deflation: each round picks the remaining column with the
/// largest norm (lowest index on ties) and projects it out of the rest.
pub fn golub_businger_pivots(x: &DMatrix<f64>) -> Vec<usize> {
    let (k, n) = x.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| x.column(j).iter().copied().collect()).collect();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut taken = vec![false; n];
    let mut pivots = Vec::with_capacity(k);
    for _ in 0..k.min(n) {
        let mut best: Option<usize> = None;
        for j in 0..n {
            if taken[j] {
                continue;
            }
            if best.is_none_or(|b| norm(&cols[j]) > norm(&cols[b])) {
                best = Some(j);
            }
        }
        let b = best.unwrap();
        taken[b] = true;
        pivots.push(b);
        let nb = norm(&cols[b]);
        if nb == 0.0 {
            continue;
        }
        let u: Vec<f64> = cols[b].iter().map(|a| a / nb).collect();
        for j in 0..n {
            if taken[j] {
                continue;
            }
            // projected twice for orthogonality to working precision
            for _ in 0..2 {
                let dot: f64 = u.iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                for (c, ui) in cols[j].iter_mut().zip(&u) {
                    *c -= dot * ui;
                }
            }
        }
    }
    pivots
}

/// Orthogonal polar factor by the Newton iteration `X ← (X + X⁻ᵀ)/2`.
/// Requires a nonsingular input.
pub fn newton_polar(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut y = x.clone();
    for _ in 0..200 {
        let inv_t = y.clone().try_inverse().expect("nonsingular input").transpose();
        let next = (&y + inv_t) * 0.5;
        let step = (&next - &y).norm();
        y = next;
        if step <= 1e-15 * y.norm() {
            break;
        }
    }
    y
}
