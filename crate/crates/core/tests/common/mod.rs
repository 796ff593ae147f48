#![allow(dead_code)]

#[allow(unused_imports)]
pub use dimsc::experiments::random_params;
use dimsc::experiments::{block_memberships, sample_theta, DEFAULT_P};
use dimsc::{Matrix, ModelParams};

/// Small valid instance shared by the oracle tests.
pub fn fixed_instance() -> ModelParams {
    ModelParams {
        k: 3,
        p: Matrix::from_fn(3, 3, |a, b| DEFAULT_P[a][b]),
        pi_r: block_memberships(60, 8, false).unwrap(),
        pi_c: block_memberships(50, 8, true).unwrap(),
        theta_r: sample_theta(5.0, 1.0, 60, 2024),
    }
}

/// Full SVD by one-sided Jacobi rotations, singular values descending.
/// Returns `(U, sigma, V)` with `U` m x r, `V` n x r, r = min(m, n).
pub fn jacobi_svd(a: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    if a.nrows() < a.ncols() {
        let (u, s, v) = jacobi_svd(&a.transpose());
        return (v, s, u);
    }
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = Matrix::identity(n, n);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = w.column(p).norm_squared();
                let beta: f64 = w.column(q).norm_squared();
                let gamma: f64 = w.column(p).dot(&w.column(q));
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * x - s * y;
                    w[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let u = Matrix::from_fn(m, n, |i, c| {
        let j = order[c];
        if norms[j] > 0.0 {
            w[(i, j)] / norms[j]
        } else {
            0.0
        }
    });
    let v = Matrix::from_fn(n, n, |i, c| v[(i, order[c])]);
    (u, sigma, v)
}

/// Flips column pairs so the first left entry above 1e-12 in magnitude is positive.
pub fn canonical_signs(u: &mut Matrix, v: &mut Matrix) {
    for c in 0..u.ncols() {
        if let Some(x) = u.column(c).iter().find(|x| x.abs() > 1e-12) {
            if *x < 0.0 {
                u.column_mut(c).neg_mut();
                v.column_mut(c).neg_mut();
            }
        }
    }
}

/// All permutations of 0..k in lexicographic order.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..k {
        for rest in permutations(k - 1) {
            let mut p = vec![first];
            p.extend(rest.into_iter().map(|x| if x >= first { x + 1 } else { x }));
            out.push(p);
        }
    }
    out
}

/// Largest row-wise l1 error of `hat` against `truth` under the best column
/// permutation, found by enumeration.
pub fn max_row_error_up_to_perm(hat: &Matrix, truth: &Matrix) -> f64 {
    permutations(truth.ncols())
        .into_iter()
        .map(|perm| {
            (0..truth.nrows())
                .map(|i| (0..truth.ncols()).map(|b| (hat[(i, perm[b])] - truth[(i, b)]).abs()).sum::<f64>())
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Entrywise maximum absolute difference.
pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).abs().max()
}
