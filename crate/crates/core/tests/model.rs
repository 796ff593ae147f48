mod common;

use common::{fixed_instance, random_params};
use dimsc::experiments::{block_memberships, connectivity_matrix, make_grid_params, sample_theta, ExperimentId, Overrides};
use dimsc::linalg::{truncated_svd, Matrix};
use dimsc::model::prune_isolated;
use dimsc::{population_matrix, sample_adjacency, scale_theta_for_pmax, Error, ModelParams};

/// `max_ij sum_kl theta_i Pi_r(i,k) P(k,l) Pi_c(j,l)` by direct enumeration.
fn max_probability(params: &ModelParams) -> f64 {
    let k = params.k;
    let mut max = f64::NEG_INFINITY;
    for i in 0..params.n_r() {
        for j in 0..params.n_c() {
            let mut s = 0.0;
            for a in 0..k {
                for b in 0..k {
                    s += params.pi_r[(i, a)] * params.p[(a, b)] * params.pi_c[(j, b)];
                }
            }
            max = max.max(params.theta_r[i] * s);
        }
    }
    max
}

#[test]
fn bernoulli_grand_mean_concentrates() {
    let omega = Matrix::from_element(200, 200, 0.3);
    let mut edges = 0usize;
    for seed in 0..50 {
        edges += sample_adjacency(&omega, seed).unwrap().nnz();
    }
    let draws = (200 * 200 * 50) as f64;
    let mean = edges as f64 / draws;
    let sd = (0.3f64 * 0.7 / draws).sqrt();
    assert!((mean - 0.3).abs() < 3.0 * sd, "mean {mean}");
}

#[test]
fn strong_off_diagonal_overflows_until_rescaled() {
    let n_r = 500;
    let params = ModelParams {
        k: 3,
        p: connectivity_matrix(4.0),
        pi_r: block_memberships(n_r, 80, false).unwrap(),
        pi_c: block_memberships(600, 80, false).unwrap(),
        theta_r: sample_theta(5.0, 1.0, n_r, 3),
    };
    let oracle = max_probability(&params);
    assert!(oracle > 1.0);
    match population_matrix(&params) {
        Err(Error::ProbabilityOverflow { value, .. }) => assert!(value > 1.0),
        other => panic!("expected overflow, got {other:?}"),
    }
    let scaled = scale_theta_for_pmax(&params).unwrap();
    assert!(max_probability(&scaled) <= 1.0);
    let omega = population_matrix(&scaled).unwrap();
    assert!((omega.max() - max_probability(&scaled)).abs() < 1e-12);

    let grid = make_grid_params(ExperimentId::Connectivity, 4.0, &Overrides::default(), 3).unwrap();
    assert!(max_probability(&grid) <= 1.0);
}

#[test]
fn pruning_matches_a_direct_scan() {
    let params = make_grid_params(ExperimentId::Sparsity, 0.2, &Overrides::default(), 11).unwrap();
    let omega = population_matrix(&params).unwrap();
    for seed in 0..5 {
        let a = sample_adjacency(&omega, seed).unwrap();
        let dense = a.to_dense();
        let live_rows: Vec<usize> = (0..dense.nrows()).filter(|&i| dense.row(i).sum() > 0.0).collect();
        let live_cols: Vec<usize> = (0..dense.ncols()).filter(|&j| dense.column(j).sum() > 0.0).collect();
        let pruned = prune_isolated(&a, &params.pi_r, &params.pi_c).unwrap();
        assert_eq!(pruned.kept_rows, live_rows);
        assert_eq!(pruned.kept_cols, live_cols);
        assert_eq!(pruned.pi_r.nrows(), live_rows.len());
        for (new, &old) in live_rows.iter().enumerate() {
            assert_eq!(pruned.row_map[old], Some(new));
            assert_eq!(pruned.pi_r.row(new), params.pi_r.row(old));
            assert_eq!(pruned.adjacency.row(new).len() as f64, live_cols.iter().map(|&j| dense[(old, j)]).sum::<f64>());
        }
    }
}

/// Largest and smallest eigenvalue of `Pi' Pi`.
fn gram_extremes(pi: &Matrix) -> (f64, f64) {
    let eig = (pi.transpose() * pi).symmetric_eigen().eigenvalues;
    (eig.max(), eig.min())
}

fn assert_norm_bounds(params: &ModelParams) {
    const TOL: f64 = 1e-9;
    let k = params.k as f64;
    let svd = truncated_svd(&population_matrix(params).unwrap(), params.k, 1e-10).unwrap();
    let t_max = params.theta_r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let t_min = params.theta_r.iter().copied().fold(f64::INFINITY, f64::min);
    let (l1, lk) = gram_extremes(&params.pi_r);
    let lower = t_min / (t_max * (k * l1).sqrt());
    let upper = t_max / (t_min * lk.sqrt());
    for i in 0..params.n_r() {
        let norm = svd.u.row(i).norm();
        assert!(lower - TOL <= norm && norm <= upper + TOL, "U row {i}: {lower} <= {norm} <= {upper}");
    }
    let (l1, lk) = gram_extremes(&params.pi_c);
    let lower = (1.0 / (k * l1)).sqrt();
    let upper = (1.0 / lk).sqrt();
    for j in 0..params.n_c() {
        let norm = svd.v.row(j).norm();
        assert!(lower - TOL <= norm && norm <= upper + TOL, "V row {j}: {lower} <= {norm} <= {upper}");
    }
}

#[test]
fn singular_vector_rows_respect_norm_bounds() {
    assert_norm_bounds(&fixed_instance());
    for seed in 0..20 {
        assert_norm_bounds(&random_params(seed));
    }
}
