mod common;

use common::{fixed_instance, max_abs_diff, random_params};
use dimsc::estimator::{
    fit_ideal_equivalence, recover_col_memberships, recover_connectivity, recover_theta_corners, SVD_TOL,
};
use dimsc::experiments::geometry_demo_params;
use dimsc::linalg::{select_rows, truncated_svd, BinaryAdjacency, Matrix};
use dimsc::{
    fit_dimsc, fit_dimsc_equivalence, fit_ideal, mixed_hamming, population_matrix, sample_adjacency, validate,
    CornerIndexSet, ModelParams,
};

fn pure_index(pi: &Matrix) -> Vec<usize> {
    (0..pi.ncols())
        .map(|c| (0..pi.nrows()).find(|&i| pi[(i, c)] == 1.0).unwrap())
        .collect()
}

fn assert_exact(params: &ModelParams, tol: f64) {
    let omega = population_matrix(params).unwrap();
    let est = fit_ideal(&omega, params.k).unwrap();
    let (row, _) = mixed_hamming(&est.pi_r_hat, &params.pi_r).unwrap();
    let (col, _) = mixed_hamming(&est.pi_c_hat, &params.pi_c).unwrap();
    assert!(row < tol && col < tol, "row {row}, col {col}");
}

#[test]
fn geometry_demo_is_recovered_exactly() {
    let params = geometry_demo_params(42);
    assert!(validate(&params).is_valid());
    assert_exact(&params, 1e-6);
}

#[test]
fn random_valid_configurations_are_recovered_exactly() {
    for seed in 0..20 {
        let params = random_params(seed);
        assert!(validate(&params).is_valid(), "seed {seed}");
        assert_exact(&params, 1e-6);
    }
}

#[test]
fn ideal_theta_matches_generator() {
    let params = fixed_instance();
    let est = fit_ideal(&population_matrix(&params).unwrap(), 3).unwrap();
    for (hat, truth) in est.theta_r_hat.iter().zip(&params.theta_r) {
        assert!((hat - truth).abs() < 1e-8);
    }
}

#[test]
fn exact_column_corners_give_the_simplex_weights() {
    let params = fixed_instance();
    let svd = truncated_svd(&population_matrix(&params).unwrap(), 3, SVD_TOL).unwrap();
    let i_c = CornerIndexSet::new(pure_index(&params.pi_c), params.n_c()).unwrap();
    let rec = recover_col_memberships(&svd.v, &i_c).unwrap();
    // Corner k is the pure node of community k, so no relabeling is needed.
    assert!(max_abs_diff(&rec.pi_c_hat, &params.pi_c) < 1e-10);
}

#[test]
fn corner_degrees_match_generator() {
    let params = fixed_instance();
    let svd = truncated_svd(&population_matrix(&params).unwrap(), 3, SVD_TOL).unwrap();
    let i_r = pure_index(&params.pi_r);
    let sets = (
        CornerIndexSet::new(i_r.clone(), params.n_r()).unwrap(),
        CornerIndexSet::new(pure_index(&params.pi_c), params.n_c()).unwrap(),
    );
    let theta = recover_theta_corners(&svd.u, &svd.sigma, &svd.v, &sets.0, &sets.1);
    for (k, &i) in i_r.iter().enumerate() {
        assert!((theta[k] - params.theta_r[i]).abs() < 1e-8);
    }
}

#[test]
fn non_unit_diagonal_breaks_degree_recovery() {
    let mut params = fixed_instance();
    params.p[(1, 1)] = 0.9;
    assert!(!validate(&params).is_valid());
    let est = fit_ideal(&population_matrix(&params).unwrap(), 3).unwrap();
    let worst = est
        .theta_r_hat
        .iter()
        .zip(&params.theta_r)
        .map(|(h, t)| (h - t).abs())
        .fold(0.0, f64::max);
    assert!(worst > 1e-2, "theta error {worst}");
}

/// Degrees, both membership matrices and the connectivity matrix come back
/// from the population matrix alone, up to one community relabeling.
fn assert_round_trip(params: &ModelParams) {
    let omega = population_matrix(params).unwrap();
    let est = fit_ideal(&omega, params.k).unwrap();
    let svd = truncated_svd(&omega, params.k, SVD_TOL).unwrap();
    let p_hat = recover_connectivity(&svd.u, &svd.sigma, &svd.v, &est.i_r_hat, &est.i_c_hat);
    let (_, perm) = mixed_hamming(&est.pi_r_hat, &params.pi_r).unwrap();
    let k = params.k;
    let relabel = |m: &Matrix| Matrix::from_fn(m.nrows(), k, |i, b| m[(i, perm[b])]);
    assert!(max_abs_diff(&relabel(&est.pi_r_hat), &params.pi_r) < 1e-6);
    assert!(max_abs_diff(&relabel(&est.pi_c_hat), &params.pi_c) < 1e-6);
    let p_back = Matrix::from_fn(k, k, |a, b| p_hat[(perm[a], perm[b])]);
    assert!(max_abs_diff(&p_back, &params.p) < 1e-6, "{p_back} vs {}", params.p);
    for (hat, truth) in est.theta_r_hat.iter().zip(&params.theta_r) {
        assert!((hat - truth).abs() < 1e-6);
    }
}

#[test]
fn identifiability_round_trip() {
    assert_round_trip(&fixed_instance());
    for seed in 100..110 {
        assert_round_trip(&random_params(seed));
    }
}

#[test]
fn equivalent_pipeline_agrees_on_sampled_networks() {
    let params = fixed_instance();
    let omega = population_matrix(&params).unwrap();
    for seed in 0..5 {
        let a = sample_adjacency(&omega, seed).unwrap();
        let (one, two) = match (fit_dimsc(&a, 3, seed), fit_dimsc_equivalence(&a, 3, seed)) {
            (Ok(one), Ok(two)) => (one, two),
            (Err(e1), Err(e2)) => {
                assert_eq!(e1.to_string(), e2.to_string());
                continue;
            }
            other => panic!("pipelines disagree on failure: {other:?}"),
        };
        assert_eq!(one.i_r_hat, two.i_r_hat);
        assert_eq!(one.i_c_hat, two.i_c_hat);
        assert!(max_abs_diff(&one.pi_r_hat, &two.pi_r_hat) <= 1e-10);
        assert!(max_abs_diff(&one.pi_c_hat, &two.pi_c_hat) <= 1e-10);
    }
}

#[test]
fn equivalent_pipeline_is_exact_on_population_matrices() {
    for params in [fixed_instance(), random_params(7), random_params(8)] {
        let omega = population_matrix(&params).unwrap();
        let one = fit_ideal(&omega, params.k).unwrap();
        let two = fit_ideal_equivalence(&omega, params.k).unwrap();
        // Duplicate pure rows tie, so the two searches may label communities
        // differently.
        let (_, perm) = mixed_hamming(&two.pi_r_hat, &one.pi_r_hat).unwrap();
        let relabel = |m: &Matrix| Matrix::from_fn(m.nrows(), params.k, |i, b| m[(i, perm[b])]);
        assert!(max_abs_diff(&relabel(&two.pi_r_hat), &one.pi_r_hat) < 1e-8);
        assert!(max_abs_diff(&relabel(&two.pi_c_hat), &one.pi_c_hat) < 1e-8);
    }
}

#[test]
fn single_community_equivalence() {
    let omega = Matrix::from_element(4, 3, 0.5);
    let two = fit_ideal_equivalence(&omega, 1).unwrap();
    assert_eq!(two.pi_r_hat, Matrix::from_element(4, 1, 1.0));
    assert_eq!(two.pi_c_hat, Matrix::from_element(3, 1, 1.0));
}

#[test]
fn transposed_input_swaps_the_roles() {
    // Degrees sit on the row side only, so after transposing they move to the
    // column side. With constant degrees both sides swap cleanly.
    let mut params = fixed_instance();
    params.theta_r = vec![0.7; params.n_r()];
    let omega = population_matrix(&params).unwrap();
    let est = fit_ideal(&omega.transpose(), 3).unwrap();
    assert!(mixed_hamming(&est.pi_r_hat, &params.pi_c).unwrap().0 < 1e-8);
    assert!(mixed_hamming(&est.pi_c_hat, &params.pi_r).unwrap().0 < 1e-8);

    let a = sample_adjacency(&omega, 9).unwrap();
    let at = BinaryAdjacency::from_dense(&a.to_dense().transpose()).unwrap();
    assert_eq!(at, a.transpose());
    let est = fit_dimsc(&at, 3, 9).unwrap();
    assert_eq!(est.pi_r_hat.shape(), (params.n_c(), 3));
    assert_eq!(est.pi_c_hat.shape(), (params.n_r(), 3));
}
#[test]
fn row_relabeling_is_equivariant() {
    let params = fixed_instance();
    let n = params.n_r();
    let order: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
    let shuffled = ModelParams {
        pi_r: select_rows(&params.pi_r, &order),
        theta_r: order.iter().map(|&i| params.theta_r[i]).collect(),
        ..params.clone()
    };
    let base = fit_ideal(&population_matrix(&params).unwrap(), 3).unwrap();
    let moved = fit_ideal(&population_matrix(&shuffled).unwrap(), 3).unwrap();
    let expected = select_rows(&base.pi_r_hat, &order);
    let (_, perm) = mixed_hamming(&moved.pi_r_hat, &expected).unwrap();
    let aligned = Matrix::from_fn(n, 3, |i, b| moved.pi_r_hat[(i, perm[b])]);
    assert!(max_abs_diff(&aligned, &expected) < 1e-8);
}

#[test]
fn noiseless_block_network_is_recovered_exactly() {
    let n = 12;
    let pi = Matrix::from_fn(n, 2, |i, c| if (i < n / 2) == (c == 0) { 1.0 } else { 0.0 });
    let params = ModelParams {
        k: 2,
        p: Matrix::identity(2, 2),
        pi_r: pi.clone(),
        pi_c: pi,
        theta_r: vec![1.0; n],
    };
    let omega = population_matrix(&params).unwrap();
    let a = sample_adjacency(&omega, 3).unwrap();
    assert_eq!(a.to_dense(), omega);
    let est = fit_dimsc(&a, 2, 3).unwrap();
    assert_eq!(mixed_hamming(&est.pi_r_hat, &params.pi_r).unwrap().0, 0.0);
    assert_eq!(mixed_hamming(&est.pi_c_hat, &params.pi_c).unwrap().0, 0.0);
}
