mod common;

use common::permutations;
use dimsc::experiments::{make_grid_params, ExperimentId, Overrides};
use dimsc::linalg::{truncated_svd, truncated_svd_with, Matrix, SvdMethod};
use dimsc::metrics::{min_cost_assignment, mixed_hamming_with, AssignmentMethod};
use dimsc::{align_permutation, mixed_hamming, population_matrix, sample_adjacency, subspace_deviation};
use proptest::prelude::*;

fn pmf_rows(k: usize, n: usize, data: &[f64]) -> Matrix {
    let mut m = Matrix::from_row_slice(n, k, &data[..n * k]);
    for mut row in m.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    m
}

fn pmf_strategy() -> impl Strategy<Value = (Matrix, Matrix, Vec<usize>)> {
    (2usize..7, 1usize..25).prop_flat_map(|(k, n)| {
        (
            proptest::collection::vec(0.01f64..1.0, n * k),
            proptest::collection::vec(0.01f64..1.0, n * k),
            Just((0..k).collect::<Vec<_>>()).prop_shuffle(),
        )
            .prop_map(move |(a, b, perm)| (pmf_rows(k, n, &a), pmf_rows(k, n, &b), perm))
    })
}

fn permute_columns(m: &Matrix, perm: &[usize]) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, perm[j])])
}

/// `min over permutations of sum_b |hat(:, p[b]) - truth(:, b)|_1 / n`.
fn enumerated(hat: &Matrix, truth: &Matrix) -> f64 {
    permutations(truth.ncols())
        .into_iter()
        .map(|p| {
            (0..truth.ncols())
                .map(|b| (0..truth.nrows()).map(|i| (hat[(i, p[b])] - truth[(i, b)]).abs()).sum::<f64>())
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
        / truth.nrows() as f64
}

proptest! {
    #[test]
    fn matches_enumeration_oracle((hat, truth, _) in pmf_strategy()) {
        let (value, perm) = mixed_hamming(&hat, &truth).unwrap();
        prop_assert!((value - enumerated(&hat, &truth)).abs() < 1e-12);
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..truth.ncols()).collect::<Vec<_>>());
    }

    #[test]
    fn invariant_to_column_relabeling((hat, truth, perm) in pmf_strategy()) {
        let base = mixed_hamming(&hat, &truth).unwrap().0;
        prop_assert_eq!(mixed_hamming(&permute_columns(&hat, &perm), &truth).unwrap().0, base);
        prop_assert_eq!(mixed_hamming(&permute_columns(&truth, &perm), &permute_columns(&hat, &perm)).unwrap().0,
            mixed_hamming(&truth, &hat).unwrap().0);
    }

    #[test]
    fn symmetric_in_its_arguments((hat, truth, _) in pmf_strategy()) {
        prop_assert_eq!(mixed_hamming(&hat, &truth).unwrap().0, mixed_hamming(&truth, &hat).unwrap().0);
    }

    #[test]
    fn bounded_by_two((hat, truth, _) in pmf_strategy()) {
        let v = mixed_hamming(&hat, &truth).unwrap().0;
        prop_assert!((0.0..=2.0 + 1e-12).contains(&v));
    }

    #[test]
    fn hungarian_agrees_with_enumeration(k in 1usize..8, data in proptest::collection::vec(0.0f64..10.0, 64)) {
        let cost = Matrix::from_fn(k, k, |a, b| data[a * 8 + b]);
        let total = |p: &[usize]| (0..k).map(|b| cost[(p[b], b)]).sum::<f64>();
        let e = min_cost_assignment(&cost, AssignmentMethod::Exhaustive);
        let h = min_cost_assignment(&cost, AssignmentMethod::Hungarian);
        prop_assert!((total(&e) - total(&h)).abs() < 1e-9);
    }

    #[test]
    fn hungarian_route_gives_the_same_error((hat, truth, _) in pmf_strategy()) {
        let e = mixed_hamming_with(&hat, &truth, AssignmentMethod::Exhaustive).unwrap().0;
        let h = mixed_hamming_with(&hat, &truth, AssignmentMethod::Hungarian).unwrap().0;
        prop_assert!((e - h).abs() < 1e-12);
    }

    #[test]
    fn small_perturbations_keep_the_permutation(
        (_, truth, perm) in pmf_strategy(),
        noise in proptest::collection::vec(-1.0f64..1.0, 6 * 25),
        scale in 0.0f64..0.99,
    ) {
        let (n, k) = truth.shape();
        let sep = (0..k)
            .flat_map(|a| ((a + 1)..k).map(move |b| (a, b)))
            .map(|(a, b)| (truth.column(a) - truth.column(b)).abs().sum())
            .fold(f64::INFINITY, f64::min);
        prop_assume!(sep > 1e-6);
        // Estimated column perm[b] is true column b plus noise of l1 size below sep / 2.
        let mut hat = Matrix::zeros(n, k);
        for b in 0..k {
            let e = Matrix::from_fn(n, 1, |i, _| noise[i * 6 + b]);
            let size = e.abs().sum();
            let e = if size > 0.0 { e * (0.5 * sep * scale / size) } else { e };
            hat.set_column(perm[b], &(truth.column(b) + e.column(0)));
        }
        prop_assert_eq!(align_permutation(&hat, &truth).unwrap(), perm);
    }
}

#[test]
fn sparser_networks_deviate_more() {
    let overrides = Overrides::default();
    let dense = make_grid_params(ExperimentId::Sparsity, 1.0, &overrides, 5).unwrap();
    let sparse = make_grid_params(ExperimentId::Sparsity, 0.25, &overrides, 5).unwrap();
    let truth = |p| truncated_svd(&population_matrix(p).unwrap(), 3, 1e-10).unwrap().u;
    let (u_dense, u_sparse) = (truth(&dense), truth(&sparse));
    let omega_dense = population_matrix(&dense).unwrap();
    let omega_sparse = population_matrix(&sparse).unwrap();
    let deviation = |omega: &Matrix, u: &Matrix, seed| {
        let a = sample_adjacency(omega, seed).unwrap();
        let svd = truncated_svd_with(&a, 3, 1e-10, SvdMethod::Auto).unwrap();
        subspace_deviation(&svd.u, u).unwrap()
    };
    let wins = (0..25u64)
        .filter(|&seed| deviation(&omega_sparse, &u_sparse, seed) > deviation(&omega_dense, &u_dense, seed))
        .count();
    assert!(wins >= 20, "sparser deviation larger in {wins} of 25 pairs");
}
