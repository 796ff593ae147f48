//! Shared fixtures for the benchmarks.

use dimsc::experiments::{make_grid_params, Overrides};
use dimsc::linalg::{row_normalize, truncated_svd};
use dimsc::model::prune_isolated;
use dimsc::{population_matrix, sample_adjacency, BinaryAdjacency, ExperimentId, Matrix};

/// Pruned network drawn at the default settings with `n_r` rows and
/// `n_c` columns.
pub fn default_network(n_r: usize, n_c: usize, seed: u64) -> BinaryAdjacency {
    let overrides = Overrides {
        n_r: Some(n_r),
        n_c: Some(n_c),
        n0: Some(n_r * 4 / 25),
        uneven_blocks: true,
        ..Overrides::default()
    };
    let params = make_grid_params(ExperimentId::Sparsity, 1.0, &overrides, seed).expect("valid defaults");
    let a = sample_adjacency(&population_matrix(&params).expect("valid params"), seed).expect("probabilities");
    prune_isolated(&a, &params.pi_r, &params.pi_c).expect("shapes match").adjacency
}

/// Row-normalized left singular vectors of a network, the input of cone hunting.
pub fn normalized_rows(a: &BinaryAdjacency, k: usize) -> Matrix {
    let svd = truncated_svd(&a.to_dense(), k, 1e-10).expect("rank k");
    row_normalize(&svd.u).matrix
}
