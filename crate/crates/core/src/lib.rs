//! Directed degree-corrected mixed membership networks: model generation,
//! spectral simplex/cone membership estimation, error metrics and the
//! simulation harness.
//!
//! ```
//! use dimsc::{fit_ideal, mixed_hamming, population_matrix, ModelParams, Matrix};
//!
//! let params = ModelParams {
//!     k: 2,
//!     p: Matrix::from_row_slice(2, 2, &[1.0, 0.2, 0.3, 1.0]),
//!     pi_r: Matrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.5, 0.5]),
//!     pi_c: Matrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.3, 0.7]),
//!     theta_r: vec![0.9, 0.5, 0.7],
//! };
//! let omega = population_matrix(&params).unwrap();
//! let est = fit_ideal(&omega, 2).unwrap();
//! let (err, _) = mixed_hamming(&est.pi_r_hat, &params.pi_r).unwrap();
//! assert!(err < 1e-10);
//! ```

pub mod corners;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod rng;

pub use corners::{
    ideal_cone_solution, kmeans, one_class_svm, successive_projection, svm_cone, ConeSolution, CornerIndexSet,
};
pub use error::{Error, Result, Stage};
pub use estimator::{
    fit_dimsc, fit_dimsc_equivalence, fit_ideal, recover_col_memberships, recover_row_memberships,
    recover_theta_corners, MembershipEstimate,
};
pub use experiments::{run_experiment, ExperimentConfig, ExperimentId, ExperimentResult};
pub use linalg::{gram_rows, row_normalize, truncated_svd, BinaryAdjacency, Matrix, SpectralDecomposition};
pub use metrics::{align_permutation, mixed_hamming, subspace_deviation, ErrorReport};
pub use model::{
    population_matrix, prune_isolated, sample_adjacency, scale_theta_for_pmax, validate, ModelParams, ModelSpec,
    PureNodeIndex, ValidationReport,
};
