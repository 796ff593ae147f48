//! Corner hunting: successive projection for simplex geometry, SVM-cone for
//! cone geometry, and the one-class SVM and K-means pieces SVM-cone needs.

mod cone;
mod kmeans;
mod projection;
mod svm;

pub use cone::{svm_cone, svm_cone_detailed, ConeHunt, CANDIDATE_SLACK};
pub use kmeans::{kmeans, kmeans_with, KMeansOptions, KMeansResult};
pub use projection::successive_projection;
pub use svm::{ideal_cone_solution, min_norm_point, one_class_svm, ConeSolution, MinNormPoint};

use crate::error::{Error, Result};

/// K distinct row indices into the matrix a corner search ran on.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CornerIndexSet(Vec<usize>);

impl CornerIndexSet {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        let mut seen = indices.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != indices.len() {
            return Err(Error::Dimension(format!("repeated corner index in {indices:?}")));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::Dimension(format!("corner index {bad} out of range 0..{n}")));
        }
        Ok(Self(indices))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    /// Reorders by `perm`: position `k` of the result holds `self[perm[k]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self(perm.iter().map(|&p| self.0[p]).collect())
    }
}

impl std::ops::Index<usize> for CornerIndexSet {
    type Output = usize;
    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}
