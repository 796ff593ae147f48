use super::kmeans::{kmeans, KMeansResult};
use super::svm::{one_class_svm, ConeSolution};
use super::CornerIndexSet;
use crate::error::{Error, Result};
use crate::linalg::{select_rows, Matrix};

/// Rows within this distance of the `gamma` threshold count as candidates,
/// so exact hyperplane points survive rounding in `S w - b`.
pub const CANDIDATE_SLACK: f64 = 1e-9;
const MAX_STEP: u32 = 20;
const MIN_CENTER_GAP: f64 = 1e-6;
const HISTOGRAM_BINS: usize = 10;

/// Everything [`svm_cone`] decided on the way to its corners.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeHunt {
    pub indices: CornerIndexSet,
    pub solution: ConeSolution,
    pub gamma: f64,
    pub step: u32,
    /// Candidate rows at the accepted threshold, ascending.
    pub candidates: Vec<usize>,
    pub clusters: KMeansResult,
}

/// Cone corner hunting on unit rows: fit the one-class SVM hyperplane, take
/// rows with `S(i,:) w <= b + gamma`, cluster them into K groups and return
/// the member nearest each cluster center, sorted ascending.
///
/// `gamma` runs through `b (2^t - 1) / 100` for `t = 0..=20` and the first
/// threshold giving K well-separated non-empty clusters is kept.
pub fn svm_cone(s_hat: &Matrix, k: usize, seed: u64) -> Result<CornerIndexSet> {
    svm_cone_detailed(s_hat, k, seed).map(|h| h.indices)
}

pub fn svm_cone_detailed(s_hat: &Matrix, k: usize, seed: u64) -> Result<ConeHunt> {
    let n = s_hat.nrows();
    if k == 0 || n < k {
        return Err(Error::InsufficientPoints {
            points: n,
            clusters: k,
        });
    }
    let solution = one_class_svm(s_hat)?;
    let margins = solution.margins(s_hat);
    let mut last_size = 0;
    for step in 0..=MAX_STEP {
        let gamma = solution.b * ((1u64 << step) - 1) as f64 / 100.0;
        let candidates: Vec<usize> = (0..n)
            .filter(|&i| margins[i] <= gamma + CANDIDATE_SLACK)
            .collect();
        if candidates.len() < k || candidates.len() == last_size {
            continue;
        }
        last_size = candidates.len();
        let points = select_rows(s_hat, &candidates);
        let clusters = kmeans(&points, k, seed)?;
        if !distinct_clusters(&clusters) {
            continue;
        }
        let mut picks: Vec<usize> = (0..k)
            .map(|c| representative(&points, &clusters, c))
            .map(|local| candidates[local])
            .collect();
        picks.sort_unstable();
        return Ok(ConeHunt {
            indices: CornerIndexSet::new(picks, n)?,
            solution,
            gamma,
            step,
            candidates,
            clusters,
        });
    }
    Err(Error::ConeHuntingFailure {
        k,
        histogram: histogram(&margins),
    })
}

fn distinct_clusters(res: &KMeansResult) -> bool {
    if res.cluster_sizes().contains(&0) {
        return false;
    }
    let c = &res.centers;
    for a in 0..c.nrows() {
        for b in (a + 1)..c.nrows() {
            if (c.row(a) - c.row(b)).norm() < MIN_CENTER_GAP {
                return false;
            }
        }
    }
    true
}

/// Member of cluster `c` nearest its center, ties to the lowest index.
fn representative(points: &Matrix, res: &KMeansResult, c: usize) -> usize {
    let center = res.centers.row(c);
    let mut best: Option<(usize, f64)> = None;
    for (i, _) in res.labels.iter().enumerate().filter(|(_, &l)| l == c) {
        let d = (points.row(i) - center).norm_squared();
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.expect("cluster is non-empty").0
}

/// Equal-width bins over `[0, max margin]`, as `(upper edge, count)`.
fn histogram(margins: &[f64]) -> Vec<(f64, usize)> {
    let max = margins.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return vec![(0.0, margins.len())];
    }
    let width = max / HISTOGRAM_BINS as f64;
    let mut counts = vec![0; HISTOGRAM_BINS];
    for &m in margins {
        let bin = ((m.max(0.0) / width) as usize).min(HISTOGRAM_BINS - 1);
        counts[bin] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| (width * (b + 1) as f64, c))
        .collect()
}
