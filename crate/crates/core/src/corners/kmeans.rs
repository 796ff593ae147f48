use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;

/// Stream tag separating K-means restarts from other consumers of a seed.
const KMEANS_TAG: u64 = 0x6b6d_6561_6e73;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    /// K x d, one center per row.
    pub centers: Matrix,
    /// Within-cluster sum of squared distances.
    pub cost: f64,
    /// Restart that produced this result.
    pub restart: usize,
}

impl KMeansResult {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centers.nrows()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

pub fn kmeans(points: &Matrix, k: usize, seed: u64) -> Result<KMeansResult> {
    kmeans_with(points, k, seed, &KMeansOptions::default())
}

/// Lloyd's algorithm from seeded farthest-point starts. The best restart is
/// chosen by `(cost, restart index)`, so the result does not depend on the
/// order in which restarts finish.
pub fn kmeans_with(points: &Matrix, k: usize, seed: u64, opts: &KMeansOptions) -> Result<KMeansResult> {
    let m = points.nrows();
    if k == 0 || m < k {
        return Err(Error::InsufficientPoints {
            points: m,
            clusters: k,
        });
    }
    let restarts = opts.restarts.max(1);
    let runs: Vec<KMeansResult> = (0..restarts)
        .into_par_iter()
        .map(|r| run_once(points, k, rng::derive_seed(seed, KMEANS_TAG, r as u64), opts.max_iter, r))
        .collect();
    Ok(runs
        .into_iter()
        .min_by(|a, b| a.cost.total_cmp(&b.cost).then(a.restart.cmp(&b.restart)))
        .expect("at least one restart"))
}

fn run_once(points: &Matrix, k: usize, seed: u64, max_iter: usize, restart: usize) -> KMeansResult {
    let m = points.nrows();
    let mut stream = rng::stream(seed);
    let mut chosen = vec![rng::uniform_index(&mut stream, m)];
    let mut nearest: Vec<f64> = (0..m).map(|i| sq_dist_rows(points, i, points, chosen[0])).collect();
    while chosen.len() < k {
        let mut best = 0;
        for i in 1..m {
            if nearest[i] > nearest[best] {
                best = i;
            }
        }
        chosen.push(best);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist_rows(points, i, points, best));
        }
    }
    let mut centers = crate::linalg::select_rows(points, &chosen);
    let mut labels = assign(points, &centers);
    for _ in 0..max_iter {
        update_centers(points, &labels, &mut centers);
        let next = assign(points, &centers);
        if next == labels {
            break;
        }
        labels = next;
    }
    let cost = (0..m).map(|i| sq_dist_rows(points, i, &centers, labels[i])).sum();
    KMeansResult {
        labels,
        centers,
        cost,
        restart,
    }
}

fn sq_dist_rows(a: &Matrix, i: usize, b: &Matrix, j: usize) -> f64 {
    a.row(i)
        .iter()
        .zip(b.row(j).iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// Nearest center per point, ties to the lower center index.
fn assign(points: &Matrix, centers: &Matrix) -> Vec<usize> {
    (0..points.nrows())
        .map(|i| {
            let mut best = (0, sq_dist_rows(points, i, centers, 0));
            for c in 1..centers.nrows() {
                let d = sq_dist_rows(points, i, centers, c);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best.0
        })
        .collect()
}

/// Cluster means; an empty cluster keeps its previous center.
fn update_centers(points: &Matrix, labels: &[usize], centers: &mut Matrix) {
    let k = centers.nrows();
    let mut sums = Matrix::zeros(k, points.ncols());
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        let mut row = sums.row_mut(l);
        row += points.row(i);
    }
    for c in 0..k {
        if counts[c] > 0 {
            centers.set_row(c, &(sums.row(c) / counts[c] as f64));
        }
    }
}
