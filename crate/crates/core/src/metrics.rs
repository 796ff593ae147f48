//! Membership error measures and spectral deviation diagnostics.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Largest K searched by full enumeration under [`AssignmentMethod::Auto`].
pub const EXHAUSTIVE_MAX_K: usize = 8;
const DEVIATION_BLOCK: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AssignmentMethod {
    #[default]
    Auto,
    Exhaustive,
    Hungarian,
}

/// Column-matched comparison of an estimate against the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub row_mhamm: f64,
    pub col_mhamm: f64,
    pub best_perm_r: Vec<usize>,
    pub best_perm_c: Vec<usize>,
    pub subspace_dev_u: Option<f64>,
    pub subspace_dev_v: Option<f64>,
}

impl ErrorReport {
    pub fn new(pi_r_hat: &Matrix, pi_r: &Matrix, pi_c_hat: &Matrix, pi_c: &Matrix) -> Result<Self> {
        let (row_mhamm, best_perm_r) = mixed_hamming(pi_r_hat, pi_r)?;
        let (col_mhamm, best_perm_c) = mixed_hamming(pi_c_hat, pi_c)?;
        Ok(Self {
            row_mhamm,
            col_mhamm,
            best_perm_r,
            best_perm_c,
            subspace_dev_u: None,
            subspace_dev_v: None,
        })
    }
}

/// `min_P |Pi_hat P - Pi|_1 / n` over column permutations.
///
/// The returned permutation maps true column `b` to estimated column
/// `perm[b]`. The value sums the matched per-column costs in ascending
/// order, so it is exactly invariant to column relabeling and to swapping
/// the arguments.
pub fn mixed_hamming(pi_hat: &Matrix, pi: &Matrix) -> Result<(f64, Vec<usize>)> {
    mixed_hamming_with(pi_hat, pi, AssignmentMethod::Auto)
}

pub fn mixed_hamming_with(
    pi_hat: &Matrix,
    pi: &Matrix,
    method: AssignmentMethod,
) -> Result<(f64, Vec<usize>)> {
    if pi_hat.shape() != pi.shape() {
        return Err(Error::Dimension(format!(
            "membership shapes differ: {:?} vs {:?}",
            pi_hat.shape(),
            pi.shape()
        )));
    }
    let (n, k) = pi.shape();
    if k == 0 {
        return Ok((0.0, Vec::new()));
    }
    let cost = column_costs(pi_hat, pi);
    let perm = min_cost_assignment(&cost, method);
    let value = if n == 0 {
        0.0
    } else {
        sorted_sum((0..k).map(|b| cost[(perm[b], b)])) / n as f64
    };
    Ok((value, perm))
}

/// The minimizing permutation of [`mixed_hamming`].
pub fn align_permutation(pi_hat: &Matrix, pi: &Matrix) -> Result<Vec<usize>> {
    mixed_hamming(pi_hat, pi).map(|(_, perm)| perm)
}

/// `C(a, b) = |Pi_hat(:, a) - Pi(:, b)|_1`
fn column_costs(pi_hat: &Matrix, pi: &Matrix) -> Matrix {
    let k = pi.ncols();
    Matrix::from_fn(k, k, |a, b| {
        sorted_sum(
            pi_hat
                .column(a)
                .iter()
                .zip(pi.column(b).iter())
                .map(|(x, y)| (x - y).abs()),
        )
    })
}

fn sorted_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

/// Permutation `perm` minimizing `sum_b cost(perm[b], b)` for a square cost
/// matrix. Enumeration visits permutations in lexicographic order and keeps
/// the first strict minimum.
pub fn min_cost_assignment(cost: &Matrix, method: AssignmentMethod) -> Vec<usize> {
    let k = cost.nrows();
    assert_eq!(k, cost.ncols(), "cost matrix must be square");
    let exhaustive = match method {
        AssignmentMethod::Auto => k <= EXHAUSTIVE_MAX_K,
        AssignmentMethod::Exhaustive => true,
        AssignmentMethod::Hungarian => false,
    };
    if exhaustive {
        exhaustive_assignment(cost)
    } else {
        hungarian(cost)
    }
}

fn exhaustive_assignment(cost: &Matrix) -> Vec<usize> {
    let k = cost.nrows();
    let mut perm: Vec<usize> = (0..k).collect();
    let score = |p: &[usize]| sorted_sum((0..k).map(|b| cost[(p[b], b)]));
    let mut best = perm.clone();
    let mut best_score = score(&perm);
    while next_permutation(&mut perm) {
        let s = score(&perm);
        if s < best_score {
            best_score = s;
            best.copy_from_slice(&perm);
        }
    }
    best
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Shortest augmenting path assignment with row/column potentials, O(K^3).
fn hungarian(cost: &Matrix) -> Vec<usize> {
    let n = cost.nrows();
    // 1-based arrays; index 0 is the virtual start column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for b in 1..=n {
        row_of[0] = b;
        let mut col = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col] = true;
            let a0 = row_of[col];
            let mut delta = f64::INFINITY;
            let mut next = 0;
            for c in 1..=n {
                if !used[c] {
                    // Rows of the problem are the true columns `b`; columns are estimated ones.
                    let cur = cost[(c - 1, a0 - 1)] - u[a0] - v[c];
                    if cur < minv[c] {
                        minv[c] = cur;
                        way[c] = col;
                    }
                    if minv[c] < delta {
                        delta = minv[c];
                        next = c;
                    }
                }
            }
            for c in 0..=n {
                if used[c] {
                    u[row_of[c]] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            col = next;
            if row_of[col] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col];
            row_of[col] = row_of[prev];
            col = prev;
            if col == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for c in 1..=n {
        perm[row_of[c] - 1] = c - 1;
    }
    perm
}

/// `max_i |(U_hat U_hat' - U U')(i, :)|_2`, evaluated 1000 rows at a time.
pub fn subspace_deviation(u_hat: &Matrix, u: &Matrix) -> Result<f64> {
    if u_hat.nrows() != u.nrows() {
        return Err(Error::Dimension(format!(
            "subspace bases have {} and {} rows",
            u_hat.nrows(),
            u.nrows()
        )));
    }
    let n = u.nrows();
    let starts: Vec<usize> = (0..n).step_by(DEVIATION_BLOCK).collect();
    let max = starts
        .par_iter()
        .map(|&start| {
            let len = DEVIATION_BLOCK.min(n - start);
            let block = u_hat.rows(start, len) * u_hat.transpose() - u.rows(start, len) * u.transpose();
            (0..len).map(|i| block.row(i).norm()).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(max)
}
