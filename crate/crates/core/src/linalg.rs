//! Dense and sparse matrix primitives, top-K singular value decomposition and
//! row normalization.

use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Largest min-dimension handled by the dense route in [`SvdMethod::Auto`].
pub const DENSE_SVD_LIMIT: usize = 5000;

const RANK_FLOOR: f64 = 1e-12;
const SIGN_FLOOR: f64 = 1e-12;
const BLOCK_POWER_MAX_ITER: usize = 500;
const BLOCK_POWER_SEED: u64 = 0x5eed_b10c;

/// Observed 0/1 bi-adjacency matrix stored as sorted per-row column lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryAdjacency {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl BinaryAdjacency {
    /// Builds from `(row, col)` coordinates. Duplicates and out-of-range
    /// coordinates are rejected.
    pub fn from_edges(rows: usize, cols: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut per_row: Vec<Vec<usize>> = vec![Vec::new(); rows];
        for &(i, j) in edges {
            if i >= rows || j >= cols {
                return Err(Error::Dimension(format!(
                    "edge ({i}, {j}) outside a {rows}x{cols} adjacency"
                )));
            }
            per_row[i].push(j);
        }
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::with_capacity(edges.len());
        row_ptr.push(0);
        for (i, mut list) in per_row.into_iter().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::Dimension(format!("duplicate edge ({i}, {})", w[0])));
            }
            col_idx.extend(list);
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
        })
    }

    /// Entries equal to 1.0 become edges; every other entry must be 0.0.
    pub fn from_dense(m: &Matrix) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let x = m[(i, j)];
                if x == 1.0 {
                    edges.push((i, j));
                } else if x != 0.0 {
                    return Err(Error::Dimension(format!(
                        "entry ({i}, {j}) = {x} is not binary"
                    )));
                }
            }
        }
        Self::from_edges(m.nrows(), m.ncols(), &edges)
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows, self.cols);
        for (i, j) in self.edges() {
            m[(i, j)] = 1.0;
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Sorted column indices of the edges leaving row node `i`.
    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.row(i).binary_search(&j).is_ok()
    }

    /// Edges in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).iter().map(move |&j| (i, j)))
    }

    pub fn row_sums(&self) -> Vec<usize> {
        (0..self.rows).map(|i| self.row(i).len()).collect()
    }

    pub fn col_sums(&self) -> Vec<usize> {
        let mut sums = vec![0; self.cols];
        for &j in &self.col_idx {
            sums[j] += 1;
        }
        sums
    }

    pub fn transpose(&self) -> Self {
        let edges: Vec<_> = self.edges().map(|(i, j)| (j, i)).collect();
        Self::from_edges(self.cols, self.rows, &edges).expect("transpose of a valid adjacency")
    }

    /// Keeps the listed rows and columns (in the given order).
    pub fn submatrix(&self, keep_rows: &[usize], keep_cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.cols];
        for (new, &old) in keep_cols.iter().enumerate() {
            col_map[old] = new;
        }
        let mut edges = Vec::new();
        for (new_i, &old_i) in keep_rows.iter().enumerate() {
            for &j in self.row(old_i) {
                if col_map[j] != usize::MAX {
                    edges.push((new_i, col_map[j]));
                }
            }
        }
        Self::from_edges(keep_rows.len(), keep_cols.len(), &edges)
            .expect("submatrix of a valid adjacency")
    }
}

/// Matrix-free access used by the iterative SVD route.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `self * x`
    fn apply(&self, x: &Matrix) -> Matrix;
    /// `self' * y`
    fn apply_transpose(&self, y: &Matrix) -> Matrix;
    fn to_dense(&self) -> Matrix;
}

impl LinearOperator for Matrix {
    fn nrows(&self) -> usize {
        self.nrows()
    }
    fn ncols(&self) -> usize {
        self.ncols()
    }
    fn apply(&self, x: &Matrix) -> Matrix {
        self * x
    }
    fn apply_transpose(&self, y: &Matrix) -> Matrix {
        self.tr_mul(y)
    }
    fn to_dense(&self) -> Matrix {
        self.clone()
    }
}

impl LinearOperator for BinaryAdjacency {
    fn nrows(&self) -> usize {
        self.rows
    }
    fn ncols(&self) -> usize {
        self.cols
    }
    fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.rows, x.ncols());
        for i in 0..self.rows {
            for &j in self.row(i) {
                for c in 0..x.ncols() {
                    out[(i, c)] += x[(j, c)];
                }
            }
        }
        out
    }
    fn apply_transpose(&self, y: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.cols, y.ncols());
        for i in 0..self.rows {
            for &j in self.row(i) {
                for c in 0..y.ncols() {
                    out[(j, c)] += y[(i, c)];
                }
            }
        }
        out
    }
    fn to_dense(&self) -> Matrix {
        BinaryAdjacency::to_dense(self)
    }
}

/// Top-K compact SVD `M ~ U diag(sigma) V'`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub u: Matrix,
    pub sigma: DVector<f64>,
    pub v: Matrix,
}

impl SpectralDecomposition {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn lambda(&self) -> Matrix {
        Matrix::from_diagonal(&self.sigma)
    }

    /// `U diag(sigma) V'`
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (k, s) in self.sigma.iter().enumerate() {
            us.column_mut(k).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SvdMethod {
    /// Dense when `min(rows, cols) <= DENSE_SVD_LIMIT`, block power otherwise.
    #[default]
    Auto,
    Dense,
    BlockPower,
}

/// Top-`k` singular triplets of a dense matrix. `tol` bounds the iterative
/// route's convergence; the dense route is exact to rounding.
pub fn truncated_svd(m: &Matrix, k: usize, tol: f64) -> Result<SpectralDecomposition> {
    truncated_svd_with(m, k, tol, SvdMethod::Auto)
}

pub fn truncated_svd_with<M: LinearOperator + ?Sized>(
    m: &M,
    k: usize,
    tol: f64,
    method: SvdMethod,
) -> Result<SpectralDecomposition> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let min_dim = rows.min(cols);
    if k == 0 || k > min_dim {
        return Err(Error::Dimension(format!(
            "K = {k} must lie in 1..={min_dim} for a {rows}x{cols} matrix"
        )));
    }
    let use_dense = match method {
        SvdMethod::Dense => true,
        SvdMethod::BlockPower => false,
        SvdMethod::Auto => min_dim <= DENSE_SVD_LIMIT,
    };
    let (u, s, v) = if use_dense {
        let dense = m.to_dense();
        check_finite(&dense)?;
        dense_svd(dense)
    } else {
        block_power_svd(m, k, tol)
    };
    canonicalize(u, s, v, k)
}

/// Thin SVD `m = U diag(s) V'` with `min(rows, cols)` triplets, descending.
/// Empty input gives empty factors.
pub fn thin_svd(m: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let (r, c) = m.shape();
    let p = r.min(c);
    if p == 0 {
        return (Matrix::zeros(r, 0), Vec::new(), Matrix::zeros(c, 0));
    }
    let f = faer::Mat::<f64>::from_fn(r, c, |i, j| m[(i, j)]);
    let svd = f.thin_svd().expect("SVD of a finite matrix converges");
    let (fu, fs, fv) = (svd.U(), svd.S().column_vector(), svd.V());
    let u = Matrix::from_fn(r, p, |i, j| fu[(i, j)]);
    let v = Matrix::from_fn(c, p, |i, j| fv[(i, j)]);
    (u, (0..p).map(|j| fs[j]).collect(), v)
}

/// Singular values, descending.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    let (r, c) = m.shape();
    if r.min(c) == 0 {
        return Vec::new();
    }
    let f = faer::Mat::<f64>::from_fn(r, c, |i, j| m[(i, j)]);
    f.singular_values().expect("SVD of a finite matrix converges")
}

fn dense_svd(m: Matrix) -> (Matrix, Vec<f64>, Matrix) {
    thin_svd(&m)
}

fn block_power_svd<M: LinearOperator + ?Sized>(
    m: &M,
    k: usize,
    tol: f64,
) -> (Matrix, Vec<f64>, Matrix) {
    let width = (k + 10).min(m.nrows().min(m.ncols()));
    let mut rng = ChaCha8Rng::seed_from_u64(BLOCK_POWER_SEED);
    let start = Matrix::from_fn(m.ncols(), width, |_, _| crate::rng::unit_uniform(&mut rng) - 0.5);
    let mut q = start.qr().q();
    let mut previous: Option<Vec<f64>> = None;
    for _ in 0..BLOCK_POWER_MAX_ITER {
        let y = m.apply(&q).qr().q();
        q = m.apply_transpose(&y).qr().q();
        let small = y.tr_mul(&m.apply(&q));
        let sv = singular_values(&small);
        let mut sv_sorted = sv.clone();
        sv_sorted.sort_by(|a, b| b.total_cmp(a));
        let converged = previous.as_ref().is_some_and(|p| {
            let scale = sv_sorted[0].max(f64::MIN_POSITIVE);
            p.iter()
                .zip(&sv_sorted)
                .take(k)
                .all(|(a, b)| (a - b).abs() <= tol * scale)
        });
        previous = Some(sv_sorted);
        if converged {
            break;
        }
    }
    let y = m.apply(&q).qr().q();
    let small = y.tr_mul(&m.apply(&q));
    let (su, s, sv) = thin_svd(&small);
    (&y * su, s, &q * sv)
}

/// Sorts descending, truncates to `k`, and flips each pair so the first left
/// entry with magnitude above 1e-12 is positive.
fn canonicalize(u: Matrix, s: Vec<f64>, v: Matrix, k: usize) -> Result<SpectralDecomposition> {
    let mut order: Vec<usize> = (0..s.len()).collect();
    // Stable sort keeps the solver's index order among exact ties.
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let order = &order[..k];
    let mut uk = Matrix::zeros(u.nrows(), k);
    let mut vk = Matrix::zeros(v.nrows(), k);
    let mut sk = DVector::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        let mut ucol = u.column(src).into_owned();
        let mut vcol = v.column(src).into_owned();
        if let Some(first) = ucol.iter().find(|x| x.abs() > SIGN_FLOOR) {
            if *first < 0.0 {
                ucol.neg_mut();
                vcol.neg_mut();
            }
        }
        uk.set_column(dst, &ucol);
        vk.set_column(dst, &vcol);
        sk[dst] = s[src];
    }
    if let Some((index, &value)) = sk.iter().enumerate().find(|(_, x)| **x < RANK_FLOOR) {
        return Err(Error::RankDeficient { index, value });
    }
    Ok(SpectralDecomposition {
        u: uk,
        sigma: sk,
        v: vk,
    })
}

/// Result of [`row_normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct RowNormalized {
    pub matrix: Matrix,
    /// Euclidean norm of each input row.
    pub norms: Vec<f64>,
    /// Rows with zero norm, left as zero.
    pub degenerate: Vec<usize>,
}

pub fn row_normalize(u: &Matrix) -> RowNormalized {
    let mut matrix = u.clone();
    let mut norms = Vec::with_capacity(u.nrows());
    let mut degenerate = Vec::new();
    for i in 0..u.nrows() {
        let norm = u.row(i).norm();
        norms.push(norm);
        if norm > 0.0 {
            matrix.row_mut(i).unscale_mut(norm);
        } else {
            degenerate.push(i);
        }
    }
    RowNormalized {
        matrix,
        norms,
        degenerate,
    }
}

/// `X X'`, mirrored so the result is exactly symmetric.
pub fn gram_rows(x: &Matrix) -> Matrix {
    let mut g = x * x.transpose();
    let n = g.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            g[(j, i)] = g[(i, j)];
        }
    }
    g
}

pub fn check_finite(m: &Matrix) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// 2-norm condition number; infinite for singular or empty input.
pub fn condition_number(m: &Matrix) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    let sv = singular_values(m);
    let max = sv[0];
    let min = sv[sv.len() - 1];
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Rows of `m` selected by `idx`, in order.
pub fn select_rows(m: &Matrix, idx: &[usize]) -> Matrix {
    Matrix::from_fn(idx.len(), m.ncols(), |r, c| m[(idx[r], c)])
}


#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn diagonal_matrix_top_two() {
        let m = Matrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 1.0]));
        let d = truncated_svd(&m, 2, 1e-12).unwrap();
        assert_eq!(d.sigma.as_slice(), &[3.0, 2.0]);
        assert!(approx(d.u[(0, 0)], 1.0, 1e-15) && approx(d.u[(1, 1)], 1.0, 1e-15));
        assert!(approx(d.v[(0, 0)], 1.0, 1e-15) && approx(d.v[(1, 1)], 1.0, 1e-15));
    }

    #[test]
    fn all_ones_rank_one() {
        let m = Matrix::from_element(2, 2, 1.0);
        let d = truncated_svd(&m, 1, 1e-12).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(approx(d.sigma[0], 2.0, 1e-14));
        assert!(approx(d.u[(0, 0)], h, 1e-14) && approx(d.u[(1, 0)], h, 1e-14));
    }

    #[test]
    fn k_out_of_range() {
        let m = Matrix::identity(3, 2);
        assert!(matches!(truncated_svd(&m, 3, 1e-12), Err(Error::Dimension(_))));
        assert!(matches!(truncated_svd(&m, 0, 1e-12), Err(Error::Dimension(_))));
    }

    #[test]
    fn rank_deficiency_names_index() {
        let m = Matrix::from_element(3, 3, 1.0);
        match truncated_svd(&m, 2, 1e-12) {
            Err(Error::RankDeficient { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_finite_rejected() {
        let mut m = Matrix::identity(2, 2);
        m[(1, 0)] = f64::NAN;
        assert!(matches!(truncated_svd(&m, 1, 1e-12), Err(Error::NonFinite { row: 1, col: 0 })));
    }

    #[test]
    fn row_normalize_cases() {
        let u = Matrix::from_row_slice(3, 2, &[3.0, 4.0, 0.0, 1.0, 0.0, 0.0]);
        let r = row_normalize(&u);
        assert!(approx(r.matrix[(0, 0)], 0.6, 1e-15) && approx(r.matrix[(0, 1)], 0.8, 1e-15));
        assert_eq!(r.matrix[(1, 0)], 0.0);
        assert_eq!(r.matrix[(1, 1)], 1.0);
        assert_eq!(r.matrix.row(2).sum(), 0.0);
        assert_eq!(r.degenerate, vec![2]);
    }

    #[test]
    fn gram_examples() {
        assert_eq!(gram_rows(&Matrix::identity(2, 2)), Matrix::identity(2, 2));
        let x = Matrix::from_column_slice(2, 1, &[1.0, 2.0]);
        assert_eq!(gram_rows(&x), Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]));
    }

    #[test]
    fn adjacency_dense_round_trip_and_duplicates() {
        let a = BinaryAdjacency::from_edges(2, 3, &[(1, 2), (0, 1)]).unwrap();
        assert_eq!(BinaryAdjacency::from_dense(&a.to_dense()).unwrap(), a);
        assert_eq!(a.row_sums(), vec![1, 1]);
        assert_eq!(a.col_sums(), vec![0, 1, 1]);
        assert!(BinaryAdjacency::from_edges(2, 2, &[(0, 1), (0, 1)]).is_err());
        assert!(BinaryAdjacency::from_edges(2, 2, &[(2, 0)]).is_err());
        assert_eq!(a.transpose().to_dense(), a.to_dense().transpose());
    }

    #[test]
    fn sparse_operator_matches_dense() {
        let a = BinaryAdjacency::from_edges(3, 2, &[(0, 0), (1, 1), (2, 0), (2, 1)]).unwrap();
        let x = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let y = Matrix::from_row_slice(3, 1, &[1.0, -1.0, 2.0]);
        assert_eq!(a.apply(&x), a.to_dense() * &x);
        assert_eq!(a.apply_transpose(&y), a.to_dense().tr_mul(&y));
    }
}
