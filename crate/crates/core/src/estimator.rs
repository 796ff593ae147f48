//! Membership estimation: the ideal pipeline on a population matrix, the
//! empirical pipeline on an adjacency matrix, and the projector-based
//! equivalent pipeline used as a cross-check.

use nalgebra::DVector;

use crate::corners::{svm_cone_detailed, successive_projection, CornerIndexSet};
use crate::error::{Error, Result, Stage, StageExt};
use crate::linalg::{
    condition_number, gram_rows, row_normalize, select_rows, truncated_svd, truncated_svd_with, BinaryAdjacency,
    Matrix, SpectralDecomposition, SvdMethod,
};
use crate::metrics::{min_cost_assignment, AssignmentMethod};

/// Corner matrices above this 2-norm condition number are rejected.
pub const MAX_CORNER_CONDITION: f64 = 1e8;
/// Tolerance handed to the iterative SVD route.
pub const SVD_TOL: f64 = 1e-10;
/// K-means seed used by [`fit_ideal`], which takes no seed of its own.
pub const IDEAL_SEED: u64 = 0;
const ALIGN_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipEstimate {
    pub pi_r_hat: Matrix,
    pub pi_c_hat: Matrix,
    pub i_r_hat: CornerIndexSet,
    /// Column corners, ordered so that `i_c_hat[k]` pairs with `i_r_hat[k]`.
    pub i_c_hat: CornerIndexSet,
    /// `|Z_r(i,:)|_1`; equals the degree parameter in the ideal case.
    pub theta_r_hat: Vec<f64>,
    /// `Y J` before clipping.
    pub z_r_raw: Matrix,
    /// `V V(I_c,:)^-1` before clipping.
    pub z_c_raw: Matrix,
    pub diagnostics: FitDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitDiagnostics {
    pub singular_values: Vec<f64>,
    /// Positions `k` where the diagonal of `J` was negative and set to zero.
    pub clamped_j: Vec<usize>,
    /// Rows of `Z_r` / `Z_c` that clipped to zero and got the uniform PMF.
    pub zero_rows_r: Vec<usize>,
    pub zero_rows_c: Vec<usize>,
    pub condition_r: f64,
    pub condition_c: f64,
    pub cone_b: f64,
    pub cone_gamma: f64,
    pub cone_step: u32,
    /// Column corners in search order before pairing with the row corners.
    pub i_c_search: Vec<usize>,
}

/// Ideal pipeline on a population matrix.
pub fn fit_ideal(omega: &Matrix, k: usize) -> Result<MembershipEstimate> {
    let svd = truncated_svd(omega, k, SVD_TOL).stage(Stage::Svd)?;
    fit_spectral(&svd, IDEAL_SEED)
}

/// Empirical pipeline: top-K SVD of `A`, then corner hunting and recovery.
pub fn fit_dimsc(a: &BinaryAdjacency, k: usize, seed: u64) -> Result<MembershipEstimate> {
    let svd = truncated_svd_with(a, k, SVD_TOL, SvdMethod::Auto).stage(Stage::Svd)?;
    fit_spectral(&svd, seed)
}

/// Same estimate as [`fit_dimsc`], computed on the projectors `U U'` and
/// `V V'` instead of the singular vectors.
pub fn fit_dimsc_equivalence(a: &BinaryAdjacency, k: usize, seed: u64) -> Result<MembershipEstimate> {
    let svd = truncated_svd_with(a, k, SVD_TOL, SvdMethod::Auto).stage(Stage::Svd)?;
    fit_spectral_equivalence(&svd, seed)
}

/// Ideal pipeline through the projector route.
pub fn fit_ideal_equivalence(omega: &Matrix, k: usize) -> Result<MembershipEstimate> {
    let svd = truncated_svd(omega, k, SVD_TOL).stage(Stage::Svd)?;
    fit_spectral_equivalence(&svd, IDEAL_SEED)
}

fn normalized_rows(u: &Matrix) -> Result<Matrix> {
    let normed = row_normalize(u);
    if !normed.degenerate.is_empty() {
        return Err(Error::DegenerateRows {
            rows: normed.degenerate,
        })
        .stage(Stage::Normalize);
    }
    Ok(normed.matrix)
}

/// Runs corner hunting and recovery on a precomputed decomposition.
pub fn fit_spectral(svd: &SpectralDecomposition, seed: u64) -> Result<MembershipEstimate> {
    let k = svd.rank();
    let u_star = normalized_rows(&svd.u)?;
    let i_c_search = successive_projection(&svd.v, k).stage(Stage::SimplexHunting)?;
    let hunt = svm_cone_detailed(&u_star, k, seed).stage(Stage::ConeHunting)?;
    let i_r = hunt.indices.clone();
    let (i_c, _) = align_corners(&u_star, &svd.sigma, &svd.v, &i_r, &i_c_search).stage(Stage::Alignment)?;

    let rows = recover_row_memberships(&svd.u, &svd.sigma, &svd.v, &u_star, &i_r, &i_c).stage(Stage::RowRecovery)?;
    let cols = recover_col_memberships(&svd.v, &i_c).stage(Stage::ColumnRecovery)?;
    Ok(assemble(svd, rows, cols, i_r, i_c, i_c_search, &hunt))
}

/// Projector route: SP on `V V'`, SVM-cone on `N_U U U'`, and recovery
/// through the Gram matrices of the selected projector rows.
pub fn fit_spectral_equivalence(svd: &SpectralDecomposition, seed: u64) -> Result<MembershipEstimate> {
    let k = svd.rank();
    let u_star = normalized_rows(&svd.u)?;
    let u2 = gram_rows(&svd.u);
    let v2 = gram_rows(&svd.v);
    let u_star2 = &u_star * svd.u.transpose();

    let i_c_search = successive_projection(&v2, k).stage(Stage::SimplexHunting)?;
    let hunt = svm_cone_detailed(&u_star2, k, seed).stage(Stage::ConeHunting)?;
    let i_r = hunt.indices.clone();
    let (i_c, _) = align_corners(&u_star, &svd.sigma, &svd.v, &i_r, &i_c_search).stage(Stage::Alignment)?;

    let rows = (|| {
        let corners = select_rows(&u_star2, i_r.as_slice());
        let condition = checked_condition(&corners)?;
        let (j, clamped) = corner_scaling(&u_star, &svd.sigma, &svd.v, &i_r, &i_c);
        let y = projector_solve(&u2, &corners)?;
        let z_raw = scale_columns(y, &j);
        Ok(RowRecovery::from_raw(z_raw, clamped, condition))
    })()
    .stage(Stage::RowRecovery)?;
    let cols = (|| {
        let corners = select_rows(&v2, i_c.as_slice());
        let condition = checked_condition(&corners)?;
        let z_raw = projector_solve(&v2, &corners)?;
        Ok(ColRecovery::from_raw(z_raw, condition))
    })()
    .stage(Stage::ColumnRecovery)?;
    Ok(assemble(svd, rows, cols, i_r, i_c, i_c_search, &hunt))
}

fn assemble(
    svd: &SpectralDecomposition,
    rows: RowRecovery,
    cols: ColRecovery,
    i_r: CornerIndexSet,
    i_c: CornerIndexSet,
    i_c_search: CornerIndexSet,
    hunt: &crate::corners::ConeHunt,
) -> MembershipEstimate {
    MembershipEstimate {
        pi_r_hat: rows.pi_r_hat,
        pi_c_hat: cols.pi_c_hat,
        i_r_hat: i_r,
        i_c_hat: i_c,
        theta_r_hat: rows.theta_r_hat,
        z_r_raw: rows.z_r_raw,
        z_c_raw: cols.z_c_raw,
        diagnostics: FitDiagnostics {
            singular_values: svd.sigma.iter().copied().collect(),
            clamped_j: rows.clamped,
            zero_rows_r: rows.zero_rows,
            zero_rows_c: cols.zero_rows,
            condition_r: rows.condition,
            condition_c: cols.condition,
            cone_b: hunt.solution.b,
            cone_gamma: hunt.gamma,
            cone_step: hunt.step,
            i_c_search: i_c_search.into_vec(),
        },
    }
}

/// `X S' (S S')^-1` for projector rows `X` and selected rows `S`.
fn projector_solve(x: &Matrix, corners: &Matrix) -> Result<Matrix> {
    let gram = gram_rows(corners);
    let rhs = corners * x.transpose();
    let sol = gram.lu().solve(&rhs).ok_or(Error::IllConditionedCorners {
        condition: f64::INFINITY,
    })?;
    Ok(sol.transpose())
}

/// Pairs each row corner with a column corner.
///
/// Position `k` of the result holds the column corner whose entry in
/// `M = U_*(I_r,:) Lambda V(I_c,:)'` is matched to row `k` by the permutation
/// maximizing the product of matched entries of `M`. In the ideal case `M`
/// is a positive row scaling of the connectivity matrix with rows and
/// columns permuted, so when the unit diagonal dominates this pairs corners
/// of the same community. Returns the reordered set and the permutation.
pub fn align_corners(
    u_star: &Matrix,
    sigma: &DVector<f64>,
    v: &Matrix,
    i_r: &CornerIndexSet,
    i_c: &CornerIndexSet,
) -> Result<(CornerIndexSet, Vec<usize>)> {
    let k = sigma.len();
    if i_r.len() != k || i_c.len() != k {
        return Err(Error::Dimension(format!(
            "corner sets of sizes {} and {} for K = {k}",
            i_r.len(),
            i_c.len()
        )));
    }
    let m = corner_product(u_star, sigma, v, i_r, i_c);
    // cost(a, b): column corner a assigned to row corner b.
    let cost = Matrix::from_fn(k, k, |a, b| -m[(b, a)].max(ALIGN_FLOOR).ln());
    let perm = min_cost_assignment(&cost, AssignmentMethod::Auto);
    Ok((i_c.permuted(&perm), perm))
}

/// `X(I_r,:) Lambda V(I_c,:)'`
fn corner_product(x: &Matrix, sigma: &DVector<f64>, v: &Matrix, i_r: &CornerIndexSet, i_c: &CornerIndexSet) -> Matrix {
    let mut left = select_rows(x, i_r.as_slice());
    for (c, s) in sigma.iter().enumerate() {
        left.column_mut(c).scale_mut(*s);
    }
    left * select_rows(v, i_c.as_slice()).transpose()
}

/// Diagonal of `U_*(I_r,:) Lambda V(I_c,:)'` with negative entries set to
/// zero, and the positions that were clamped.
fn corner_scaling(
    u_star: &Matrix,
    sigma: &DVector<f64>,
    v: &Matrix,
    i_r: &CornerIndexSet,
    i_c: &CornerIndexSet,
) -> (Vec<f64>, Vec<usize>) {
    let m = corner_product(u_star, sigma, v, i_r, i_c);
    let mut clamped = Vec::new();
    let j = (0..m.nrows())
        .map(|k| {
            let d = m[(k, k)];
            if d < 0.0 {
                clamped.push(k);
                0.0
            } else {
                d
            }
        })
        .collect();
    if !clamped.is_empty() {
        log::warn!("negative corner scaling at positions {clamped:?} set to zero");
    }
    (j, clamped)
}

fn checked_condition(corners: &Matrix) -> Result<f64> {
    let condition = condition_number(corners);
    if !(condition <= MAX_CORNER_CONDITION) {
        return Err(Error::IllConditionedCorners { condition });
    }
    Ok(condition)
}

/// `X C^-1` for a square corner matrix `C`.
fn right_solve(x: &Matrix, corners: &Matrix) -> Result<Matrix> {
    let sol = corners
        .transpose()
        .lu()
        .solve(&x.transpose())
        .ok_or(Error::IllConditionedCorners {
            condition: f64::INFINITY,
        })?;
    Ok(sol.transpose())
}

fn scale_columns(mut m: Matrix, scale: &[f64]) -> Matrix {
    for (c, s) in scale.iter().enumerate() {
        m.column_mut(c).scale_mut(*s);
    }
    m
}

/// Clipped and normalized rows of a barycentric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Clipped {
    pub pi: Matrix,
    /// `|max(0, Z(i,:))|_1`
    pub l1: Vec<f64>,
    /// Rows that clipped to zero; they hold the uniform PMF.
    pub zero_rows: Vec<usize>,
}

/// `max(0, Z)` followed by l1 row normalization.
pub fn clip_and_normalize(z_raw: &Matrix) -> Clipped {
    let (n, k) = z_raw.shape();
    let mut pi = z_raw.map(|x| x.max(0.0));
    let mut l1 = Vec::with_capacity(n);
    let mut zero_rows = Vec::new();
    for i in 0..n {
        let s: f64 = pi.row(i).iter().sum();
        l1.push(s);
        if s > 0.0 {
            pi.row_mut(i).unscale_mut(s);
        } else {
            zero_rows.push(i);
            pi.row_mut(i).fill(1.0 / k as f64);
        }
    }
    if !zero_rows.is_empty() {
        log::warn!("{} rows clipped to zero; assigned the uniform membership", zero_rows.len());
    }
    Clipped { pi, l1, zero_rows }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowRecovery {
    pub pi_r_hat: Matrix,
    pub z_r_raw: Matrix,
    pub theta_r_hat: Vec<f64>,
    pub clamped: Vec<usize>,
    pub zero_rows: Vec<usize>,
    pub condition: f64,
}

impl RowRecovery {
    fn from_raw(z_r_raw: Matrix, clamped: Vec<usize>, condition: f64) -> Self {
        let clipped = clip_and_normalize(&z_r_raw);
        Self {
            pi_r_hat: clipped.pi,
            z_r_raw,
            theta_r_hat: clipped.l1,
            clamped,
            zero_rows: clipped.zero_rows,
            condition,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColRecovery {
    pub pi_c_hat: Matrix,
    pub z_c_raw: Matrix,
    pub zero_rows: Vec<usize>,
    pub condition: f64,
}

impl ColRecovery {
    fn from_raw(z_c_raw: Matrix, condition: f64) -> Self {
        let clipped = clip_and_normalize(&z_c_raw);
        Self {
            pi_c_hat: clipped.pi,
            z_c_raw,
            zero_rows: clipped.zero_rows,
            condition,
        }
    }
}

/// `Z_r = max(0, U U_*(I_r,:)^-1 J)` with `J = diag(U_*(I_r,:) Lambda V(I_c,:)')`,
/// row-normalized. `i_c[k]` must be the column corner paired with `i_r[k]`.
pub fn recover_row_memberships(
    u: &Matrix,
    sigma: &DVector<f64>,
    v: &Matrix,
    u_star: &Matrix,
    i_r: &CornerIndexSet,
    i_c: &CornerIndexSet,
) -> Result<RowRecovery> {
    let corners = select_rows(u_star, i_r.as_slice());
    let condition = checked_condition(&corners)?;
    let (j, clamped) = corner_scaling(u_star, sigma, v, i_r, i_c);
    let y = right_solve(u, &corners)?;
    Ok(RowRecovery::from_raw(scale_columns(y, &j), clamped, condition))
}

/// `Z_c = max(0, V V(I_c,:)^-1)`, row-normalized.
pub fn recover_col_memberships(v: &Matrix, i_c: &CornerIndexSet) -> Result<ColRecovery> {
    let corners = select_rows(v, i_c.as_slice());
    let condition = checked_condition(&corners)?;
    Ok(ColRecovery::from_raw(right_solve(v, &corners)?, condition))
}

/// `diag(U(I_r,:) Lambda V(I_c,:)')`: the degree parameters of the row
/// corners when the connectivity matrix has a unit diagonal. Negative
/// entries are returned unchanged and logged.
pub fn recover_theta_corners(
    u: &Matrix,
    sigma: &DVector<f64>,
    v: &Matrix,
    i_r: &CornerIndexSet,
    i_c: &CornerIndexSet,
) -> Vec<f64> {
    let m = corner_product(u, sigma, v, i_r, i_c);
    let theta: Vec<f64> = (0..m.nrows()).map(|k| m[(k, k)]).collect();
    let negative: Vec<usize> = (0..theta.len()).filter(|&k| theta[k] < 0.0).collect();
    if !negative.is_empty() {
        log::warn!("negative corner degree at positions {negative:?}: model is not identifiable here");
    }
    theta
}

/// `Theta(I_r)^-1 U(I_r,:) Lambda V(I_c,:)'`, the connectivity matrix in the
/// corner ordering.
pub fn recover_connectivity(
    u: &Matrix,
    sigma: &DVector<f64>,
    v: &Matrix,
    i_r: &CornerIndexSet,
    i_c: &CornerIndexSet,
) -> Matrix {
    let mut m = corner_product(u, sigma, v, i_r, i_c);
    for k in 0..m.nrows() {
        let t = m[(k, k)];
        m.row_mut(k).unscale_mut(t);
    }
    m
}
