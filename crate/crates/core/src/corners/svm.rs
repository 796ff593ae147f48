use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

const UNIT_TOL: f64 = 1e-8;
const GAP_TOL: f64 = 1e-12;
/// Gap accepted when the active set stops changing before `GAP_TOL` is met.
const STALL_GAP_TOL: f64 = 1e-10;
const WEIGHT_FLOOR: f64 = 1e-14;
const DEGENERATE_MARGIN: f64 = 1e-10;
const PINV_FLOOR: f64 = 1e-13;

/// Supporting hyperplane `{x : x.w = b}` of a set of unit rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSolution {
    pub w: DVector<f64>,
    pub b: f64,
}

impl ConeSolution {
    /// `S(i,:) w - b` for every row.
    pub fn margins(&self, s: &Matrix) -> Vec<f64> {
        (s * &self.w).iter().map(|x| x - self.b).collect()
    }
}

/// Minimum-norm point of the convex hull of the rows of a matrix, expressed
/// as a convex combination of an affinely independent active set.
#[derive(Debug, Clone, PartialEq)]
pub struct MinNormPoint {
    pub point: DVector<f64>,
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
    /// `|x|^2 - min_i p_i.x` at termination.
    pub gap: f64,
    pub iterations: usize,
}

/// Wolfe's algorithm on the rows of `points`. Iterations are capped at
/// `10 * n` major cycles.
pub fn min_norm_point(points: &Matrix) -> Result<MinNormPoint> {
    let n = points.nrows();
    if n == 0 {
        return Err(Error::Dimension("min-norm point of an empty set".into()));
    }
    let first = (0..n)
        .min_by(|&a, &b| {
            points
                .row(a)
                .norm_squared()
                .total_cmp(&points.row(b).norm_squared())
        })
        .expect("non-empty");
    let mut support = vec![first];
    let mut weights = vec![1.0];
    let mut x: DVector<f64> = points.row(first).transpose();
    let cap = 10 * n.max(1);
    let mut gap = f64::INFINITY;

    for iteration in 0..cap {
        let dots = points * &x;
        let (j, min_dot) = argmin(dots.as_slice());
        let norm_sq = x.norm_squared();
        gap = norm_sq - min_dot;
        if gap <= GAP_TOL {
            return Ok(MinNormPoint {
                point: x,
                support,
                weights,
                gap,
                iterations: iteration,
            });
        }
        if support.contains(&j) {
            if gap <= STALL_GAP_TOL {
                return Ok(MinNormPoint {
                    point: x,
                    support,
                    weights,
                    gap,
                    iterations: iteration,
                });
            }
            return Err(Error::SolverNotConverged {
                iterations: iteration,
                gap,
            });
        }
        support.push(j);
        weights.push(0.0);

        loop {
            let alpha = affine_minimizer(points, &support);
            if alpha.iter().all(|&a| a > WEIGHT_FLOOR) {
                weights = alpha;
                break;
            }
            // Move from the current weights toward alpha until a weight hits zero.
            let mut step = 1.0f64;
            for (l, a) in weights.iter().zip(&alpha) {
                if *a <= WEIGHT_FLOOR && l - a > 0.0 {
                    step = step.min(l / (l - a));
                }
            }
            for (l, a) in weights.iter_mut().zip(&alpha) {
                *l = (1.0 - step) * *l + step * a;
            }
            let mut keep = weights.iter().map(|&l| l > WEIGHT_FLOOR).collect::<Vec<_>>();
            if keep.iter().all(|&k| k) {
                // Rounding kept every weight positive; drop the smallest.
                let (drop, _) = argmin(&weights);
                keep[drop] = false;
            }
            let mut idx = 0;
            support.retain(|_| {
                let k = keep[idx];
                idx += 1;
                k
            });
            let mut idx = 0;
            weights.retain(|_| {
                let k = keep[idx];
                idx += 1;
                k
            });
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|l| *l /= total);
            if support.len() == 1 {
                weights = vec![1.0];
                break;
            }
        }
        x = combine(points, &support, &weights);
    }
    Err(Error::SolverNotConverged {
        iterations: cap,
        gap,
    })
}

fn argmin(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

fn combine(points: &Matrix, support: &[usize], weights: &[f64]) -> DVector<f64> {
    let mut x = DVector::zeros(points.ncols());
    for (&i, &l) in support.iter().zip(weights) {
        x += points.row(i).transpose() * l;
    }
    x
}

/// Affine weights (summing to one) of the minimum-norm point in the affine
/// hull of the support rows, via least squares on differences from the first.
fn affine_minimizer(points: &Matrix, support: &[usize]) -> Vec<f64> {
    let m = support.len();
    if m == 1 {
        return vec![1.0];
    }
    let base = points.row(support[0]).transpose();
    let d = points.ncols();
    let diffs = Matrix::from_fn(d, m - 1, |r, c| points[(support[c + 1], r)] - base[r]);
    // Minimum-norm least squares through the pseudo-inverse.
    let (u, s, v) = crate::linalg::thin_svd(&diffs);
    let mut coef = u.tr_mul(&(-&base));
    for (c, sv) in coef.iter_mut().zip(&s) {
        *c = if *sv > PINV_FLOOR { *c / sv } else { 0.0 };
    }
    let beta = v * coef;
    let mut alpha = Vec::with_capacity(m);
    alpha.push(1.0 - beta.sum());
    alpha.extend(beta.iter().copied());
    alpha
}

/// One-class SVM without kernel: maximize `b` subject to `S(i,:) w >= b` and
/// `|w| <= 1`, solved as the distance from the origin to the convex hull of
/// the rows. The returned `b` is the smallest achieved margin, so the
/// constraints hold exactly for the returned `w`.
pub fn one_class_svm(s: &Matrix) -> Result<ConeSolution> {
    one_class_svm_detailed(s).map(|(sol, _)| sol)
}

pub(crate) fn one_class_svm_detailed(s: &Matrix) -> Result<(ConeSolution, MinNormPoint)> {
    if s.nrows() == 0 {
        return Err(Error::Dimension("one-class SVM needs at least one row".into()));
    }
    for i in 0..s.nrows() {
        let norm = s.row(i).norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnitRows { row: i, norm });
        }
    }
    let mnp = min_norm_point(s)?;
    let norm = mnp.point.norm();
    if norm < DEGENERATE_MARGIN {
        return Err(Error::DegenerateCone { margin: norm });
    }
    let w = &mnp.point / norm;
    let b = (s * &w).min();
    Ok((ConeSolution { w, b }, mnp))
}

/// Closed-form hyperplane through the K corner rows:
/// `b = 1 / sqrt(1' G^-1 1)` and `w = b * S_C' G^-1 1` with `G = S_C S_C'`.
pub fn ideal_cone_solution(corners: &Matrix) -> Result<ConeSolution> {
    let k = corners.nrows();
    if k == 0 {
        return Err(Error::Dimension("no corner rows".into()));
    }
    let gram = crate::linalg::gram_rows(corners);
    let ones = DVector::from_element(k, 1.0);
    let g = gram
        .lu()
        .solve(&ones)
        .ok_or_else(|| Error::IllConditionedCorners {
            condition: f64::INFINITY,
        })?;
    let negative: Vec<usize> = g
        .iter()
        .enumerate()
        .filter(|(_, &x)| x <= 0.0)
        .map(|(i, _)| i)
        .collect();
    if !negative.is_empty() {
        return Err(Error::ConeCondition { negative });
    }
    let b = 1.0 / g.sum().sqrt();
    let w = corners.tr_mul(&g) * b;
    Ok(ConeSolution { w, b })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_unit_axes() {
        let s = Matrix::identity(2, 2);
        let sol = one_class_svm(&s).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((sol.b - h).abs() < 1e-12);
        assert!((sol.w[0] - h).abs() < 1e-12 && (sol.w[1] - h).abs() < 1e-12);
        let closed = ideal_cone_solution(&s).unwrap();
        assert!((closed.b - h).abs() < 1e-15);
    }

    #[test]
    fn repeated_direction() {
        let s = Matrix::from_row_slice(3, 2, &[0.6, 0.8, 0.6, 0.8, 0.6, 0.8]);
        let sol = one_class_svm(&s).unwrap();
        assert!((sol.b - 1.0).abs() < 1e-12);
        assert!((sol.w[0] - 0.6).abs() < 1e-12 && (sol.w[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn identity_closed_form() {
        for k in 1..6 {
            let sol = ideal_cone_solution(&Matrix::identity(k, k)).unwrap();
            let r = 1.0 / (k as f64).sqrt();
            assert!((sol.b - r).abs() < 1e-15);
            assert!(sol.w.iter().all(|w| (w - r).abs() < 1e-15));
        }
    }

    #[test]
    fn single_corner_closed_form() {
        let u = Matrix::from_row_slice(1, 3, &[0.0, 0.6, 0.8]);
        let sol = ideal_cone_solution(&u).unwrap();
        assert!((sol.b - 1.0).abs() < 1e-15);
        assert!((sol.w[1] - 0.6).abs() < 1e-15 && (sol.w[2] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn origin_in_hull_is_degenerate() {
        let s = Matrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]);
        assert!(matches!(one_class_svm(&s), Err(Error::DegenerateCone { .. })));
    }

    #[test]
    fn rejects_non_unit_rows() {
        let s = Matrix::from_row_slice(1, 2, &[2.0, 0.0]);
        assert!(matches!(one_class_svm(&s), Err(Error::NotUnitRows { row: 0, .. })));
    }

    #[test]
    fn obtuse_corners_violate_cone_condition() {
        // Corners 150 degrees apart plus one in between: (G^-1 1) has a negative entry.
        let a = 0.0f64;
        let b = 150f64.to_radians();
        let c = 75f64.to_radians();
        let corners = Matrix::from_row_slice(
            3,
            3,
            &[a.cos(), a.sin(), 0.0, b.cos(), b.sin(), 0.0, c.cos() * 0.5, c.sin() * 0.5, 0.75f64.sqrt()],
        );
        match ideal_cone_solution(&corners) {
            Err(Error::ConeCondition { negative }) => assert!(!negative.is_empty()),
            other => panic!("unexpected {other:?}"),
        }
    }
}
