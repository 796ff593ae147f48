use super::CornerIndexSet;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

const RESIDUAL_FLOOR: f64 = 1e-12;
/// Rows whose squared residual norm is within this relative distance of the
/// maximum count as tied; the lowest index wins.
const TIE_REL: f64 = 1e-10;

/// Successive projection on the rows of `x`: repeatedly pick the row with the
/// largest residual norm, then project every row onto the orthogonal
/// complement of the picked residual.
pub fn successive_projection(x: &Matrix, k: usize) -> Result<CornerIndexSet> {
    let (n, d) = x.shape();
    if k == 0 || k > n.min(d) {
        return Err(Error::Dimension(format!(
            "K = {k} must lie in 1..={} for a {n}x{d} input",
            n.min(d)
        )));
    }
    crate::linalg::check_finite(x)?;
    let mut residual = x.clone();
    let mut picks = Vec::with_capacity(k);
    for _ in 0..k {
        let norms: Vec<f64> = (0..n).map(|i| residual.row(i).norm_squared()).collect();
        let max = norms.iter().copied().fold(0.0, f64::max);
        if max.sqrt() < RESIDUAL_FLOOR {
            return Err(Error::CornerDeficiency {
                picks,
                wanted: k,
            });
        }
        let pick = norms
            .iter()
            .position(|&v| v >= max * (1.0 - TIE_REL))
            .expect("maximum is attained");
        let u = residual.row(pick).transpose();
        let scale = u.norm_squared();
        let coef = &residual * &u;
        residual -= (coef / scale) * u.transpose();
        picks.push(pick);
    }
    CornerIndexSet::new(picks, n)
}
