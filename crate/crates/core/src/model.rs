//! The directed degree-corrected mixed membership model: parameters,
//! validation, population matrix, sampling and isolated-node pruning.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{BinaryAdjacency, Matrix};
use crate::rng;

const PMF_TOL: f64 = 1e-12;
const PURE_TOL: f64 = 1e-12;
const RANK_TOL: f64 = 1e-10;
/// Slack on the `Omega <= 1` invariant for rounding in mixed rows.
pub const PROBABILITY_SLACK: f64 = 1e-12;

/// Parameters of one model instance. `theta_r` holds the row-node degree
/// heterogeneity; column nodes have none.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub k: usize,
    pub p: Matrix,
    pub pi_r: Matrix,
    pub pi_c: Matrix,
    pub theta_r: Vec<f64>,
}

impl ModelParams {
    pub fn n_r(&self) -> usize {
        self.pi_r.nrows()
    }

    pub fn n_c(&self) -> usize {
        self.pi_c.nrows()
    }

    pub fn p_max(&self) -> f64 {
        self.p.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Reads the plain-array form used by config files.
    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let k = spec.k;
        let p = rows_to_matrix("p", &spec.p, k)?;
        if p.nrows() != k {
            return Err(Error::Config(format!("p must have {k} rows, found {}", p.nrows())));
        }
        let pi_r = rows_to_matrix("pi_r", &spec.pi_r, k)?;
        let pi_c = rows_to_matrix("pi_c", &spec.pi_c, k)?;
        if spec.theta_r.len() != pi_r.nrows() {
            return Err(Error::Config(format!(
                "theta_r has {} entries but pi_r has {} rows",
                spec.theta_r.len(),
                pi_r.nrows()
            )));
        }
        Ok(Self {
            k,
            p,
            pi_r,
            pi_c,
            theta_r: spec.theta_r.clone(),
        })
    }

    pub fn to_spec(&self) -> ModelSpec {
        ModelSpec {
            k: self.k,
            p: matrix_to_rows(&self.p),
            pi_r: matrix_to_rows(&self.pi_r),
            pi_c: matrix_to_rows(&self.pi_c),
            theta_r: self.theta_r.clone(),
        }
    }
}

/// Serializable form of [`ModelParams`] with nested row arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub k: usize,
    pub p: Vec<Vec<f64>>,
    pub pi_r: Vec<Vec<f64>>,
    pub pi_c: Vec<Vec<f64>>,
    pub theta_r: Vec<f64>,
}

fn rows_to_matrix(name: &str, rows: &[Vec<f64>], k: usize) -> Result<Matrix> {
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != k) {
        return Err(Error::Config(format!(
            "{name} row {i} has {} entries, expected {k}",
            r.len()
        )));
    }
    Ok(Matrix::from_fn(rows.len(), k, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// One pure node per community, lowest index first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PureNodeIndex {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Shape(String),
    NonFinite(&'static str),
    NegativeP { k: usize, l: usize },
    UnitDiagonal { k: usize, value: f64 },
    RankP { sigma_k: f64 },
    RowPmf { side: Side, node: usize },
    NoPureNode { side: Side, community: usize },
    NonPositiveTheta { node: usize },
    ProbabilityOverflow { row: usize, col: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Row,
    Column,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Row => "row",
            Side::Column => "column",
        })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape(msg) => write!(f, "shape: {msg}"),
            Violation::NonFinite(what) => write!(f, "{what} has non-finite entries"),
            Violation::NegativeP { k, l } => write!(f, "P({k},{l}) is negative"),
            Violation::UnitDiagonal { k, value } => {
                write!(f, "(I1) unit diagonal violated at k={k} (P({k},{k}) = {value})")
            }
            Violation::RankP { sigma_k } => {
                write!(f, "(I1) rank(P) < K (smallest singular value {sigma_k:e})")
            }
            Violation::RowPmf { side, node } => {
                write!(f, "{side} membership of node {node} is not a PMF")
            }
            Violation::NoPureNode { side, community } => {
                write!(f, "(I2) {side} community {community} has no pure node")
            }
            Violation::NonPositiveTheta { node } => write!(f, "theta_r({node}) is not positive"),
            Violation::ProbabilityOverflow { row, col, value } => {
                write!(f, "Omega({row},{col}) = {value} exceeds 1")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Present whenever every community on both sides has a pure node.
    pub pure: Option<PureNodeIndex>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<PureNodeIndex> {
        if self.violations.is_empty() {
            Ok(self.pure.expect("valid report carries pure nodes"))
        } else {
            let msgs: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
            Err(Error::InvalidModel(msgs.join("; ")))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            writeln!(f, "status: pass")?;
        } else {
            writeln!(f, "status: fail")?;
            for v in &self.violations {
                writeln!(f, "violation: {v}")?;
            }
        }
        if let Some(pure) = &self.pure {
            writeln!(f, "pure_rows: {:?}", pure.rows)?;
            writeln!(f, "pure_cols: {:?}", pure.cols)?;
        }
        Ok(())
    }
}

/// Lowest-index pure node of each community; `None` entries mark communities
/// without one.
fn pure_nodes(pi: &Matrix) -> Vec<Option<usize>> {
    let mut found = vec![None; pi.ncols()];
    for i in 0..pi.nrows() {
        for k in 0..pi.ncols() {
            if found[k].is_none() && pi[(i, k)] >= 1.0 - PURE_TOL {
                found[k] = Some(i);
            }
        }
    }
    found
}

fn row_is_pmf(pi: &Matrix, i: usize) -> bool {
    let row = pi.row(i);
    row.iter().all(|&x| x >= 0.0) && (row.sum() - 1.0).abs() <= PMF_TOL
}

pub fn validate(params: &ModelParams) -> ValidationReport {
    let mut violations = Vec::new();
    let k = params.k;
    let shapes_ok = params.p.nrows() == k
        && params.p.ncols() == k
        && params.pi_r.ncols() == k
        && params.pi_c.ncols() == k
        && params.theta_r.len() == params.n_r()
        && k > 0
        && params.n_r() > 0
        && params.n_c() > 0;
    if !shapes_ok {
        violations.push(Violation::Shape(format!(
            "K={k}, P {}x{}, Pi_r {}x{}, Pi_c {}x{}, theta_r {}",
            params.p.nrows(),
            params.p.ncols(),
            params.pi_r.nrows(),
            params.pi_r.ncols(),
            params.pi_c.nrows(),
            params.pi_c.ncols(),
            params.theta_r.len()
        )));
        return ValidationReport {
            violations,
            pure: None,
        };
    }
    let finite = [
        ("P", params.p.iter().all(|x| x.is_finite())),
        ("Pi_r", params.pi_r.iter().all(|x| x.is_finite())),
        ("Pi_c", params.pi_c.iter().all(|x| x.is_finite())),
        ("theta_r", params.theta_r.iter().all(|x| x.is_finite())),
    ];
    for (name, ok) in finite {
        if !ok {
            violations.push(Violation::NonFinite(name));
        }
    }
    if !violations.is_empty() {
        return ValidationReport {
            violations,
            pure: None,
        };
    }

    for a in 0..k {
        for b in 0..k {
            if params.p[(a, b)] < 0.0 {
                violations.push(Violation::NegativeP { k: a, l: b });
            }
        }
        if params.p[(a, a)] != 1.0 {
            violations.push(Violation::UnitDiagonal {
                k: a,
                value: params.p[(a, a)],
            });
        }
    }
    let sigma_k = crate::linalg::singular_values(&params.p).last().copied().unwrap_or(0.0);
    if sigma_k <= RANK_TOL {
        violations.push(Violation::RankP { sigma_k });
    }
    for (side, pi) in [(Side::Row, &params.pi_r), (Side::Column, &params.pi_c)] {
        for i in 0..pi.nrows() {
            if !row_is_pmf(pi, i) {
                violations.push(Violation::RowPmf { side, node: i });
            }
        }
    }
    for (i, &t) in params.theta_r.iter().enumerate() {
        if t <= 0.0 {
            violations.push(Violation::NonPositiveTheta { node: i });
        }
    }
    let rows = pure_nodes(&params.pi_r);
    let cols = pure_nodes(&params.pi_c);
    for (side, found) in [(Side::Row, &rows), (Side::Column, &cols)] {
        for (community, f) in found.iter().enumerate() {
            if f.is_none() {
                violations.push(Violation::NoPureNode { side, community });
            }
        }
    }
    if let Err(Error::ProbabilityOverflow { row, col, value }) = population_matrix(params) {
        violations.push(Violation::ProbabilityOverflow { row, col, value });
    }
    let pure = match (
        rows.into_iter().collect::<Option<Vec<_>>>(),
        cols.into_iter().collect::<Option<Vec<_>>>(),
    ) {
        (Some(rows), Some(cols)) => Some(PureNodeIndex { rows, cols }),
        _ => None,
    };
    ValidationReport { violations, pure }
}

/// `Omega = Theta_r Pi_r P Pi_c'`; errors on the first entry above 1.
pub fn population_matrix(params: &ModelParams) -> Result<Matrix> {
    let mut omega = &params.pi_r * &params.p * params.pi_c.transpose();
    for (i, &t) in params.theta_r.iter().enumerate() {
        omega.row_mut(i).scale_mut(t);
    }
    for i in 0..omega.nrows() {
        for j in 0..omega.ncols() {
            let value = omega[(i, j)];
            if value > 1.0 + PROBABILITY_SLACK {
                return Err(Error::ProbabilityOverflow { row: i, col: j, value });
            }
        }
    }
    Ok(omega)
}

/// Independent Bernoulli draws, row-major, one uniform per entry from the
/// stream keyed by `seed`: `A(i,j) = 1` iff `u < Omega(i,j)`.
pub fn sample_adjacency(omega: &Matrix, seed: u64) -> Result<BinaryAdjacency> {
    for i in 0..omega.nrows() {
        for j in 0..omega.ncols() {
            let value = omega[(i, j)];
            if !(0.0..=1.0 + PROBABILITY_SLACK).contains(&value) {
                return Err(Error::ProbabilityDomain { row: i, col: j, value });
            }
        }
    }
    let mut rng = rng::stream(seed);
    let mut edges = Vec::new();
    for i in 0..omega.nrows() {
        for j in 0..omega.ncols() {
            if rng::unit_uniform(&mut rng) < omega[(i, j)] {
                edges.push((i, j));
            }
        }
    }
    BinaryAdjacency::from_edges(omega.nrows(), omega.ncols(), &edges)
}

/// Output of [`prune_isolated`].
#[derive(Debug, Clone, PartialEq)]
pub struct Pruned {
    pub adjacency: BinaryAdjacency,
    pub pi_r: Matrix,
    pub pi_c: Matrix,
    /// `kept_rows[new] = old`
    pub kept_rows: Vec<usize>,
    pub kept_cols: Vec<usize>,
    /// `row_map[old] = Some(new)` for surviving rows.
    pub row_map: Vec<Option<usize>>,
    pub col_map: Vec<Option<usize>>,
}

/// Drops row nodes with no outgoing edges and column nodes with no incoming
/// edges, filtering the membership matrices to match.
pub fn prune_isolated(a: &BinaryAdjacency, pi_r: &Matrix, pi_c: &Matrix) -> Result<Pruned> {
    if pi_r.nrows() != a.nrows() || pi_c.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "adjacency {}x{} does not match memberships with {} and {} rows",
            a.nrows(),
            a.ncols(),
            pi_r.nrows(),
            pi_c.nrows()
        )));
    }
    let kept_rows: Vec<usize> = (0..a.nrows()).filter(|&i| !a.row(i).is_empty()).collect();
    let kept_cols: Vec<usize> = a
        .col_sums()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0)
        .map(|(j, _)| j)
        .collect();
    if kept_rows.is_empty() || kept_cols.is_empty() {
        return Err(Error::DegenerateNetwork(
            "no edges remain after removing isolated nodes".into(),
        ));
    }
    let mut row_map = vec![None; a.nrows()];
    for (new, &old) in kept_rows.iter().enumerate() {
        row_map[old] = Some(new);
    }
    let mut col_map = vec![None; a.ncols()];
    for (new, &old) in kept_cols.iter().enumerate() {
        col_map[old] = Some(new);
    }
    Ok(Pruned {
        adjacency: a.submatrix(&kept_rows, &kept_cols),
        pi_r: crate::linalg::select_rows(pi_r, &kept_rows),
        pi_c: crate::linalg::select_rows(pi_c, &kept_cols),
        kept_rows,
        kept_cols,
        row_map,
        col_map,
    })
}

/// Divides `theta_r` by `max(P)` so that `max Omega <= 1` when `theta_r <= 1`.
pub fn scale_theta_for_pmax(params: &ModelParams) -> Result<ModelParams> {
    let p_max = params.p_max();
    if !(p_max > 0.0) {
        return Err(Error::InvalidModel(format!("P_max = {p_max} must be positive")));
    }
    let mut out = params.clone();
    if p_max != 1.0 {
        for t in &mut out.theta_r {
            *t /= p_max;
        }
    }
    population_matrix(&out)?;
    Ok(out)
}
