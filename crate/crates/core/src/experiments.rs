//! Simulation harness: the reference parameter grids, the seeded
//! sample / prune / fit / score loop, and aggregation per knob value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::fit_dimsc;
use crate::linalg::Matrix;
use crate::metrics::mixed_hamming;
use crate::model::{population_matrix, prune_isolated, sample_adjacency, scale_theta_for_pmax, validate, ModelParams};
use crate::rng::{derive_seed, stream, unit_uniform};

pub const DEFAULT_N_R: usize = 500;
pub const DEFAULT_N_C: usize = 600;
pub const DEFAULT_N0: usize = 80;
pub const DEFAULT_Z: f64 = 5.0;
pub const DEFAULT_RHO: f64 = 1.0;
pub const DEFAULT_REPETITIONS: usize = 10;
/// Full-scale repetition count.
pub const FULL_REPETITIONS: usize = 50;
const K: usize = 3;
const NEAR_SINGULAR_BETA: f64 = 0.05;
/// Second seed coordinate reserved for the per-knob degree draw.
const THETA_STREAM: u64 = u64::MAX;

/// Connectivity shared by every experiment except the connectivity sweep.
pub const DEFAULT_P: [[f64; 3]; 3] = [[1.0, 0.1, 0.3], [0.2, 1.0, 0.4], [0.5, 0.2, 1.0]];

/// Mixed-membership blocks following the pure blocks, in layout order.
pub const MIXED_WEIGHTS: [[f64; 3]; 4] = [
    [0.4, 0.4, 0.2],
    [0.4, 0.2, 0.4],
    [0.2, 0.4, 0.4],
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    /// Knob: pure nodes per community, `n0`.
    PureFraction,
    /// Knob: upper end `z` of the inverse degree distribution.
    DegreeHeterogeneity,
    /// Knob: `beta` in `P = (2 - beta) I + (beta - 1) 11'`.
    Connectivity,
    /// Knob: degree scale `rho`.
    Sparsity,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 4] = [
        ExperimentId::PureFraction,
        ExperimentId::DegreeHeterogeneity,
        ExperimentId::Connectivity,
        ExperimentId::Sparsity,
    ];

    pub fn reference_grid(self) -> Vec<f64> {
        match self {
            ExperimentId::PureFraction => (1..=8).map(|i| 20.0 * i as f64).collect(),
            ExperimentId::DegreeHeterogeneity => (1..=8).map(|i| i as f64).collect(),
            ExperimentId::Connectivity => (0..=10).map(|i| 1.0 + 0.3 * i as f64).collect(),
            ExperimentId::Sparsity => (2..=10).map(|i| i as f64 / 10.0).collect(),
        }
    }

    pub fn knob_name(self) -> &'static str {
        match self {
            ExperimentId::PureFraction => "n0",
            ExperimentId::DegreeHeterogeneity => "z",
            ExperimentId::Connectivity => "beta",
            ExperimentId::Sparsity => "rho",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::PureFraction => "pure_fraction",
            ExperimentId::DegreeHeterogeneity => "degree_heterogeneity",
            ExperimentId::Connectivity => "connectivity",
            ExperimentId::Sparsity => "sparsity",
        }
    }
}

impl std::str::FromStr for ExperimentId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

/// Changes to the default simulation settings. The swept knob always wins
/// over the matching override.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Overrides {
    pub n_r: Option<usize>,
    pub n_c: Option<usize>,
    pub n0: Option<usize>,
    pub z: Option<f64>,
    pub rho: Option<f64>,
    /// Allow mixed blocks of unequal size; leading blocks take the remainder.
    pub uneven_blocks: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: ExperimentId,
    pub knob_values: Vec<f64>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub overrides: Overrides,
}

fn default_repetitions() -> usize {
    DEFAULT_REPETITIONS
}

impl ExperimentConfig {
    /// The reference grid for `id` at the desk-scale repetition count.
    pub fn reference(id: ExperimentId, base_seed: u64) -> Self {
        Self {
            id,
            knob_values: id.reference_grid(),
            repetitions: DEFAULT_REPETITIONS,
            base_seed,
            overrides: Overrides::default(),
        }
    }

    /// Checks knob ranges and builds every grid point once. Returns warnings
    /// for knob values that are valid but numerically delicate.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.knob_values.is_empty() {
            return Err(Error::Config("knob_values is empty".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be positive".into()));
        }
        let mut warnings = Vec::new();
        for &x in &self.knob_values {
            if !x.is_finite() {
                return Err(Error::Config(format!("knob value {x} is not finite")));
            }
            match self.id {
                ExperimentId::PureFraction if x < 1.0 || x.fract() != 0.0 => {
                    return Err(Error::Config(format!("n0 = {x} must be a positive integer")));
                }
                ExperimentId::DegreeHeterogeneity if x < 1.0 => {
                    return Err(Error::Config(format!("z = {x} must be at least 1")));
                }
                ExperimentId::Sparsity if !(x > 0.0 && x <= 1.0) => {
                    return Err(Error::Config(format!("rho = {x} must lie in (0, 1]")));
                }
                ExperimentId::Connectivity if (x - 2.0).abs() < NEAR_SINGULAR_BETA => {
                    warnings.push(format!("beta = {x} is within {NEAR_SINGULAR_BETA} of 2: P is near singular"));
                }
                _ => {}
            }
            make_grid_params(self.id, x, &self.overrides, 0)?;
        }
        Ok(warnings)
    }
}

/// Degree parameters `rho / u_i` with `u_i` uniform on `[1, z]`.
pub fn sample_theta(z: f64, rho: f64, n_r: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed);
    (0..n_r)
        .map(|_| rho / (1.0 + (z - 1.0) * unit_uniform(&mut rng)))
        .collect()
}

/// `P = (2 - beta) I + (beta - 1) 11'`
pub fn connectivity_matrix(beta: f64) -> Matrix {
    Matrix::from_fn(K, K, |a, b| if a == b { 1.0 } else { beta - 1.0 })
}

/// Membership layout: `n0` pure nodes per community, then the four mixed
/// blocks of [`MIXED_WEIGHTS`] on contiguous ranges.
pub fn block_memberships(n: usize, n0: usize, uneven: bool) -> Result<Matrix> {
    let pure = K * n0;
    if pure > n {
        return Err(Error::Config(format!("{pure} pure nodes exceed {n} nodes")));
    }
    let mixed = n - pure;
    let blocks = MIXED_WEIGHTS.len();
    if mixed % blocks != 0 && !uneven {
        return Err(Error::Config(format!(
            "{mixed} mixed nodes do not split into {blocks} equal blocks"
        )));
    }
    let mut pi = Matrix::zeros(n, K);
    for c in 0..K {
        for i in c * n0..(c + 1) * n0 {
            pi[(i, c)] = 1.0;
        }
    }
    let mut start = pure;
    for (b, w) in MIXED_WEIGHTS.iter().enumerate() {
        let size = mixed / blocks + usize::from(b < mixed % blocks);
        for i in start..start + size {
            for c in 0..K {
                pi[(i, c)] = w[c];
            }
        }
        start += size;
    }
    Ok(pi)
}

/// Fully specified parameters for one grid point, with degrees rescaled by
/// `max(P)` so every edge probability stays at most one.
pub fn make_grid_params(id: ExperimentId, knob: f64, overrides: &Overrides, theta_seed: u64) -> Result<ModelParams> {
    let n_r = overrides.n_r.unwrap_or(DEFAULT_N_R);
    let n_c = overrides.n_c.unwrap_or(DEFAULT_N_C);
    let mut n0 = overrides.n0.unwrap_or(DEFAULT_N0);
    let mut z = overrides.z.unwrap_or(DEFAULT_Z);
    let mut rho = overrides.rho.unwrap_or(DEFAULT_RHO);
    let mut p = Matrix::from_fn(K, K, |a, b| DEFAULT_P[a][b]);
    match id {
        ExperimentId::PureFraction => n0 = knob as usize,
        ExperimentId::DegreeHeterogeneity => z = knob,
        ExperimentId::Connectivity => p = connectivity_matrix(knob),
        ExperimentId::Sparsity => rho = knob,
    }
    let params = ModelParams {
        k: K,
        p,
        pi_r: block_memberships(n_r, n0, overrides.uneven_blocks)?,
        pi_c: block_memberships(n_c, n0, overrides.uneven_blocks)?,
        theta_r: sample_theta(z, rho, n_r, theta_seed),
    };
    let scaled = scale_theta_for_pmax(&params)?;
    validate(&scaled).into_result()?;
    Ok(scaled)
}

/// Connectivity of [`geometry_demo_params`].
pub const DEMO_P: [[f64; 3]; 3] = [[1.0, 0.4, 0.3], [0.2, 1.0, 0.1], [0.1, 0.4, 1.0]];

/// 600 row and 400 column nodes, 120 pure nodes per community on each
/// side. Mixed nodes draw `(u1 / 2, u2 / 2, 1 - u1 / 2 - u2 / 2)` and every
/// row degree is uniform on `(0, 1)`.
pub fn geometry_demo_params(seed: u64) -> ModelParams {
    let mut rng = stream(seed);
    let mut u = move || loop {
        let x = unit_uniform(&mut rng);
        if x > 0.0 {
            return x;
        }
    };
    let pure = |n: usize| Matrix::from_fn(n, K, |i, c| if i < K * 120 && i / 120 == c { 1.0 } else { 0.0 });
    let mut pi_r = pure(600);
    let mut pi_c = pure(400);
    for pi in [&mut pi_r, &mut pi_c] {
        for i in K * 120..pi.nrows() {
            let (a, b) = (u() / 2.0, u() / 2.0);
            pi[(i, 0)] = a;
            pi[(i, 1)] = b;
            pi[(i, 2)] = 1.0 - a - b;
        }
    }
    ModelParams {
        k: K,
        p: Matrix::from_fn(K, K, |a, b| DEMO_P[a][b]),
        pi_r,
        pi_c,
        theta_r: (0..600).map(|_| u()).collect(),
    }
}

/// Random valid instance: K in 2..=4, shuffled node order, unit-diagonal P
/// with off-diagonals in [0, 0.9), degrees in [0.1, 1).
pub fn random_params(seed: u64) -> ModelParams {
    let mut rng = stream(seed);
    let mut u = move || unit_uniform(&mut rng);
    let k = 2 + (u() * 3.0) as usize;
    let p = loop {
        let p = Matrix::from_fn(k, k, |a, b| if a == b { 1.0 } else { 0.9 * u() });
        if crate::linalg::singular_values(&p).last().copied().unwrap_or(0.0) > 1e-2 {
            break p;
        }
    };
    let n_r = 30 + (u() * 50.0) as usize;
    let n_c = 30 + (u() * 50.0) as usize;
    let mut memberships = |n: usize| {
        let pure = 1 + (u() * 3.0) as usize;
        let mut pi = Matrix::zeros(n, k);
        for i in 0..n {
            if i < k * pure {
                pi[(i, i % k)] = 1.0;
            } else {
                let w: Vec<f64> = (0..k).map(|_| 0.05 + u()).collect();
                let s: f64 = w.iter().sum();
                for c in 0..k {
                    pi[(i, c)] = w[c] / s;
                }
            }
        }
        // Fisher-Yates on rows.
        for i in (1..n).rev() {
            let j = (u() * (i + 1) as f64) as usize;
            pi.swap_rows(i, j);
        }
        pi
    };
    let pi_r = memberships(n_r);
    let pi_c = memberships(n_c);
    drop(memberships);
    let theta_r = (0..n_r).map(|_| 0.1 + 0.9 * u()).collect();
    ModelParams { k, p, pi_r, pi_c, theta_r }
}

/// Outcome of one sample / prune / fit / score cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionRecord {
    pub knob_index: usize,
    pub knob: f64,
    pub repetition: usize,
    pub seed: u64,
    /// Rows and columns left after pruning, when sampling succeeded.
    pub kept: Option<(usize, usize)>,
    pub outcome: std::result::Result<(f64, f64), String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnobSummary {
    pub knob: f64,
    pub mean_row_mhamm: f64,
    pub se_row: f64,
    pub mean_col_mhamm: f64,
    pub se_col: f64,
    pub reps_ok: usize,
    pub reps_failed: usize,
    pub mean_n_r_kept: f64,
    pub mean_n_c_kept: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub summaries: Vec<KnobSummary>,
    pub records: Vec<RepetitionRecord>,
    pub warnings: Vec<String>,
}

/// Seed shared by the sampler and the fit for one repetition.
pub fn repetition_seed(base_seed: u64, knob_index: usize, repetition: usize) -> u64 {
    derive_seed(base_seed, knob_index as u64, repetition as u64)
}

pub fn theta_seed(base_seed: u64, knob_index: usize) -> u64 {
    derive_seed(base_seed, knob_index as u64, THETA_STREAM)
}

/// Grid point parameters exactly as [`run_experiment`] builds them.
pub fn grid_params(config: &ExperimentConfig, knob_index: usize) -> Result<ModelParams> {
    make_grid_params(
        config.id,
        config.knob_values[knob_index],
        &config.overrides,
        theta_seed(config.base_seed, knob_index),
    )
}

/// Runs every repetition of every knob value. Tasks run in parallel and
/// results are reduced in (knob, repetition) order, so the output depends
/// only on the config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let warnings = config.validate()?;
    for w in &warnings {
        log::warn!("{w}");
    }
    let params: Vec<(ModelParams, Matrix)> = (0..config.knob_values.len())
        .map(|i| {
            let p = grid_params(config, i)?;
            let omega = population_matrix(&p)?;
            Ok((p, omega))
        })
        .collect::<Result<_>>()?;
    let tasks: Vec<(usize, usize)> = (0..config.knob_values.len())
        .flat_map(|i| (0..config.repetitions).map(move |r| (i, r)))
        .collect();
    let records: Vec<RepetitionRecord> = tasks
        .par_iter()
        .map(|&(i, r)| {
            let seed = repetition_seed(config.base_seed, i, r);
            let (p, omega) = &params[i];
            let (kept, outcome) = run_repetition(p, omega, seed);
            if let Err(msg) = &outcome {
                log::warn!("knob {} repetition {r} failed: {msg}", config.knob_values[i]);
            }
            RepetitionRecord {
                knob_index: i,
                knob: config.knob_values[i],
                repetition: r,
                seed,
                kept,
                outcome,
            }
        })
        .collect();
    let summaries = config
        .knob_values
        .iter()
        .enumerate()
        .map(|(i, &knob)| summarize(knob, records.iter().filter(|rec| rec.knob_index == i)))
        .collect();
    Ok(ExperimentResult {
        config: config.clone(),
        summaries,
        records,
        warnings,
    })
}

/// Sample, prune, fit and score one network.
pub fn run_repetition(
    params: &ModelParams,
    omega: &Matrix,
    seed: u64,
) -> (Option<(usize, usize)>, std::result::Result<(f64, f64), String>) {
    let pruned = match sample_adjacency(omega, seed).and_then(|a| prune_isolated(&a, &params.pi_r, &params.pi_c)) {
        Ok(p) => p,
        Err(e) => return (None, Err(e.to_string())),
    };
    let kept = Some((pruned.adjacency.nrows(), pruned.adjacency.ncols()));
    let scored = fit_dimsc(&pruned.adjacency, params.k, seed).and_then(|est| {
        let (row, _) = mixed_hamming(&est.pi_r_hat, &pruned.pi_r)?;
        let (col, _) = mixed_hamming(&est.pi_c_hat, &pruned.pi_c)?;
        Ok((row, col))
    });
    (kept, scored.map_err(|e| e.to_string()))
}

fn summarize<'a>(knob: f64, records: impl Iterator<Item = &'a RepetitionRecord>) -> KnobSummary {
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut kept = Vec::new();
    let mut failed = 0;
    for rec in records {
        if let Some(k) = rec.kept {
            kept.push(k);
        }
        match rec.outcome {
            Ok((r, c)) => {
                rows.push(r);
                cols.push(c);
            }
            Err(_) => failed += 1,
        }
    }
    let (mean_row_mhamm, se_row) = mean_se(&rows);
    let (mean_col_mhamm, se_col) = mean_se(&cols);
    let kept_r: Vec<f64> = kept.iter().map(|k| k.0 as f64).collect();
    let kept_c: Vec<f64> = kept.iter().map(|k| k.1 as f64).collect();
    KnobSummary {
        knob,
        mean_row_mhamm,
        se_row,
        mean_col_mhamm,
        se_col,
        reps_ok: rows.len(),
        reps_failed: failed,
        mean_n_r_kept: mean_se(&kept_r).0,
        mean_n_c_kept: mean_se(&kept_c).0,
    }
}

/// Mean and standard error (sample deviation over `sqrt(n)`); NaN mean for
/// no data, zero error for a single value.
fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
