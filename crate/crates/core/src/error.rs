use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage attached to errors raised inside a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Svd,
    Normalize,
    SimplexHunting,
    ConeHunting,
    Alignment,
    RowRecovery,
    ColumnRecovery,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::Svd => "svd",
            Stage::Normalize => "row normalization",
            Stage::SimplexHunting => "simplex corner hunting",
            Stage::ConeHunting => "cone corner hunting",
            Stage::Alignment => "corner alignment",
            Stage::RowRecovery => "row membership recovery",
            Stage::ColumnRecovery => "column membership recovery",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("rank deficiency: singular value {index} is {value:e} (below 1e-12)")]
    RankDeficient { index: usize, value: f64 },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("probability overflow: Omega({row}, {col}) = {value} exceeds 1")]
    ProbabilityOverflow { row: usize, col: usize, value: f64 },

    #[error("probability domain error: Omega({row}, {col}) = {value} is outside [0, 1]")]
    ProbabilityDomain { row: usize, col: usize, value: f64 },

    #[error("degenerate network: {0}")]
    DegenerateNetwork(String),

    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    #[error("corner deficiency: residual collapsed after {} of {wanted} picks {picks:?}", picks.len())]
    CornerDeficiency { picks: Vec<usize>, wanted: usize },

    #[error("degenerate cone: convex hull of the rows contains the origin (margin {margin:e})")]
    DegenerateCone { margin: f64 },

    #[error("cone condition violated: (S_C S_C')^-1 1 has non-positive components {negative:?}")]
    ConeCondition { negative: Vec<usize> },

    #[error("input rows are not unit norm (row {row} has norm {norm})")]
    NotUnitRows { row: usize, norm: f64 },

    #[error("min-norm solver did not converge in {iterations} iterations (gap {gap:e})")]
    SolverNotConverged { iterations: usize, gap: f64 },

    #[error("insufficient points: {points} points for {clusters} clusters")]
    InsufficientPoints { points: usize, clusters: usize },

    #[error("cone hunting failed to find {k} distinct clusters; margin histogram {histogram:?}")]
    ConeHuntingFailure { k: usize, histogram: Vec<(f64, usize)> },

    #[error("ill-conditioned corner matrix (condition number {condition:e})")]
    IllConditionedCorners { condition: f64 },

    #[error("degenerate rows {rows:?} have zero norm")]
    DegenerateRows { rows: Vec<usize> },

    #[error("{stage}: {source}")]
    InStage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn in_stage(self, stage: Stage) -> Error {
        Error::InStage {
            stage,
            source: Box::new(self),
        }
    }

    /// Strips any stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::InStage { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
