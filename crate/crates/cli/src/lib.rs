//! Command-line front end: `simulate`, `fit`, `eval`, `experiment` and
//! `validate`. Exit code 0 on success, 1 on usage errors, 2 on data or
//! model errors.

mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use dimsc::experiments::{grid_params, repetition_seed};
use dimsc::io::{
    read_edge_list, read_membership_csv, repetitions_csv_text, write_atomic, write_edge_list, write_experiment_csv,
    write_membership_csv, write_memberships,
};
use dimsc::model::prune_isolated;
use dimsc::{
    fit_dimsc, fit_dimsc_equivalence, mixed_hamming, population_matrix, run_experiment, sample_adjacency, validate,
    Error, ModelParams, Result,
};
use serde::Serialize;

pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dimsc", version, about = "Directed mixed-membership network simulation and spectral fitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a network from a run file and write edges plus true memberships.
    Simulate(SimulateArgs),
    /// Estimate row and column memberships from an edge list.
    Fit(FitArgs),
    /// Compare estimated memberships with the truth.
    Eval(EvalArgs),
    /// Run a simulation grid and write the summary CSV.
    Experiment(ExperimentArgs),
    /// Check a run file and report every violated condition.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    validate_only: bool,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Use the projector-based pipeline.
    #[arg(long)]
    equivalence: bool,
    #[arg(long)]
    validate_only: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Estimated membership CSV; a second occurrence is the column side.
    #[arg(long, required = true, num_args = 1, action = clap::ArgAction::Append)]
    est: Vec<PathBuf>,
    /// True membership CSV, paired with `--est` in order.
    #[arg(long, required = true, num_args = 1, action = clap::ArgAction::Append)]
    truth: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Replaces the base seed of the experiment.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    validate_only: bool,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    config: PathBuf,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Eval(a) => eval(a),
        Command::Experiment(a) => experiment(a),
        Command::Validate(a) => validate_cmd(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

fn simulate(args: SimulateArgs) -> Result<i32> {
    let config = RunConfig::load(&args.config)?;
    let (params, default_seed) = match (&config.model, config.experiment()) {
        (Some(spec), _) => (ModelParams::from_spec(spec)?, config.seed.unwrap_or(0)),
        (None, Some(exp)) => {
            let knob = config.knob_index.unwrap_or(0);
            let rep = config.repetition.unwrap_or(0);
            if knob >= exp.knob_values.len() {
                return Err(Error::Config(format!(
                    "knob_index {knob} out of range for {} knob values",
                    exp.knob_values.len()
                )));
            }
            (grid_params(&exp, knob)?, repetition_seed(exp.base_seed, knob, rep))
        }
        (None, None) => unreachable!("run files carry one table"),
    };
    validate(&params).into_result()?;
    let omega = population_matrix(&params)?;
    if args.validate_only {
        println!("status: pass");
        return Ok(EXIT_OK);
    }
    let seed = args.seed.unwrap_or(default_seed);
    let a = sample_adjacency(&omega, seed)?;
    let pruned = prune_isolated(&a, &params.pi_r, &params.pi_c)?;
    let dir = args.out_dir.or(config.out_dir).unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_edge_list(&dir.join("edges.tsv"), &pruned.adjacency)?;
    write_membership_csv(&dir.join("true_r.csv"), &pruned.pi_r)?;
    write_membership_csv(&dir.join("true_c.csv"), &pruned.pi_c)?;
    let kept = format!(
        "kept_rows: {}\nkept_cols: {}\n",
        join(&pruned.kept_rows),
        join(&pruned.kept_cols)
    );
    write_atomic(&dir.join("kept.txt"), &kept)?;
    println!("seed: {seed}");
    println!("k: {}", params.k);
    println!("n_r: {} of {}", pruned.adjacency.nrows(), params.n_r());
    println!("n_c: {} of {}", pruned.adjacency.ncols(), params.n_c());
    println!("edges: {}", pruned.adjacency.nnz());
    Ok(EXIT_OK)
}

fn join(idx: &[usize]) -> String {
    idx.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

fn fit(args: FitArgs) -> Result<i32> {
    let a = read_edge_list(&args.edges)?;
    if args.k == 0 || args.k > a.nrows().min(a.ncols()) {
        return Err(Error::Dimension(format!(
            "K = {} must lie in 1..={} for a {}x{} network",
            args.k,
            a.nrows().min(a.ncols()),
            a.nrows(),
            a.ncols()
        )));
    }
    if args.validate_only {
        println!("status: pass");
        return Ok(EXIT_OK);
    }
    let est = if args.equivalence {
        fit_dimsc_equivalence(&a, args.k, args.seed)?
    } else {
        fit_dimsc(&a, args.k, args.seed)?
    };
    let files = write_memberships(&est, &args.out_dir)?;
    println!("row_corners: {}", join(est.i_r_hat.as_slice()));
    println!("col_corners: {}", join(est.i_c_hat.as_slice()));
    println!("wrote {}", files.pi_r.display());
    println!("wrote {}", files.pi_c.display());
    println!("wrote {}", files.diagnostics.display());
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct EvalReport {
    row_mhamm: f64,
    best_perm_r: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    col_mhamm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    best_perm_c: Option<Vec<usize>>,
}

fn eval(args: EvalArgs) -> Result<i32> {
    if args.est.len() != args.truth.len() || args.est.len() > 2 {
        eprintln!("error: give one or two --est files, each paired with a --truth file");
        return Ok(EXIT_USAGE);
    }
    let side = |i: usize| -> Result<(f64, Vec<usize>)> {
        mixed_hamming(&read_membership_csv(&args.est[i])?, &read_membership_csv(&args.truth[i])?)
    };
    let (row_mhamm, best_perm_r) = side(0)?;
    let col = if args.est.len() == 2 { Some(side(1)?) } else { None };
    let report = EvalReport {
        row_mhamm,
        best_perm_r,
        col_mhamm: col.as_ref().map(|c| c.0),
        best_perm_c: col.map(|c| c.1),
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("plain data serializes"));
    Ok(EXIT_OK)
}

fn experiment(args: ExperimentArgs) -> Result<i32> {
    let config = RunConfig::load(&args.config)?;
    let mut exp = config.experiment().ok_or_else(|| {
        Error::Config(format!("{}: experiment needs an [experiment] table", args.config.display()))
    })?;
    if let Some(r) = args.reps {
        exp.repetitions = r;
    }
    if let Some(s) = args.seed {
        exp.base_seed = s;
    }
    if args.validate_only {
        for w in exp.validate()? {
            println!("warning: {w}");
        }
        println!("status: pass");
        return Ok(EXIT_OK);
    }
    let result = run_experiment(&exp)?;
    let dir = args.out_dir.or(config.out_dir).unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let stem = stem(&args.config);
    let summary = dir.join(format!("{stem}_results.csv"));
    write_experiment_csv(&summary, &result)?;
    write_atomic(&dir.join(format!("{stem}_repetitions.csv")), &repetitions_csv_text(&result))?;
    for s in &result.summaries {
        println!(
            "{} = {}: row {:.4} (se {:.4}), col {:.4} (se {:.4}), {} ok, {} failed",
            exp.id.knob_name(),
            s.knob,
            s.mean_row_mhamm,
            s.se_row,
            s.mean_col_mhamm,
            s.se_col,
            s.reps_ok,
            s.reps_failed
        );
    }
    println!("wrote {}", summary.display());
    Ok(EXIT_OK)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "experiment".into())
}

fn validate_cmd(args: ValidateArgs) -> Result<i32> {
    let config = RunConfig::load(&args.config)?;
    if let Some(spec) = &config.model {
        let report = validate(&ModelParams::from_spec(spec)?);
        print!("{report}");
        return Ok(if report.is_valid() { EXIT_OK } else { EXIT_DATA });
    }
    let exp = config.experiment().expect("run files carry one table");
    match exp.validate() {
        Ok(warnings) => {
            println!("status: pass");
            for w in warnings {
                println!("warning: {w}");
            }
            Ok(EXIT_OK)
        }
        Err(e) => {
            println!("status: fail");
            println!("violation: {e}");
            Ok(EXIT_DATA)
        }
    }
}
