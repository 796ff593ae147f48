//! File formats: tab-separated edge lists, membership CSVs, fit diagnostics
//! and experiment tables. Every writer replaces its target atomically.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::estimator::MembershipEstimate;
use crate::experiments::ExperimentResult;
use crate::linalg::{BinaryAdjacency, Matrix};

const PMF_READ_TOL: f64 = 1e-9;

pub const EXPERIMENT_HEADER: &str =
    "knob,mean_row_mhamm,se_row,mean_col_mhamm,se_col,reps_ok,reps_failed,mean_nrA,mean_ncA";

/// Shortest decimal form of `x` rounded to 12 significant digits.
pub fn format_sig12(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("valid float literal");
    format!("{rounded}")
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn read_edge_list(path: &Path) -> Result<BinaryAdjacency> {
    parse_edge_list(&read_text(path)?, path)
}

/// Parses `#dims n_r n_c` followed by `i<TAB>j` lines; other lines starting
/// with `#` and blank lines are skipped. `path` only labels errors.
pub fn parse_edge_list(text: &str, path: &Path) -> Result<BinaryAdjacency> {
    let mut dims: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if let Some(rest) = line.strip_prefix("#dims") {
            if dims.is_some() {
                return Err(parse_err(path, line_no, "repeated #dims header"));
            }
            let parts: Vec<&str> = rest.split_whitespace().collect();
            let parsed = match parts.as_slice() {
                [r, c] => r.parse().ok().zip(c.parse().ok()),
                _ => None,
            };
            dims = Some(parsed.ok_or_else(|| parse_err(path, line_no, "expected \"#dims n_r n_c\""))?);
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let (n_r, n_c) = dims.ok_or_else(|| parse_err(path, line_no, "edge before the #dims header"))?;
        let mut fields = line.split('\t');
        let (i, j) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => match (a.trim().parse::<usize>(), b.trim().parse::<usize>()) {
                (Ok(i), Ok(j)) => (i, j),
                _ => return Err(parse_err(path, line_no, format!("malformed edge {line:?}"))),
            },
            _ => return Err(parse_err(path, line_no, format!("expected \"i<TAB>j\", found {line:?}"))),
        };
        if i >= n_r || j >= n_c {
            return Err(parse_err(
                path,
                line_no,
                format!("edge ({i}, {j}) out of bounds for {n_r}x{n_c}"),
            ));
        }
        if !seen.insert((i, j)) {
            return Err(parse_err(path, line_no, format!("duplicate edge ({i}, {j})")));
        }
        edges.push((i, j));
    }
    let (n_r, n_c) = dims.ok_or_else(|| parse_err(path, 1, "missing #dims header"))?;
    BinaryAdjacency::from_edges(n_r, n_c, &edges)
}

pub fn edge_list_text(a: &BinaryAdjacency) -> String {
    let mut out = format!("#dims {} {}\n", a.nrows(), a.ncols());
    for (i, j) in a.edges() {
        writeln!(out, "{i}\t{j}").expect("write to string");
    }
    out
}

pub fn write_edge_list(path: &Path, a: &BinaryAdjacency) -> Result<()> {
    write_atomic(path, &edge_list_text(a))
}

pub fn membership_csv_text(pi: &Matrix) -> String {
    let mut out = String::from("node");
    for k in 1..=pi.ncols() {
        write!(out, ",k{k}").expect("write to string");
    }
    out.push('\n');
    for i in 0..pi.nrows() {
        write!(out, "{i}").expect("write to string");
        for x in pi.row(i).iter() {
            write!(out, ",{}", format_sig12(*x)).expect("write to string");
        }
        out.push('\n');
    }
    out
}

pub fn write_membership_csv(path: &Path, pi: &Matrix) -> Result<()> {
    write_atomic(path, &membership_csv_text(pi))
}

pub fn read_membership_csv(path: &Path) -> Result<Matrix> {
    parse_membership_csv(&read_text(path)?, path)
}

/// Parses a membership CSV; rows must be listed in node order and each must
/// sum to one within 1e-9.
pub fn parse_membership_csv(text: &str, path: &Path) -> Result<Matrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let cols: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
    let k = cols.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("node".to_string())
        .chain((1..=k).map(|c| format!("k{c}")))
        .collect();
    if k == 0 || cols != expected {
        return Err(parse_err(path, 1, "expected header \"node,k1,...,kK\""));
    }
    let mut data = Vec::new();
    let mut n = 0;
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != k + 1 {
            return Err(parse_err(path, line_no, format!("expected {} fields, found {}", k + 1, fields.len())));
        }
        if fields[0].parse::<usize>().ok() != Some(n) {
            return Err(parse_err(path, line_no, format!("expected node {n}, found {:?}", fields[0])));
        }
        let row: Vec<f64> = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(path, line_no, format!("bad weight: {e}")))?;
        let sum: f64 = row.iter().sum();
        if row.iter().any(|&x| !x.is_finite() || x < 0.0) || (sum - 1.0).abs() > PMF_READ_TOL {
            return Err(parse_err(path, line_no, format!("weights do not form a PMF (sum {sum})")));
        }
        data.extend(row);
        n += 1;
    }
    Ok(Matrix::from_row_slice(n, k, &data))
}

fn join_indices(idx: &[usize]) -> String {
    idx.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

/// Plain `key: value` summary of a fit.
pub fn diagnostics_text(est: &MembershipEstimate) -> String {
    let d = &est.diagnostics;
    let theta = &est.theta_r_hat;
    let mut out = String::new();
    let mut line = |k: &str, v: String| writeln!(out, "{k}: {v}").expect("write to string");
    line("k", est.pi_r_hat.ncols().to_string());
    line("n_r", est.pi_r_hat.nrows().to_string());
    line("n_c", est.pi_c_hat.nrows().to_string());
    line(
        "singular_values",
        d.singular_values.iter().map(|s| format_sig12(*s)).collect::<Vec<_>>().join(" "),
    );
    line("row_corners", join_indices(est.i_r_hat.as_slice()));
    line("col_corners", join_indices(est.i_c_hat.as_slice()));
    line("col_corners_search_order", join_indices(&d.i_c_search));
    line("row_corner_condition", format_sig12(d.condition_r));
    line("col_corner_condition", format_sig12(d.condition_c));
    line("cone_margin", format_sig12(d.cone_b));
    line("cone_gamma", format_sig12(d.cone_gamma));
    line("cone_gamma_step", d.cone_step.to_string());
    line("clamped_corner_scaling", join_indices(&d.clamped_j));
    line("zero_rows_r", d.zero_rows_r.len().to_string());
    line("zero_rows_c", d.zero_rows_c.len().to_string());
    if !theta.is_empty() {
        let min = theta.iter().copied().fold(f64::INFINITY, f64::min);
        let max = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = theta.iter().sum::<f64>() / theta.len() as f64;
        line("theta_r_hat_min", format_sig12(min));
        line("theta_r_hat_mean", format_sig12(mean));
        line("theta_r_hat_max", format_sig12(max));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipFiles {
    pub pi_r: PathBuf,
    pub pi_c: PathBuf,
    pub diagnostics: PathBuf,
}

/// Writes `pi_r.csv`, `pi_c.csv` and `diagnostics.txt` into `dir`.
pub fn write_memberships(est: &MembershipEstimate, dir: &Path) -> Result<MembershipFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = MembershipFiles {
        pi_r: dir.join("pi_r.csv"),
        pi_c: dir.join("pi_c.csv"),
        diagnostics: dir.join("diagnostics.txt"),
    };
    write_membership_csv(&files.pi_r, &est.pi_r_hat)?;
    write_membership_csv(&files.pi_c, &est.pi_c_hat)?;
    write_atomic(&files.diagnostics, &diagnostics_text(est))?;
    Ok(files)
}

/// One row per knob value under [`EXPERIMENT_HEADER`].
pub fn experiment_csv_text(result: &ExperimentResult) -> String {
    let mut out = format!("{EXPERIMENT_HEADER}\n");
    for s in &result.summaries {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            format_sig12(s.knob),
            format_sig12(s.mean_row_mhamm),
            format_sig12(s.se_row),
            format_sig12(s.mean_col_mhamm),
            format_sig12(s.se_col),
            s.reps_ok,
            s.reps_failed,
            format_sig12(s.mean_n_r_kept),
            format_sig12(s.mean_n_c_kept),
        )
        .expect("write to string");
    }
    out
}

/// Per-repetition table; failed repetitions carry their error message.
pub fn repetitions_csv_text(result: &ExperimentResult) -> String {
    let mut out = String::from("knob,repetition,seed,n_r_kept,n_c_kept,row_mhamm,col_mhamm,error\n");
    for r in &result.records {
        let (nr, nc) = r.kept.map_or((String::new(), String::new()), |(a, b)| (a.to_string(), b.to_string()));
        let (row, col, err) = match &r.outcome {
            Ok((a, b)) => (format_sig12(*a), format_sig12(*b), String::new()),
            Err(e) => (String::new(), String::new(), format!("\"{}\"", e.replace('"', "'"))),
        };
        writeln!(
            out,
            "{},{},{},{nr},{nc},{row},{col},{err}",
            format_sig12(r.knob),
            r.repetition,
            r.seed
        )
        .expect("write to string");
    }
    out
}

pub fn write_experiment_csv(path: &Path, result: &ExperimentResult) -> Result<()> {
    write_atomic(path, &experiment_csv_text(result))
}
