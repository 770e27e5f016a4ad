//! CSV trace files: one row per simulation step carrying the ground truth,
//! the (latent and clipped) measurements, per-channel censoring flags, and
//! one column block per filter.
//!
//! Column layout, in order:
//!
//! ```text
//! k,x_true_1..n,y_latent_1..m,y_obs_1..m,censored_1..m
//!   then per filter: {f}_xhat_1..n,{f}_sqerr
//!   and for adaptive filters additionally: {f}_qhat_trace,{f}_rhat_1..m
//! ```
//!
//! Flags are `0`/`1`; floats use the shortest decimal that round-trips, so
//! parsing a written file reproduces the in-memory values bit-exactly.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::runner::SeedRun;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {what}")]
    Malformed {
        path: PathBuf,
        line: usize,
        what: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TraceError + '_ {
    move |source| TraceError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write one seed's records to `path`.
pub fn write_trace(run: &SeedRun, path: &Path) -> Result<(), TraceError> {
    let first = run.trajectory.first().ok_or_else(|| TraceError::Malformed {
        path: path.to_path_buf(),
        line: 0,
        what: "cannot write a trace for an empty trajectory".into(),
    })?;
    let n = first.x_true.len();
    let m = first.y_obs.len();

    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut header = String::from("k");
    for i in 1..=n {
        header.push_str(&format!(",x_true_{i}"));
    }
    for i in 1..=m {
        header.push_str(&format!(",y_latent_{i}"));
    }
    for i in 1..=m {
        header.push_str(&format!(",y_obs_{i}"));
    }
    for i in 1..=m {
        header.push_str(&format!(",censored_{i}"));
    }
    for f in &run.filters {
        let label = f.kind.label();
        for i in 1..=n {
            header.push_str(&format!(",{label}_xhat_{i}"));
        }
        header.push_str(&format!(",{label}_sqerr"));
        if f.qhat_trace.is_some() {
            header.push_str(&format!(",{label}_qhat_trace"));
            for i in 1..=m {
                header.push_str(&format!(",{label}_rhat_{i}"));
            }
        }
    }
    writeln!(w, "{header}").map_err(io_err(path))?;

    for (row, step) in run.trajectory.iter().enumerate() {
        let mut line = String::new();
        line.push_str(&step.k.to_string());
        for i in 0..n {
            line.push_str(&format!(",{}", step.x_true[i]));
        }
        for i in 0..m {
            line.push_str(&format!(",{}", step.y_latent[i]));
        }
        for i in 0..m {
            line.push_str(&format!(",{}", step.y_obs[i]));
        }
        for i in 0..m {
            line.push_str(if step.censored[i] { ",1" } else { ",0" });
        }
        for f in &run.filters {
            for i in 0..n {
                line.push_str(&format!(",{}", f.xhat[row][i]));
            }
            line.push_str(&format!(",{}", f.sqerr[row]));
            if let Some(q) = &f.qhat_trace {
                line.push_str(&format!(",{}", q[row]));
                let rhat = &f.rhat.as_ref().expect("qhat and rhat go together")[row];
                for r in rhat {
                    line.push_str(&format!(",{r}"));
                }
            }
        }
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// One filter's column block as declared by a trace header.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedBlock {
    pub label: String,
    /// Whether the block carries noise-estimate columns.
    pub adaptive: bool,
}

/// One parsed row; per-filter vectors are indexed like
/// [`ParsedTrace::blocks`].
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedRow {
    pub k: usize,
    pub x_true: Vec<f64>,
    pub y_latent: Vec<f64>,
    pub y_obs: Vec<f64>,
    pub censored: Vec<bool>,
    pub xhat: Vec<Vec<f64>>,
    pub sqerr: Vec<f64>,
    pub qhat_trace: Vec<Option<f64>>,
    pub rhat: Vec<Option<Vec<f64>>>,
}

/// A fully parsed trace file.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedTrace {
    pub state_dim: usize,
    pub meas_dim: usize,
    pub blocks: Vec<ParsedBlock>,
    pub rows: Vec<ParsedRow>,
}

/// Count how many leading columns continue the 1-based series
/// `{prefix}1, {prefix}2, …` starting at `cols[at]`.
fn series_len(cols: &[&str], at: usize, prefix: &str) -> usize {
    let mut len = 0;
    while let Some(col) = cols.get(at + len) {
        if **col == format!("{prefix}{}", len + 1) {
            len += 1;
        } else {
            break;
        }
    }
    len
}

/// Read a file produced by [`write_trace`] back into memory.
pub fn read_trace(path: &Path) -> Result<ParsedTrace, TraceError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let malformed = |line: usize, what: String| TraceError::Malformed {
        path: path.to_path_buf(),
        line,
        what,
    };

    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| malformed(1, "missing header".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"k") {
        return Err(malformed(1, "first column must be `k`".into()));
    }
    let mut at = 1;
    let n = series_len(&cols, at, "x_true_");
    if n == 0 {
        return Err(malformed(1, "no x_true columns".into()));
    }
    at += n;
    let m = series_len(&cols, at, "y_latent_");
    if m == 0 {
        return Err(malformed(1, "no y_latent columns".into()));
    }
    at += m;
    for prefix in ["y_obs_", "censored_"] {
        if series_len(&cols, at, prefix) != m {
            return Err(malformed(1, format!("expected {m} {prefix} columns")));
        }
        at += m;
    }

    let mut blocks = Vec::new();
    while at < cols.len() {
        let label = cols[at]
            .strip_suffix("_xhat_1")
            .ok_or_else(|| {
                malformed(1, format!("expected a `<filter>_xhat_1` column, got `{}`", cols[at]))
            })?
            .to_string();
        if series_len(&cols, at, &format!("{label}_xhat_")) != n {
            return Err(malformed(1, format!("expected {n} {label}_xhat columns")));
        }
        at += n;
        if cols.get(at) != Some(&format!("{label}_sqerr").as_str()) {
            return Err(malformed(1, format!("expected `{label}_sqerr` column")));
        }
        at += 1;
        let adaptive = cols.get(at) == Some(&format!("{label}_qhat_trace").as_str());
        if adaptive {
            at += 1;
            if series_len(&cols, at, &format!("{label}_rhat_")) != m {
                return Err(malformed(1, format!("expected {m} {label}_rhat columns")));
            }
            at += m;
        }
        blocks.push(ParsedBlock { label, adaptive });
    }
    let width = cols.len();

    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != width {
            return Err(malformed(
                lineno,
                format!("expected {width} cells, got {}", cells.len()),
            ));
        }
        let mut cursor = cells.iter();
        let mut next_f64 = |what: &str| -> Result<f64, TraceError> {
            let cell = cursor.next().expect("width checked above");
            cell.parse::<f64>()
                .map_err(|_| malformed(lineno, format!("bad {what} value `{cell}`")))
        };
        let k = next_f64("k")? as usize;
        let x_true: Vec<f64> = (0..n).map(|_| next_f64("x_true")).collect::<Result<_, _>>()?;
        let y_latent: Vec<f64> =
            (0..m).map(|_| next_f64("y_latent")).collect::<Result<_, _>>()?;
        let y_obs: Vec<f64> = (0..m).map(|_| next_f64("y_obs")).collect::<Result<_, _>>()?;
        let mut censored = Vec::with_capacity(m);
        for _ in 0..m {
            let v = next_f64("censored flag")?;
            if v != 0.0 && v != 1.0 {
                return Err(malformed(lineno, format!("censor flag must be 0 or 1, got {v}")));
            }
            censored.push(v == 1.0);
        }
        let mut xhat = Vec::with_capacity(blocks.len());
        let mut sqerr = Vec::with_capacity(blocks.len());
        let mut qhat_trace = Vec::with_capacity(blocks.len());
        let mut rhat = Vec::with_capacity(blocks.len());
        for block in &blocks {
            xhat.push((0..n).map(|_| next_f64("xhat")).collect::<Result<_, _>>()?);
            sqerr.push(next_f64("sqerr")?);
            if block.adaptive {
                qhat_trace.push(Some(next_f64("qhat_trace")?));
                rhat.push(Some(
                    (0..m).map(|_| next_f64("rhat")).collect::<Result<_, _>>()?,
                ));
            } else {
                qhat_trace.push(None);
                rhat.push(None);
            }
        }
        rows.push(ParsedRow {
            k,
            x_true,
            y_latent,
            y_obs,
            censored,
            xhat,
            sqerr,
            qhat_trace,
            rhat,
        });
    }
    Ok(ParsedTrace {
        state_dim: n,
        meas_dim: m,
        blocks,
        rows,
    })
}
