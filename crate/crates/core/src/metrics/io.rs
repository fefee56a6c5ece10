//! Distance matrices on disk: `PREFIX.csv` holds `state_i,state_j,distance`
//! rows for `j ≤ i`, `PREFIX.json` the run metadata.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{DistanceMatrix, Method};
use crate::matrix::SquareMatrix;
use crate::numfmt;

#[derive(Debug, Error)]
pub enum DistanceFileError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("metadata error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad distance file: {0}")]
    Format(String),
}

/// Sidecar metadata of a distance file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceMetadata {
    pub method: Method,
    pub c: f64,
    pub tol: Option<f64>,
    pub iterations: usize,
    pub certified_bound: Option<f64>,
    pub seed: Option<u64>,
    pub n_states: usize,
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `PREFIX.csv` and `PREFIX.json`; returns both paths.
pub fn write_distance(d: &DistanceMatrix, prefix: impl AsRef<Path>) -> Result<(PathBuf, PathBuf), DistanceFileError> {
    let prefix = prefix.as_ref();
    let csv_path = with_ext(prefix, ".csv");
    let json_path = with_ext(prefix, ".json");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["state_i", "state_j", "distance"])?;
    for i in 0..d.n() {
        for j in 0..=i {
            w.write_record([i.to_string(), j.to_string(), numfmt::real(d.get(i, j))])?;
        }
    }
    w.flush()?;
    let mut f = fs::File::create(&json_path)?;
    f.write_all(numfmt::to_json_string(&d.metadata())?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok((csv_path, json_path))
}

/// Reads a lower-triangle distance CSV back into a full symmetric matrix.
pub fn read_distance_csv(path: impl AsRef<Path>) -> Result<SquareMatrix, DistanceFileError> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["state_i", "state_j", "distance"] {
        return Err(DistanceFileError::Format(format!("unexpected header {header:?}")));
    }
    let mut entries = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let parse_err = |what: &str| DistanceFileError::Format(format!("bad {what} in record {rec:?}"));
        let i: usize = rec[0].parse().map_err(|_| parse_err("state_i"))?;
        let j: usize = rec[1].parse().map_err(|_| parse_err("state_j"))?;
        let v: f64 = rec[2].parse().map_err(|_| parse_err("distance"))?;
        if j > i {
            return Err(DistanceFileError::Format(format!("entry ({i}, {j}) is above the diagonal")));
        }
        if !(v >= 0.0 && v.is_finite()) {
            return Err(DistanceFileError::Format(format!("distance ({i}, {j}) = {v} is not a finite nonnegative number")));
        }
        entries.push((i, j, v));
    }
    let n = entries.iter().map(|&(i, _, _)| i + 1).max().unwrap_or(0);
    if entries.len() != n * (n + 1) / 2 {
        return Err(DistanceFileError::Format(format!(
            "{} entries cannot fill the lower triangle of {n} states",
            entries.len()
        )));
    }
    let mut seen = vec![false; n * n];
    let mut d = SquareMatrix::zeros(n);
    for (i, j, v) in entries {
        if std::mem::replace(&mut seen[i * n + j], true) {
            return Err(DistanceFileError::Format(format!("duplicate entry ({i}, {j})")));
        }
        d.set(i, j, v);
        d.set(j, i, v);
    }
    Ok(d)
}

pub fn read_metadata(path: impl AsRef<Path>) -> Result<DistanceMetadata, DistanceFileError> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
