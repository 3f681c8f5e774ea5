//! CSV records and their reading and writing.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One class of an estimated relative spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub i: usize,
    pub mean: f64,
    pub stderr: f64,
    #[serde(rename = "M")]
    pub reps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactRecord {
    pub i: usize,
    #[serde(rename = "E_Li")]
    pub expected_length: f64,
    #[serde(rename = "phi_i")]
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    #[serde(rename = "N")]
    pub pop_size: usize,
    pub c_hat: f64,
    pub c_hat_se: f64,
    /// `C_κ^N ĉ_N`.
    pub compensated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRecord {
    pub b: usize,
    pub config: String,
    pub total_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRecord {
    pub i: usize,
    pub mean_a: f64,
    pub stderr_a: f64,
    pub mean_b: f64,
    pub stderr_b: f64,
    pub diff: f64,
    /// `diff / sqrt(stderr_a² + stderr_b²)`.
    pub z: f64,
}

pub fn write_records<T: Serialize, W: Write>(rows: &[T], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes to `path`, or to standard output when `path` is `None`.
pub fn write_csv<T: Serialize>(rows: &[T], path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            write_records(rows, std::fs::File::create(p)?)
        }
        None => write_records(rows, std::io::stdout().lock()),
    }
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

/// Reads either a spectrum estimate or an exact spectrum as
/// `(i, mean, stderr)` rows; exact values carry a zero standard error.
pub fn read_curve(path: &Path) -> Result<Vec<(usize, f64, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().any(|h| h == "phi_i") {
        let rows: Vec<ExactRecord> = read_csv(path)?;
        Ok(rows.into_iter().map(|e| (e.i, e.phi, 0.0)).collect())
    } else if headers.iter().any(|h| h == "mean") {
        let rows: Vec<EstimateRecord> = read_csv(path)?;
        Ok(rows.into_iter().map(|e| (e.i, e.mean, e.stderr)).collect())
    } else {
        Err(Error::Config(format!(
            "{} is neither a spectrum nor an exact-spectrum CSV",
            path.display()
        )))
    }
}

/// Class-by-class difference of two curves with its z-score.
pub fn compare_curves(a: &[(usize, f64, f64)], b: &[(usize, f64, f64)]) -> Result<Vec<CompareRecord>> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.0 != y.0) {
        return Err(Error::Config("curves cover different classes".into()));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(&(i, ma, sa), &(_, mb, sb))| {
            let diff = ma - mb;
            let se = (sa * sa + sb * sb).sqrt();
            let z = if se > 0.0 {
                diff / se
            } else if diff == 0.0 {
                0.0
            } else {
                diff.signum() * f64::INFINITY
            };
            CompareRecord {
                i,
                mean_a: ma,
                stderr_a: sa,
                mean_b: mb,
                stderr_b: sb,
                diff,
                z,
            }
        })
        .collect())
}
