//! JSON problem files.
//!
//! ```json
//! {
//!   "dim": 2,
//!   "precision": "fp64",
//!   "dt": 0.1,
//!   "drift": [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-0.5, 0.0]]],
//!   "controls": [ ... ],
//!   "amplitudes": { "pts": 10, "data": [[0.1], [0.2], ...] }
//! }
//! ```
//!
//! Matrices are row-major nested arrays of `[re, im]` pairs. Amplitudes are given
//! inline as `data` (one row per sample) or as `csv`, a path to a sidecar file
//! with one column per control and one row per sample. Relative paths resolve
//! against the manifest's directory. `precision` is optional.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{ControlAmplitudes, ControlSystem};
use crate::linalg::{Matrix, MatrixBatch, Precision};

/// Nested `[re, im]` representation of a complex square matrix.
pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeSource {
    pub pts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<Precision>,
    pub dt: f64,
    pub drift: JsonMatrix,
    #[serde(default)]
    pub controls: Vec<JsonMatrix>,
    pub amplitudes: AmplitudeSource,
}

/// A parsed and validated problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub system: ControlSystem,
    pub amplitudes: ControlAmplitudes,
    pub precision: Option<Precision>,
}

pub fn matrix_from_json(dim: usize, rows: &JsonMatrix, name: &str) -> Result<Matrix<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Parse(format!("{name}: expected a {dim}×{dim} matrix")));
    }
    let data = rows
        .iter()
        .flatten()
        .map(|&[re, im]| Complex64::new(re, im))
        .collect();
    Matrix::from_vec(dim, data)
}

pub fn matrix_to_json(m: &Matrix<f64>) -> JsonMatrix {
    m.as_slice()
        .chunks(m.dim())
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn batch_to_json(b: &MatrixBatch<f64>) -> Vec<JsonMatrix> {
    b.to_matrices().iter().map(matrix_to_json).collect()
}

/// Read a sidecar amplitude table. A first row that does not parse as numbers
/// is taken as a header.
pub fn read_amplitude_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().filter(|f| !f.is_empty()).map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if line == 0 => continue,
            Err(e) => {
                return Err(Error::Parse(format!(
                    "{} row {}: {e}",
                    path.display(),
                    line + 1
                )))
            }
        }
    }
    Ok(rows)
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("manifest: {e}")))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Build the system and amplitude table. `base` resolves a relative `csv` path.
    pub fn into_problem(self, base: &Path) -> Result<Problem> {
        if self.dim == 0 {
            return Err(Error::Parse("manifest: dim must be positive".into()));
        }
        let drift = matrix_from_json(self.dim, &self.drift, "drift")?;
        let controls = self
            .controls
            .iter()
            .enumerate()
            .map(|(k, m)| matrix_from_json(self.dim, m, &format!("controls[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        let n = controls.len();
        let system = ControlSystem::new(drift, controls)?;

        let AmplitudeSource { pts, data, csv } = self.amplitudes;
        let rows = match (data, csv) {
            (Some(rows), None) => rows,
            (None, Some(path)) => read_amplitude_csv(&base.join(path))?,
            (None, None) if n == 0 => vec![Vec::new(); pts],
            _ => {
                return Err(Error::Parse(
                    "manifest: amplitudes need exactly one of `data` or `csv`".into(),
                ))
            }
        };
        if rows.len() != pts {
            return Err(Error::Parse(format!(
                "manifest: amplitudes.pts = {pts} but {} rows supplied",
                rows.len()
            )));
        }
        let amplitudes = ControlAmplitudes::from_rows(self.dt, n, &rows)?;
        Ok(Problem {
            system,
            amplitudes,
            precision: self.precision,
        })
    }
}

pub fn load_problem(path: &Path) -> Result<Problem> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        context: path.display().to_string(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    Manifest::from_json(&text)?.into_problem(base)
}
