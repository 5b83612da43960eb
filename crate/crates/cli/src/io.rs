// SPDX-License-Identifier: Apache-2.0

//! Input files and number formatting.

use std::fs;
use std::path::{Path, PathBuf};

use gibbs_thermo::{Complex, ComplexSquareMatrix, DensityMatrix, HermitianObservable};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

/// `{"dim": n, "entries": [[re, im], ...]}` in row-major order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixFile {
    pub fn to_matrix(&self) -> Result<ComplexSquareMatrix, Failure> {
        let entries = self.entries.iter().map(|[re, im]| Complex::new(*re, *im)).collect();
        ComplexSquareMatrix::new(self.dim, entries).map_err(Failure::from)
    }
}

/// An input file that took part in a run, with its SHA-256.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: PathBuf,
    pub sha256: String,
}

pub fn read_input(path: &Path, inputs: &mut Vec<InputRecord>) -> Result<Vec<u8>, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    inputs.push(InputRecord {
        path: path.to_path_buf(),
        sha256: sha256_hex(&bytes),
    });
    Ok(bytes)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}

fn parse_matrix(path: &Path, inputs: &mut Vec<InputRecord>) -> Result<ComplexSquareMatrix, Failure> {
    let bytes = read_input(path, inputs)?;
    let file: MatrixFile = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    file.to_matrix()
}

pub fn load_observable(path: &Path, inputs: &mut Vec<InputRecord>) -> Result<HermitianObservable, Failure> {
    HermitianObservable::new(parse_matrix(path, inputs)?).map_err(Failure::from)
}

pub fn load_state(path: &Path, inputs: &mut Vec<InputRecord>) -> Result<DensityMatrix, Failure> {
    DensityMatrix::new(parse_matrix(path, inputs)?).map_err(Failure::from)
}

/// Comma-separated eigenvalues such as `"0,1,1,3"`.
pub fn parse_spectrum(text: &str) -> Result<HermitianObservable, Failure> {
    let values = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::input(format!("bad spectrum {text:?}: {e}")))?;
    HermitianObservable::from_eigenvalues(&values).map_err(Failure::from)
}

/// Round-trippable scientific notation (17 significant digits).
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}
