//! JSON document schemas and their conversions to domain values.
//!
//! Structures: {"n": int, "phi": [[..]], "xi": [..], "eta": [..], "g": [[..]]}
//! Bilinear tensors: {"entries": [[..]]}
//! F-tensors: {"entries": [[[..]]]}
//! Transformation parameters: {"u": f, "v": f, "du": [..], "dv": [..]}
//! with an optional "l_dvphi": [[..]] block for subgroup tests.
//!
//! Shape violations are reported with a JSON-pointer to the offending
//! element; numbers survive a serialize/parse round trip bit-exactly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use acmc_core::conformal::{ConformalParams, FTensor};
use acmc_core::linalg::{Metric, Trilinear};
use acmc_core::structure::AcmStructure;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureDoc {
    pub n: usize,
    pub phi: Vec<Vec<f64>>,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub g: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearDoc {
    pub entries: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrilinearDoc {
    pub entries: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsDoc {
    pub u: f64,
    pub v: f64,
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_dvphi: Option<Vec<Vec<f64>>>,
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{path}: {e}")))
}

pub fn render<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::input(format!("cannot render report: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn vector_from(data: &[f64], dim: usize, pointer: &str) -> Result<DVector<f64>, CliError> {
    if data.len() != dim {
        return Err(CliError::input(format!(
            "{pointer}: expected {dim} entries, got {}",
            data.len()
        )));
    }
    Ok(DVector::from_column_slice(data))
}

fn matrix_from(rows: &[Vec<f64>], dim: usize, pointer: &str) -> Result<DMatrix<f64>, CliError> {
    if rows.len() != dim {
        return Err(CliError::input(format!(
            "{pointer}: expected {dim} rows, got {}",
            rows.len()
        )));
    }
    let mut m = DMatrix::zeros(dim, dim);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(CliError::input(format!(
                "{pointer}/{i}: expected {dim} entries, got {}",
                row.len()
            )));
        }
        for (j, &val) in row.iter().enumerate() {
            m[(i, j)] = val;
        }
    }
    Ok(m)
}

fn matrix_to(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn structure_from_doc(doc: &StructureDoc) -> Result<AcmStructure, CliError> {
    if doc.n < 1 {
        return Err(CliError::input("/n: must be at least 1".to_string()));
    }
    let dim = 2 * doc.n + 1;
    let phi = matrix_from(&doc.phi, dim, "/phi")?;
    let xi = vector_from(&doc.xi, dim, "/xi")?;
    let eta = vector_from(&doc.eta, dim, "/eta")?;
    let g = Metric::new(matrix_from(&doc.g, dim, "/g")?)
        .map_err(|e| CliError::input(format!("/g rejected: {e}")))?;
    AcmStructure::new(doc.n, phi, xi, eta, g)
        .map_err(|e| CliError::input(format!("structure document rejected: {e}")))
}

pub fn structure_to_doc(s: &AcmStructure) -> StructureDoc {
    StructureDoc {
        n: s.n(),
        phi: matrix_to(s.phi()),
        xi: s.xi().iter().copied().collect(),
        eta: s.eta().iter().copied().collect(),
        g: matrix_to(s.metric().matrix()),
    }
}

pub fn bilinear_from_doc(doc: &BilinearDoc, dim: usize) -> Result<DMatrix<f64>, CliError> {
    matrix_from(&doc.entries, dim, "/entries")
}

pub fn bilinear_to_doc(m: &DMatrix<f64>) -> BilinearDoc {
    BilinearDoc {
        entries: matrix_to(m),
    }
}

pub fn f_tensor_from_doc(doc: &TrilinearDoc, dim: usize) -> Result<FTensor, CliError> {
    if doc.entries.len() != dim {
        return Err(CliError::input(format!(
            "/entries: expected {dim} blocks, got {}",
            doc.entries.len()
        )));
    }
    let mut t = Trilinear::zeros(dim);
    for (i, block) in doc.entries.iter().enumerate() {
        if block.len() != dim {
            return Err(CliError::input(format!(
                "/entries/{i}: expected {dim} rows, got {}",
                block.len()
            )));
        }
        for (j, row) in block.iter().enumerate() {
            if row.len() != dim {
                return Err(CliError::input(format!(
                    "/entries/{i}/{j}: expected {dim} entries, got {}",
                    row.len()
                )));
            }
            for (k, &val) in row.iter().enumerate() {
                t.set(i, j, k, val);
            }
        }
    }
    FTensor::new(t).map_err(|e| CliError::input(format!("F-tensor document rejected: {e}")))
}

pub fn params_from_doc(doc: &ParamsDoc, dim: usize) -> Result<ConformalParams, CliError> {
    let du = vector_from(&doc.du, dim, "/du")?;
    let dv = vector_from(&doc.dv, dim, "/dv")?;
    ConformalParams::new(doc.u, doc.v, du, dv)
        .map_err(|e| CliError::input(format!("parameter document rejected: {e}")))
}

pub fn optional_l_dvphi(
    doc: &ParamsDoc,
    dim: usize,
) -> Result<Option<DMatrix<f64>>, CliError> {
    match &doc.l_dvphi {
        None => Ok(None),
        Some(rows) => Ok(Some(matrix_from(rows, dim, "/l_dvphi")?)),
    }
}
