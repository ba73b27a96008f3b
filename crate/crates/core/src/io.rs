//! Serialized forms of matrices and eigensystems. Complex numbers are
//! `[re, im]` pairs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{ComplexMatrix, MatrixError};
use crate::spectral::EigenSystem;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

pub fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().copied().map(pair).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    /// Row-major.
    pub entries: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        Self {
            dim: m.dim(),
            entries: pairs(m.as_slice()),
        }
    }
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = MatrixError;

    fn try_from(m: MatrixJson) -> Result<Self, Self::Error> {
        ComplexMatrix::from_row_major(m.dim, m.entries.iter().map(|p| Complex64::new(p[0], p[1])).collect())
    }
}

pub fn matrix_to_json(m: &ComplexMatrix) -> String {
    serde_json::to_string(&MatrixJson::from(m)).expect("plain data serializes")
}

pub fn matrix_from_json(s: &str) -> Result<ComplexMatrix, IoError> {
    let m: MatrixJson = serde_json::from_str(s)?;
    Ok(ComplexMatrix::try_from(m)?)
}

/// `re+imi` with an explicit sign on the imaginary part.
pub fn format_complex(z: Complex64) -> String {
    format!("{}{}{}i", z.re, if z.im.is_sign_negative() { "-" } else { "+" }, z.im.abs())
}

/// One row per line, cells separated by two spaces.
pub fn matrix_to_text(m: &ComplexMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.dim() {
        let row: Vec<String> = m.row(i).iter().map(|z| format_complex(*z)).collect();
        out.push_str(&row.join("  "));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSystemJson {
    pub eigenvalues: Vec<[f64; 2]>,
    pub residuals: Vec<f64>,
    pub biorth_norms: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub right_vectors: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub left_vectors: Option<Vec<Vec<[f64; 2]>>>,
}

impl EigenSystemJson {
    pub fn new(es: &EigenSystem, with_vectors: bool) -> Self {
        let vecs = |vs: &[Vec<Complex64>]| vs.iter().map(|v| pairs(v)).collect();
        Self {
            eigenvalues: pairs(&es.eigenvalues),
            residuals: es.residuals.clone(),
            biorth_norms: pairs(&es.biorth_norms),
            right_vectors: with_vectors.then(|| vecs(&es.right_vectors)),
            left_vectors: with_vectors.then(|| vecs(&es.left_vectors)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_ssh;

    #[test]
    fn matrix_json_round_trip() {
        let h = build_ssh(6, 2.0, 0.25).unwrap();
        let s = matrix_to_json(&h);
        assert!(s.starts_with("{\"dim\":6,\"entries\":[[0.0,0.25],[1.0,0.0]"));
        assert_eq!(matrix_from_json(&s).unwrap(), h);
        assert!(matrix_from_json("{\"dim\":2,\"entries\":[[1,0]]}").is_err());
        assert!(matrix_from_json("not json").is_err());
    }

    #[test]
    fn text_table() {
        let h = build_ssh(4, 2.0, 0.5).unwrap();
        let t = matrix_to_text(&h);
        assert_eq!(t.lines().count(), 4);
        assert_eq!(t.lines().next().unwrap(), "0+0.5i  1+0i  0+0i  0+0i");
        assert!(t.lines().last().unwrap().ends_with("0-0.5i"));
    }

    #[test]
    fn eigensystem_json_optional_vectors() {
        let h = build_ssh(4, 2.0, 0.5).unwrap();
        let es = crate::spectral::eig(&h, 1e-11).unwrap();
        let plain = serde_json::to_string(&EigenSystemJson::new(&es, false)).unwrap();
        assert!(!plain.contains("right_vectors"));
        let full = EigenSystemJson::new(&es, true);
        assert_eq!(full.right_vectors.unwrap().len(), 4);
    }
}
