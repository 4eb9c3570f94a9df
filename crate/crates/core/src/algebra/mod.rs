//! Hermitian matrix algebra: the von Neumann algebra M = M_n(C) with the standard trace.

pub mod jacobi;
pub mod lattice;
pub mod matrix;
pub mod spectral;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use jacobi::{eigh, SpectralData};
pub use matrix::{CMatrix, C64};
pub use spectral::{Bound, Interval};

use crate::error::{NcczError, Result};

/// An n×n Hermitian matrix; symmetrized on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianElement(CMatrix);

impl HermitianElement {
    pub fn new(m: CMatrix) -> Self {
        HermitianElement(m.hermitian_part())
    }
    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }
    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
    pub fn dim(&self) -> usize {
        self.0.dim()
    }
    pub fn spectral(&self) -> Result<SpectralData> {
        eigh(&self.0)
    }
    pub fn spectral_projection(&self, interval: Interval) -> Result<ProjectionElement> {
        spectral::spectral_projection(&self.0, interval).map(ProjectionElement)
    }
    pub fn schatten_norm(&self, p: f64) -> Result<f64> {
        spectral::schatten_norm(&self.0, p)
    }
    pub fn abs(&self) -> Result<HermitianElement> {
        spectral::abs_herm(&self.0).map(HermitianElement)
    }
}

/// An orthogonal projector, stored re-orthogonalized.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionElement(CMatrix);

impl ProjectionElement {
    /// Snap an approximate projector; fails if it is not within 1e−6 of one.
    pub fn new(m: CMatrix) -> Result<Self> {
        if lattice::projection_defect(&m) > 1e-6 {
            return Err(NcczError::InvalidArgument("matrix is not a projection".into()));
        }
        Ok(ProjectionElement(lattice::reorthogonalize(&m)?))
    }
    pub fn identity(n: usize) -> Self {
        ProjectionElement(CMatrix::identity(n))
    }
    pub fn zero(n: usize) -> Self {
        ProjectionElement(CMatrix::zeros(n))
    }
    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }
    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
    pub fn rank(&self) -> usize {
        lattice::rank(&self.0)
    }
    pub fn complement(&self) -> Self {
        ProjectionElement(lattice::complement(&self.0))
    }
    pub fn meet(&self, other: &Self) -> Result<Self> {
        lattice::meet(&self.0, &other.0).map(ProjectionElement)
    }
    pub fn join(&self, other: &Self) -> Result<Self> {
        lattice::join(&self.0, &other.0).map(ProjectionElement)
    }
}

/// JSON literal: array of rows, entries either numbers or [re, im] pairs.
pub fn matrix_from_json(v: &Value) -> Result<CMatrix> {
    let rows = v.as_array().ok_or_else(|| NcczError::Parse("matrix must be an array of rows".into()))?;
    let n = rows.len();
    let mut data = Vec::with_capacity(n * n);
    for row in rows {
        let row = row.as_array().ok_or_else(|| NcczError::Parse("matrix row must be an array".into()))?;
        if row.len() != n {
            return Err(NcczError::Parse(format!("matrix is not square: row of length {} in {n}x{n}", row.len())));
        }
        for e in row {
            data.push(entry_from_json(e)?);
        }
    }
    Ok(CMatrix::from_vec(n, data))
}

fn entry_from_json(e: &Value) -> Result<C64> {
    if let Some(x) = e.as_f64() {
        return Ok(C64::new(x, 0.0));
    }
    match e.as_array().map(|a| a.as_slice()) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(C64::new(re, im)),
            _ => Err(NcczError::Parse(format!("bad complex entry {e}"))),
        },
        _ => Err(NcczError::Parse(format!("bad complex entry {e}"))),
    }
}

pub fn matrix_to_json(m: &CMatrix) -> Value {
    let n = m.dim();
    Value::Array(
        (0..n)
            .map(|i| Value::Array((0..n).map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im])).collect()))
            .collect(),
    )
}

/// Serde adapter for the matrix literal format.
pub mod matrix_literal {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_json(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        let v = Value::deserialize(d)?;
        matrix_from_json(&v).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let m = CMatrix::from_vec(2, vec![C64::new(1.0, 0.0), C64::new(0.1, -2.5), C64::new(0.1, 2.5), C64::new(-3.0, 0.0)]);
        let v = matrix_to_json(&m);
        assert_eq!(matrix_from_json(&v).unwrap(), m);
        let plain: Value = serde_json::from_str("[[1, 2], [2, 1]]").unwrap();
        assert_eq!(matrix_from_json(&plain).unwrap(), CMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 1.0]]));
    }

    #[test]
    fn projection_element_snaps() {
        let p = ProjectionElement::new(CMatrix::from_real_diag(&[1.0 + 1e-9, 0.0])).unwrap();
        assert_eq!(p.rank(), 1);
        assert!(ProjectionElement::new(CMatrix::from_real_diag(&[0.5, 0.0])).is_err());
    }
}
