//! JSON interchange formats.
//!
//! Operators are written as `{"dim": d, "re": [[..]], "im": [[..]]}` with
//! row-major nested arrays of doubles. `serde_json` prints doubles with the
//! shortest representation that round-trips, so files carry full binary
//! precision.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::operator::{CMatrix, CVector, HermitianOperator, StateVector, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let n = m.nrows();
        MatrixJson {
            dim: n,
            re: (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect(),
            im: (0..n).map(|i| (0..n).map(|j| m[(i, j)].im).collect()).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.dim;
        let rows_ok = self.re.len() == n
            && self.im.len() == n
            && self.re.iter().chain(self.im.iter()).all(|r| r.len() == n);
        if !rows_ok {
            return Err(Error::InvalidParameter(format!(
                "operator JSON rows do not match dim {n}"
            )));
        }
        Ok(CMatrix::from_fn(n, n, |i, j| C64::new(self.re[i][j], self.im[i][j])))
    }
}

impl Serialize for HermitianOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(self.matrix()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(d)?;
        let m = raw.to_matrix().map_err(serde::de::Error::custom)?;
        HermitianOperator::new(m).map_err(serde::de::Error::custom)
    }
}

/// `#[serde(with = "crate::io::cmatrix")]` for general complex matrices.
pub mod cmatrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        MatrixJson::deserialize(d)?
            .to_matrix()
            .map_err(serde::de::Error::custom)
    }
}

/// `#[serde(with = "crate::io::cmatrix_vec")]`.
pub mod cmatrix_vec {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[CMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<MatrixJson> = ms.iter().map(MatrixJson::from_matrix).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CMatrix>, D::Error> {
        Vec::<MatrixJson>::deserialize(d)?
            .iter()
            .map(|m| m.to_matrix().map_err(serde::de::Error::custom))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorJson {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl VectorJson {
    pub fn from_vector(v: &CVector) -> Self {
        VectorJson {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }

    pub fn to_vector(&self) -> Result<CVector> {
        if self.re.len() != self.im.len() {
            return Err(Error::DimensionMismatch {
                expected: self.re.len(),
                found: self.im.len(),
            });
        }
        Ok(CVector::from_iterator(
            self.re.len(),
            self.re.iter().zip(&self.im).map(|(&r, &i)| C64::new(r, i)),
        ))
    }
}

impl Serialize for StateVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VectorJson::from_vector(self.amplitudes()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for StateVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = VectorJson::deserialize(d)?;
        let v = raw.to_vector().map_err(serde::de::Error::custom)?;
        StateVector::new(v).map_err(serde::de::Error::custom)
    }
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")
        .map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", path.display())))
}

pub fn read_operator(path: impl AsRef<Path>) -> Result<HermitianOperator> {
    read_json(path)
}

/// Formats a double with 12 significant digits, as used in CSV output.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.11e}")
}
