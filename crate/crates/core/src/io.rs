//! JSON file formats.
//!
//! Complex numbers are written as `[re, im]` pairs. Matrices are lists of
//! rows; basis vectors are written one per entry of `vectors` (the columns of
//! the basis matrix).

use std::fs;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::cxla::ComplexMatrix;
use crate::error::{Error, Result};
use crate::gf::FieldSpec;
use crate::mub::{Basis, MubSet, Provenance};
use crate::tomo::DensityMatrix;

pub type Pair = [f64; 2];

pub fn complex_to_pair(z: C64) -> Pair {
    [z.re, z.im]
}

pub fn pair_to_complex(p: Pair) -> C64 {
    C64::new(p[0], p[1])
}

pub fn matrix_to_rows(m: &ComplexMatrix) -> Vec<Vec<Pair>> {
    (0..m.rows())
        .map(|r| m.row(r).iter().map(|&z| complex_to_pair(z)).collect())
        .collect()
}

pub fn rows_to_matrix(rows: &[Vec<Pair>]) -> Result<ComplexMatrix> {
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Dimension("ragged matrix rows".into()));
    }
    let data = rows.iter().flatten().map(|&p| pair_to_complex(p)).collect();
    ComplexMatrix::from_vec(n, cols, data)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BasisFile {
    pub label: String,
    pub vectors: Vec<Vec<Pair>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MubSetFile {
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub field: Option<FieldSpec>,
    pub bases: Vec<BasisFile>,
}

impl From<&MubSet> for MubSetFile {
    fn from(set: &MubSet) -> Self {
        Self {
            dim: set.dim,
            field: set.field.clone(),
            bases: set
                .bases
                .iter()
                .map(|b| BasisFile {
                    label: b.label.clone(),
                    vectors: b
                        .vectors
                        .iter()
                        .map(|v| v.iter().map(|&z| complex_to_pair(z)).collect())
                        .collect(),
                })
                .collect(),
        }
    }
}

impl MubSetFile {
    pub fn into_set(self) -> Result<MubSet> {
        let provenance = if self.field.is_some() {
            Provenance::FieldConstruction
        } else {
            Provenance::ExplicitFixture
        };
        let bases = self
            .bases
            .into_iter()
            .map(|b| {
                let vectors = b
                    .vectors
                    .into_iter()
                    .map(|v| v.into_iter().map(pair_to_complex).collect())
                    .collect();
                Basis::new_unchecked(b.label, vectors, provenance)
            })
            .collect();
        let mut set = MubSet::new(bases)?;
        if set.dim != self.dim {
            return Err(Error::Dimension(format!(
                "file declares dim {} but vectors have length {}",
                self.dim, set.dim
            )));
        }
        set.field = self.field;
        Ok(set)
    }
}

pub fn write_mub_set(path: &Path, set: &MubSet) -> Result<()> {
    write_json(path, &MubSetFile::from(set))
}

pub fn read_mub_set(path: &Path) -> Result<MubSet> {
    let file: MubSetFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    file.into_set()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DensityMatrixFile {
    pub dim: usize,
    pub matrix: Vec<Vec<Pair>>,
}

impl From<&DensityMatrix> for DensityMatrixFile {
    fn from(rho: &DensityMatrix) -> Self {
        Self {
            dim: rho.dim(),
            matrix: matrix_to_rows(rho.matrix()),
        }
    }
}

impl DensityMatrixFile {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn into_density_matrix(self) -> Result<DensityMatrix> {
        let m = rows_to_matrix(&self.matrix)?;
        if m.rows() != self.dim || m.cols() != self.dim {
            return Err(Error::InvalidState(format!(
                "declared dim {} but matrix is {}x{}",
                self.dim,
                m.rows(),
                m.cols()
            )));
        }
        DensityMatrix::new(m)
    }
}

pub fn write_density_matrix(path: &Path, rho: &DensityMatrix) -> Result<()> {
    write_json(path, &DensityMatrixFile::from(rho))
}

pub fn read_density_matrix(path: &Path) -> Result<DensityMatrix> {
    let file: DensityMatrixFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    file.into_density_matrix()
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
