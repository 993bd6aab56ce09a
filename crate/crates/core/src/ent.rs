//! Entanglement classes of basis vectors and the census of a basis set.
//!
//! A vector of n = 2 or 3 qutrits is classified from the Schmidt ranks across
//! its bipartitions (`1|2` for two qutrits; `1|23`, `2|13`, `3|12` for three).
//! A basis takes the largest class among its vectors.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::cxla::{singular_values, ComplexMatrix, TOL_RANK};
use crate::error::{Error, Result};
use crate::mub::Basis;

use num_complex::Complex64 as C64;

/// Number of singular values above [`TOL_RANK`] of the `d_a × d_b` reshaping.
pub fn schmidt_rank(v: &[C64], dims: (usize, usize)) -> Result<usize> {
    let (da, db) = dims;
    if v.len() != da * db {
        return Err(Error::Dimension(format!(
            "vector of length {} cannot be split as {da} x {db}",
            v.len()
        )));
    }
    let m = ComplexMatrix::from_fn(da, db, |i, j| v[i * db + j]);
    Ok(singular_values(&m).into_iter().filter(|&s| s > TOL_RANK).count())
}

/// Reorders a 3-qutrit vector so `qutrit` (1-based) becomes the most
/// significant digit, keeping the other two in order.
fn bring_to_front(v: &[C64], qutrit: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); 27];
    for (index, &amp) in v.iter().enumerate() {
        let digits = [index / 9, (index / 3) % 3, index % 3];
        let front = digits[qutrit - 1];
        let rest: Vec<usize> = (0..3).filter(|&q| q != qutrit - 1).map(|q| digits[q]).collect();
        out[front * 9 + rest[0] * 3 + rest[1]] = amp;
    }
    out
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntanglementClass {
    FullySeparable,
    Biseparable,
    GenuinelyEntangled,
}

impl fmt::Display for EntanglementClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EntanglementClass::FullySeparable => "fully-separable",
            EntanglementClass::Biseparable => "biseparable",
            EntanglementClass::GenuinelyEntangled => "genuinely-entangled",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VectorClass {
    pub class: EntanglementClass,
    /// For biseparable vectors, the qutrit that splits off (1-based).
    pub separable_qutrit: Option<usize>,
    /// Schmidt rank per bipartition: `[1|2]` or `[1|23, 2|13, 3|12]`.
    pub schmidt_ranks: Vec<usize>,
}

pub fn classify_vector(v: &[C64], n_qutrits: usize) -> Result<VectorClass> {
    let ranks = match n_qutrits {
        2 => vec![schmidt_rank(v, (3, 3))?],
        3 => {
            if v.len() != 27 {
                return Err(Error::Dimension(format!(
                    "vector of length {} is not a 3-qutrit state",
                    v.len()
                )));
            }
            (1..=3)
                .map(|q| schmidt_rank(&bring_to_front(v, q), (3, 9)))
                .collect::<Result<Vec<_>>>()?
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "entanglement classes for {n_qutrits} qutrits (2 or 3 supported)"
            )))
        }
    };
    let product_cuts: Vec<usize> = ranks
        .iter()
        .enumerate()
        .filter(|(_, &r)| r == 1)
        .map(|(i, _)| i + 1)
        .collect();
    let (class, separable_qutrit) = if product_cuts.len() == ranks.len() {
        (EntanglementClass::FullySeparable, None)
    } else if product_cuts.len() == 1 {
        (EntanglementClass::Biseparable, Some(product_cuts[0]))
    } else {
        (EntanglementClass::GenuinelyEntangled, None)
    };
    Ok(VectorClass {
        class,
        separable_qutrit,
        schmidt_ranks: ranks,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BasisClass {
    pub label: String,
    pub class: EntanglementClass,
    /// Whether every vector of the basis has the same class.
    pub uniform: bool,
    /// Distinct Schmidt-rank tuples with the number of vectors showing each.
    pub ranks_summary: Vec<RankCount>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankCount {
    pub ranks: Vec<usize>,
    pub vectors: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct StructureCensus {
    pub n_qutrits: usize,
    /// `[separable, entangled]` for two qutrits,
    /// `[separable, biseparable, genuinely entangled]` for three.
    pub structure: Vec<usize>,
    pub per_basis: Vec<BasisClass>,
}

impl StructureCensus {
    pub fn count(&self, class: EntanglementClass) -> usize {
        self.per_basis.iter().filter(|b| b.class == class).count()
    }

    pub fn all_uniform(&self) -> bool {
        self.per_basis.iter().all(|b| b.uniform)
    }
}

pub fn classify_basis(basis: &Basis, n_qutrits: usize) -> Result<BasisClass> {
    let classes: Vec<VectorClass> = basis
        .vectors
        .iter()
        .map(|v| classify_vector(v, n_qutrits))
        .collect::<Result<_>>()?;
    let class = classes.iter().map(|c| c.class).max().unwrap_or(EntanglementClass::FullySeparable);
    let uniform = classes.iter().all(|c| c.class == class);
    let mut ranks_summary: Vec<RankCount> = Vec::new();
    for c in &classes {
        match ranks_summary.iter_mut().find(|r| r.ranks == c.schmidt_ranks) {
            Some(entry) => entry.vectors += 1,
            None => ranks_summary.push(RankCount {
                ranks: c.schmidt_ranks.clone(),
                vectors: 1,
            }),
        }
    }
    ranks_summary.sort_by(|a, b| a.ranks.cmp(&b.ranks));
    Ok(BasisClass {
        label: basis.label.clone(),
        class,
        uniform,
        ranks_summary,
    })
}

/// Classifies every basis and counts bases per class.
pub fn census(bases: &[Basis], n_qutrits: usize) -> Result<StructureCensus> {
    if !(2..=3).contains(&n_qutrits) {
        return Err(Error::Unsupported(format!(
            "census for {n_qutrits} qutrit(s): there is no bipartition to test"
        )));
    }
    let dim = 3usize.pow(n_qutrits as u32);
    if let Some(b) = bases.iter().find(|b| b.dim() != dim) {
        return Err(Error::Dimension(format!(
            "basis '{}' has dimension {}, expected {dim}",
            b.label,
            b.dim()
        )));
    }
    let per_basis: Vec<BasisClass> = bases
        .par_iter()
        .map(|b| classify_basis(b, n_qutrits))
        .collect::<Result<_>>()?;
    let count = |c| per_basis.iter().filter(|b| b.class == c).count();
    let separable = count(EntanglementClass::FullySeparable);
    let biseparable = count(EntanglementClass::Biseparable);
    let genuine = count(EntanglementClass::GenuinelyEntangled);
    let structure = if n_qutrits == 2 {
        vec![separable, biseparable + genuine]
    } else {
        vec![separable, biseparable, genuine]
    };
    Ok(StructureCensus {
        n_qutrits,
        structure,
        per_basis,
    })
}
