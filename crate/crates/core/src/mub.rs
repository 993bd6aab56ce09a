//! Complete sets of mutually unbiased bases from finite-field arithmetic.
//!
//! For a field of order d the set consists of the standard basis followed by
//! one basis per field element r, whose k-th vector has components
//!
//! ```text
//! (a_k^(r))_l = ω^Tr(r·l² + k·l) / √d,   ω = exp(2πi/3)
//! ```
//!
//! Indices k and l run over field elements through the [`FieldSpec`]
//! enumeration. Phases are taken from exact cube roots of unity indexed by the
//! integer trace.

use serde::Serialize;

use crate::cxla::{inner, norm, omega, ComplexMatrix, ComplexVector, TOL_EQ};
use crate::error::{Error, Result};
use crate::gf::FieldSpec;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    FieldConstruction,
    GateDecomposition,
    ExplicitFixture,
}

/// An orthonormal basis stored as its column vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    pub label: String,
    pub vectors: Vec<ComplexVector>,
    pub provenance: Provenance,
}

impl Basis {
    /// Builds a basis, checking orthonormality to [`TOL_EQ`].
    pub fn new(label: impl Into<String>, vectors: Vec<ComplexVector>, provenance: Provenance) -> Result<Self> {
        let basis = Self::new_unchecked(label, vectors, provenance);
        let d = basis.dim();
        if basis.vectors.len() != d || basis.vectors.iter().any(|v| v.len() != d) {
            return Err(Error::Dimension(format!(
                "basis '{}' needs {d} vectors of length {d}",
                basis.label
            )));
        }
        let err = basis.orthonormality_error();
        if err > TOL_EQ {
            return Err(Error::NotOrthonormal(err));
        }
        Ok(basis)
    }

    /// Builds a basis without checking it; [`verify_unbiased`] reports any
    /// defect.
    pub fn new_unchecked(label: impl Into<String>, vectors: Vec<ComplexVector>, provenance: Provenance) -> Self {
        Self {
            label: label.into(),
            vectors,
            provenance,
        }
    }

    /// The basis formed by the columns of a square matrix.
    pub fn from_columns(label: impl Into<String>, m: &ComplexMatrix, provenance: Provenance) -> Self {
        Self::new_unchecked(label, m.columns(), provenance)
    }

    pub fn standard(dim: usize) -> Self {
        Self::from_columns("0", &ComplexMatrix::identity(dim), Provenance::FieldConstruction)
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_columns(&self.vectors).expect("basis vectors share a length")
    }

    /// Largest |⟨u_j|u_k⟩ - δ_jk| over all vector pairs.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, u) in self.vectors.iter().enumerate() {
            for (k, v) in self.vectors.iter().enumerate().skip(j) {
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((inner(u, v).norm() - target).abs());
            }
        }
        worst
    }
}

#[derive(Clone, Debug)]
pub struct MubSet {
    pub dim: usize,
    pub bases: Vec<Basis>,
    /// Present when the set came from [`build_field_mubs`].
    pub field: Option<FieldSpec>,
}

impl MubSet {
    pub fn new(bases: Vec<Basis>) -> Result<Self> {
        let dim = bases.first().map_or(0, Basis::dim);
        if let Some(b) = bases.iter().find(|b| b.dim() != dim || b.vectors.len() != dim) {
            return Err(Error::Dimension(format!(
                "basis '{}' does not match dimension {dim}",
                b.label
            )));
        }
        Ok(Self {
            dim,
            bases,
            field: None,
        })
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }
}

/// Builds the d + 1 bases for the field of order d.
///
/// Basis `"0"` is the standard basis. Basis `"i"` for i = 1..=d uses
/// r = `spec.element(i - 1)`, so basis `"1"` (r = 0) is the Fourier basis.
pub fn build_field_mubs(spec: &FieldSpec) -> MubSet {
    let d = spec.order();
    let elements = spec.elements();
    let amp = 1.0 / (d as f64).sqrt();

    // l² and the index table of products are shared by every basis
    let squares: Vec<_> = elements.iter().map(|&l| spec.mul_unchecked(l, l)).collect();
    let trace_of_product: Vec<Vec<u8>> = elements
        .iter()
        .map(|&a| {
            elements
                .iter()
                .map(|&b| spec.trace_unchecked(spec.mul_unchecked(a, b)))
                .collect()
        })
        .collect();
    let square_index: Vec<usize> = squares
        .iter()
        .map(|&s| spec.index_of(s).expect("square lies in the field"))
        .collect();

    let mut bases = Vec::with_capacity(d + 1);
    bases.push(Basis::standard(d));
    for r in 0..d {
        let vectors = (0..d)
            .map(|k| {
                (0..d)
                    .map(|l| {
                        // Tr(r·l² + k·l) = Tr(r·l²) + Tr(k·l)
                        let exponent = trace_of_product[r][square_index[l]] + trace_of_product[k][l];
                        omega(exponent as i64) * amp
                    })
                    .collect()
            })
            .collect();
        bases.push(Basis::new_unchecked(
            (r + 1).to_string(),
            vectors,
            Provenance::FieldConstruction,
        ));
    }
    MubSet {
        dim: d,
        bases,
        field: Some(spec.clone()),
    }
}

/// Worst deviation between one pair of bases.
#[derive(Clone, Debug, Serialize)]
pub struct PairVerdict {
    pub a: String,
    pub b: String,
    pub pass: bool,
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct UnbiasedReport {
    pub dim: usize,
    pub bases: usize,
    /// Orthonormality of each basis, pairs (i, i).
    pub within: Vec<PairVerdict>,
    /// Unbiasedness of each pair i < j.
    pub pairs: Vec<PairVerdict>,
    pub pairs_checked: usize,
    pub pairs_passed: usize,
    pub max_deviation: f64,
    pub pass: bool,
}

impl UnbiasedReport {
    /// Worst cross-basis verdict involving the basis labelled `label`.
    pub fn worst_for(&self, label: &str) -> Option<&PairVerdict> {
        self.pairs
            .iter()
            .filter(|p| p.a == label || p.b == label)
            .max_by(|x, y| x.deviation.total_cmp(&y.deviation))
    }
}

/// Checks |⟨a_j^(s)|a_k^(r)⟩|² against δ_jk (s = r) and 1/d (s ≠ r) for
/// every pair of vectors in the set.
pub fn verify_unbiased(set: &MubSet) -> UnbiasedReport {
    verify_unbiased_with_tol(set, TOL_EQ)
}

pub fn verify_unbiased_with_tol(set: &MubSet, tol: f64) -> UnbiasedReport {
    let d = set.dim;
    let target = 1.0 / d as f64;
    let pair_deviation = |a: &Basis, b: &Basis| -> f64 {
        let mut worst: f64 = 0.0;
        for u in &a.vectors {
            for v in &b.vectors {
                worst = worst.max((inner(u, v).norm_sqr() - target).abs());
            }
        }
        worst
    };

    let within: Vec<PairVerdict> = set
        .bases
        .iter()
        .map(|b| {
            let mut worst: f64 = 0.0;
            for (j, u) in b.vectors.iter().enumerate() {
                for (k, v) in b.vectors.iter().enumerate() {
                    let target = if j == k { 1.0 } else { 0.0 };
                    worst = worst.max((inner(u, v).norm_sqr() - target).abs());
                }
            }
            PairVerdict {
                a: b.label.clone(),
                b: b.label.clone(),
                pass: worst < tol,
                deviation: worst,
            }
        })
        .collect();

    let mut pairs = Vec::new();
    for (i, a) in set.bases.iter().enumerate() {
        for b in &set.bases[i + 1..] {
            let deviation = pair_deviation(a, b);
            pairs.push(PairVerdict {
                a: a.label.clone(),
                b: b.label.clone(),
                pass: deviation < tol,
                deviation,
            });
        }
    }

    let pairs_passed = pairs.iter().filter(|p| p.pass).count();
    let max_deviation = within
        .iter()
        .chain(&pairs)
        .map(|p| p.deviation)
        .fold(0.0, f64::max);
    let pass = within.iter().all(|p| p.pass) && pairs_passed == pairs.len();
    UnbiasedReport {
        dim: d,
        bases: set.bases.len(),
        pairs_checked: pairs.len(),
        pairs_passed,
        within,
        pairs,
        max_deviation,
        pass,
    }
}

/// Rank-one projectors |a_k⟩⟨a_k| of an orthonormal basis.
pub fn projectors(basis: &Basis) -> Result<Vec<ComplexMatrix>> {
    let err = basis.orthonormality_error();
    if err > TOL_EQ || basis.vectors.len() != basis.dim() {
        return Err(Error::NotOrthonormal(err));
    }
    Ok(basis.vectors.iter().map(|v| ComplexMatrix::outer(v)).collect())
}

/// Matching of one basis onto another that ignores vector order and per-vector
/// phase.
///
/// Returns `perm` with `a.vectors[i] ≃ b.vectors[perm[i]]` and the largest
/// deviation of the overlap matrix |⟨a_i|b_j⟩| from that permutation matrix,
/// or `None` when the overlap matrix is not within `tol` of a permutation.
pub fn match_basis(a: &Basis, b: &Basis, tol: f64) -> Option<(Vec<usize>, f64)> {
    if a.dim() != b.dim() || a.vectors.len() != b.vectors.len() {
        return None;
    }
    let n = a.vectors.len();
    let mut perm = Vec::with_capacity(n);
    let mut worst: f64 = 0.0;
    let mut used = vec![false; n];
    for u in &a.vectors {
        let overlaps: Vec<f64> = b.vectors.iter().map(|v| inner(u, v).norm() / (norm(u) * norm(v))).collect();
        let (j, &best) = overlaps
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))?;
        if used[j] {
            return None;
        }
        used[j] = true;
        worst = worst.max((best - 1.0).abs());
        for (jj, &o) in overlaps.iter().enumerate() {
            if jj != j {
                worst = worst.max(o);
            }
        }
        perm.push(j);
    }
    (worst <= tol).then_some((perm, worst))
}

/// Matches every basis in `candidates` to a distinct basis in `reference`.
///
/// Returns, for each candidate, the index of its reference basis and the
/// worst deviation over all matches.
pub fn match_sets(candidates: &[Basis], reference: &[Basis], tol: f64) -> Option<(Vec<usize>, f64)> {
    let mut used = vec![false; reference.len()];
    let mut mapping = Vec::with_capacity(candidates.len());
    let mut worst: f64 = 0.0;
    for c in candidates {
        let (idx, dev) = reference
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .find_map(|(i, r)| match_basis(c, r, tol).map(|(_, dev)| (i, dev)))?;
        used[idx] = true;
        worst = worst.max(dev);
        mapping.push(idx);
    }
    Some((mapping, worst))
}

/// The single-qutrit bases written out explicitly (standard basis first).
///
/// Labels are `"B0"` through `"B3"`.
pub fn qutrit_fixtures() -> Vec<Basis> {
    let s = 1.0 / 3f64.sqrt();
    let w = omega(1) * s;
    let wc = omega(2) * s;
    let one = omega(0) * s;
    let b1 = vec![vec![one, one, one], vec![one, w, wc], vec![one, wc, w]];
    let b2 = vec![vec![w, one, one], vec![one, w, one], vec![one, one, w]];
    let b3 = vec![vec![wc, one, one], vec![one, wc, one], vec![one, one, wc]];
    let std_basis = Basis::from_columns("B0", &ComplexMatrix::identity(3), Provenance::ExplicitFixture);
    vec![
        std_basis,
        Basis::new_unchecked("B1", b1, Provenance::ExplicitFixture),
        Basis::new_unchecked("B2", b2, Provenance::ExplicitFixture),
        Basis::new_unchecked("B3", b3, Provenance::ExplicitFixture),
    ]
}
