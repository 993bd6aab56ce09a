//! Measurement simulation and state reconstruction.
//!
//! Measuring a state ρ in every basis of a complete set of d + 1 mutually
//! unbiased bases gives outcome probabilities p_k^(r) = Tr(P_k^(r) ρ), from
//! which the state is recovered linearly:
//!
//! ```text
//! ρ = Σ_r Σ_k p_k^(r) P_k^(r) − I
//! ```
//!
//! The baseline method expands ρ in tensor products of Gell-Mann matrices and
//! needs one expectation value per non-identity product, 3^(2n) − 1 in total.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::cxla::{hermitian_eig, ComplexMatrix, TOL_EIG};
use crate::error::{Error, Result};
use crate::io::{matrix_to_rows, Pair};
use crate::mub::{projectors, MubSet};

use num_complex::Complex64 as C64;

/// A validated density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Checks Hermiticity and unit trace to 1e-9 and eigenvalues ≥ −1e-8.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidState(format!(
                "matrix is {}x{}, not square",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let herm = matrix.hermiticity_error();
        if herm > TOL_EIG {
            return Err(Error::InvalidState(format!(
                "not Hermitian (max deviation {herm:.3e})"
            )));
        }
        let trace = matrix.trace();
        if (trace - C64::new(1.0, 0.0)).norm() > TOL_EIG {
            return Err(Error::InvalidState(format!(
                "trace is {:.12} (expected 1)",
                trace.re
            )));
        }
        let (values, _) = hermitian_eig(&matrix)?;
        let min = values.last().copied().unwrap_or(0.0);
        if min < -1e-8 {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { matrix })
    }

    /// The pure state |ψ⟩⟨ψ|, normalizing ψ.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let n = crate::cxla::norm(psi);
        if n == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let unit: Vec<C64> = psi.iter().map(|z| z / n).collect();
        Ok(Self {
            matrix: ComplexMatrix::outer(&unit),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// The state vector when ρ is pure (purity within 1e-9 of one).
    pub fn pure_state(&self) -> Option<Vec<C64>> {
        if (self.purity() - 1.0).abs() > TOL_EIG {
            return None;
        }
        let (_, vectors) = hermitian_eig(&self.matrix).ok()?;
        Some(vectors.column(0))
    }
}

/// ρ = GG†/Tr(GG†) with G a d×d matrix of independent complex normal entries.
pub fn random_density_matrix(dim: usize, rng: &mut impl rand::Rng) -> DensityMatrix {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let ggh = &g * &g.adjoint();
    let trace = ggh.trace().re;
    DensityMatrix {
        matrix: ggh.scale_real(1.0 / trace),
    }
}

/// [`random_density_matrix`] from a ChaCha8 stream seeded with `seed`.
pub fn seeded_density_matrix(dim: usize, seed: u64) -> DensityMatrix {
    random_density_matrix(dim, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Shot budget per measurement setting.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Shots {
    /// Exact Born probabilities.
    Exact,
    PerBasis(u64),
}

impl Serialize for Shots {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Shots::Exact => s.serialize_str("exact"),
            Shots::PerBasis(n) => s.serialize_u64(*n),
        }
    }
}

/// Outcome probabilities, one row of d entries per basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbabilityTable {
    pub rows: Vec<Vec<f64>>,
    pub shots: Shots,
}

/// Exact Born probabilities ⟨a_k^(r)|ρ|a_k^(r)⟩ for every basis of the set.
pub fn probabilities(rho: &DensityMatrix, set: &MubSet) -> Result<ProbabilityTable> {
    if rho.dim() != set.dim {
        return Err(Error::Dimension(format!(
            "state of dimension {} measured in bases of dimension {}",
            rho.dim(),
            set.dim
        )));
    }
    let rows = set
        .bases
        .iter()
        .map(|b| {
            b.vectors
                .iter()
                .map(|v| rho.matrix.expectation(v).map(|z| z.re))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(ProbabilityTable {
        rows,
        shots: Shots::Exact,
    })
}

/// Draws `shots` outcomes per basis and returns the observed frequencies.
///
/// Each row is an independent multinomial draw, generated as a chain of
/// conditional binomials from one ChaCha8 stream seeded with `seed`.
pub fn sample(table: &ProbabilityTable, shots: u64, seed: u64) -> Result<ProbabilityTable> {
    if shots == 0 {
        return Err(Error::Unsupported("shot count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = table
        .rows
        .iter()
        .map(|row| {
            let counts = multinomial(row, shots, &mut rng);
            counts.iter().map(|&c| c as f64 / shots as f64).collect()
        })
        .collect();
    Ok(ProbabilityTable {
        rows,
        shots: Shots::PerBasis(shots),
    })
}

fn multinomial(probs: &[f64], shots: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let clipped: Vec<f64> = probs.iter().map(|&p| p.max(0.0)).collect();
    let mut mass: f64 = clipped.iter().sum();
    let mut remaining = shots;
    let mut counts = vec![0u64; probs.len()];
    for (i, &p) in clipped.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == clipped.len() {
            counts[i] = remaining;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = if q <= 0.0 {
            0
        } else if q >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, q).expect("valid binomial").sample(rng)
        };
        counts[i] = draw;
        remaining -= draw;
        mass -= p;
    }
    counts
}

/// Linear reconstruction Σ_r Σ_k p_k^(r) P_k^(r) − I.
///
/// The estimate is Hermitian with unit trace whenever each row of the table
/// sums to one, but it can have negative eigenvalues for sampled input; see
/// [`project_physical`].
pub fn reconstruct_mub(table: &ProbabilityTable, set: &MubSet) -> Result<ComplexMatrix> {
    let d = set.dim;
    if table.rows.len() != set.len() || table.rows.iter().any(|r| r.len() != d) {
        return Err(Error::Dimension(format!(
            "probability table of {} rows does not match {} bases of dimension {d}",
            table.rows.len(),
            set.len()
        )));
    }
    let mut acc = ComplexMatrix::identity(d).scale_real(-1.0);
    for (row, basis) in table.rows.iter().zip(&set.bases) {
        for (&p, proj) in row.iter().zip(projectors(basis)?) {
            acc = &acc + &proj.scale_real(p);
        }
    }
    Ok(acc)
}

/// Nearest physical state by eigenvalue clipping.
///
/// Negative eigenvalues are set to zero and the resulting excess trace is
/// taken off the remaining positive eigenvalues in equal parts, repeating
/// until none is negative. Eigenvectors are kept.
pub fn project_physical(estimate: &ComplexMatrix) -> Result<DensityMatrix> {
    let (mut values, vectors) = hermitian_eig(estimate)?;
    let total: f64 = values.iter().sum();
    if (total - 1.0).abs() > TOL_EIG {
        return Err(Error::InvalidState(format!(
            "estimate has trace {total:.12}, expected 1"
        )));
    }
    if values.iter().all(|&v| v >= 0.0) {
        return Ok(DensityMatrix {
            matrix: estimate.clone(),
        });
    }
    loop {
        for v in values.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let excess: f64 = values.iter().sum::<f64>() - 1.0;
        let positive = values.iter().filter(|&&v| v > 0.0).count();
        if excess.abs() <= f64::EPSILON || positive == 0 {
            break;
        }
        let share = excess / positive as f64;
        for v in values.iter_mut().filter(|v| **v > 0.0) {
            *v -= share;
        }
        if values.iter().all(|&v| v >= 0.0) {
            break;
        }
    }
    let diag = ComplexMatrix::diag_real(&values);
    let matrix = &(&vectors * &diag) * &vectors.adjoint();
    let herm = ComplexMatrix::from_fn(matrix.rows(), matrix.cols(), |r, c| {
        (matrix[(r, c)] + matrix[(c, r)].conj()) * 0.5
    });
    Ok(DensityMatrix { matrix: herm })
}

/// λ_0 = I followed by the eight Gell-Mann matrices λ_1 … λ_8.
pub fn gell_mann() -> [ComplexMatrix; 9] {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let m = |e: [[C64; 3]; 3]| ComplexMatrix::from_fn(3, 3, |r, c| e[r][c]);
    let s = 1.0 / 3f64.sqrt();
    [
        ComplexMatrix::identity(3),
        m([[z, o, z], [o, z, z], [z, z, z]]),
        m([[z, -i, z], [i, z, z], [z, z, z]]),
        m([[o, z, z], [z, -o, z], [z, z, z]]),
        m([[z, z, o], [z, z, z], [o, z, z]]),
        m([[z, z, -i], [z, z, z], [i, z, z]]),
        m([[z, z, z], [z, z, o], [z, o, z]]),
        m([[z, z, z], [z, z, -i], [z, i, z]]),
        ComplexMatrix::diag_real(&[s, s, -2.0 * s]),
    ]
}

/// Tensor product λ_{j1} ⊗ … ⊗ λ_{jn} for a multi-index.
pub fn gell_mann_product(indices: &[usize]) -> ComplexMatrix {
    let basis = gell_mann();
    indices
        .iter()
        .fold(ComplexMatrix::identity(1), |acc, &j| acc.kron(&basis[j]))
}

fn multi_indices(n: usize) -> Vec<Vec<usize>> {
    (0..9usize.pow(n as u32))
        .map(|mut flat| {
            let mut idx = vec![0; n];
            for slot in idx.iter_mut().rev() {
                *slot = flat % 9;
                flat /= 9;
            }
            idx
        })
        .collect()
}

/// Number of measurement settings for the MUB method in dimension d.
pub fn mub_measurement_count(dim: usize) -> usize {
    dim + 1
}

/// Number of expectation values for the Gell-Mann method on n qutrits.
pub fn gellmann_measurement_count(n_qutrits: usize) -> usize {
    9usize.pow(n_qutrits as u32) - 1
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mub,
    Gellmann,
}

#[derive(Clone, Debug, Serialize)]
pub struct Metrics {
    /// ‖ρ̂ − ρ‖_F for the final estimate.
    pub frobenius_error: f64,
    /// ‖ρ̂ − ρ‖_F for the linear estimate before projection.
    pub raw_frobenius_error: f64,
    /// ⟨ψ|ρ̂|ψ⟩ when the true state is pure.
    pub pure_state_fidelity: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TomographyResult {
    pub method: Method,
    pub measurement_count: usize,
    pub shots: Shots,
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<ProbabilityTable>,
    /// Expectation values r_J in multi-index order (Gell-Mann method only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    #[serde(serialize_with = "serialize_matrix")]
    pub raw_estimate: ComplexMatrix,
    #[serde(serialize_with = "serialize_opt_density")]
    pub projected_estimate: Option<DensityMatrix>,
    pub metrics: Metrics,
}

impl TomographyResult {
    /// The projected estimate when present, otherwise the linear one.
    pub fn estimate(&self) -> &ComplexMatrix {
        self.projected_estimate
            .as_ref()
            .map_or(&self.raw_estimate, DensityMatrix::matrix)
    }
}

fn serialize_matrix<S: Serializer>(m: &ComplexMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    matrix_to_rows(m).serialize(s)
}

fn serialize_opt_density<S: Serializer>(
    m: &Option<DensityMatrix>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let rows: Option<Vec<Vec<Pair>>> = m.as_ref().map(|d| matrix_to_rows(d.matrix()));
    rows.serialize(s)
}

fn metrics(truth: &DensityMatrix, raw: &ComplexMatrix, final_estimate: &ComplexMatrix) -> Result<Metrics> {
    let fidelity = match truth.pure_state() {
        Some(psi) => Some(final_estimate.expectation(&psi)?.re),
        None => None,
    };
    Ok(Metrics {
        frobenius_error: final_estimate.frobenius_distance(truth.matrix()),
        raw_frobenius_error: raw.frobenius_distance(truth.matrix()),
        pure_state_fidelity: fidelity,
    })
}

/// Expectation values r_J = Tr(ρ Λ_J) and the reassembled state
/// ρ = 3^−n Σ_J c_J r_J Λ_J, where c_J = (3/2)^(number of non-identity
/// factors) accounts for Tr(λ_j λ_k) = 2δ_jk.
pub fn reconstruct_gellmann(rho: &DensityMatrix, n_qutrits: usize) -> Result<TomographyResult> {
    if !(1..=2).contains(&n_qutrits) {
        return Err(Error::Unsupported(format!(
            "Gell-Mann reconstruction for {n_qutrits} qutrits (1 or 2 supported)"
        )));
    }
    let dim = 3usize.pow(n_qutrits as u32);
    if rho.dim() != dim {
        return Err(Error::Dimension(format!(
            "state of dimension {} is not a {n_qutrits}-qutrit state",
            rho.dim()
        )));
    }
    let indices = multi_indices(n_qutrits);
    let terms: Vec<(f64, ComplexMatrix)> = indices
        .par_iter()
        .map(|idx| {
            let op = gell_mann_product(idx);
            let r = (rho.matrix() * &op).trace().re;
            let weight = 1.5f64.powi(idx.iter().filter(|&&j| j != 0).count() as i32);
            (r, op.scale_real(weight * r / dim as f64))
        })
        .collect();
    let estimate = terms
        .iter()
        .fold(ComplexMatrix::zeros(dim, dim), |acc, (_, t)| &acc + t);
    let coefficients = terms.iter().map(|(r, _)| *r).collect();
    let metrics = metrics(rho, &estimate, &estimate)?;
    Ok(TomographyResult {
        method: Method::Gellmann,
        measurement_count: gellmann_measurement_count(n_qutrits),
        shots: Shots::Exact,
        seed: None,
        probabilities: None,
        coefficients: Some(coefficients),
        raw_estimate: estimate,
        projected_estimate: None,
        metrics,
    })
}

/// Probabilities, optional sampling, linear reconstruction and optional
/// projection, with error metrics against the true state.
pub fn run_experiment(
    rho: &DensityMatrix,
    set: &MubSet,
    shots: Shots,
    seed: u64,
    project: bool,
) -> Result<TomographyResult> {
    let exact = probabilities(rho, set)?;
    let table = match shots {
        Shots::Exact => exact,
        Shots::PerBasis(n) => sample(&exact, n, seed)?,
    };
    let raw = reconstruct_mub(&table, set)?;
    let projected = if project {
        Some(project_physical(&raw)?)
    } else {
        None
    };
    let final_estimate = projected.as_ref().map_or(&raw, DensityMatrix::matrix);
    let metrics = metrics(rho, &raw, final_estimate)?;
    Ok(TomographyResult {
        method: Method::Mub,
        measurement_count: mub_measurement_count(set.dim),
        shots,
        seed: matches!(shots, Shots::PerBasis(_)).then_some(seed),
        probabilities: Some(table),
        coefficients: None,
        raw_estimate: raw,
        projected_estimate: projected,
        metrics,
    })
}

/// Seed for trial `index` of a batch; independent of scheduling.
pub fn trial_seed(master_seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the combined input
    let mut z = master_seed
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Frobenius errors of `trials` sampled reconstructions of one state, run in
/// parallel. Trial i uses `trial_seed(master_seed, i)`.
pub fn run_trials(rho: &DensityMatrix, set: &MubSet, shots: u64, master_seed: u64, trials: usize) -> Result<Vec<f64>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            run_experiment(rho, set, Shots::PerBasis(shots), trial_seed(master_seed, i), false)
                .map(|r| r.metrics.frobenius_error)
        })
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
