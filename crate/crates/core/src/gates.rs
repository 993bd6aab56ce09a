//! Qutrit gates, decomposition words, and verification of decomposition
//! tables.
//!
//! Three primitive gates act on qutrits:
//!
//! - `F`, the qutrit Fourier transform, `F|j⟩ = Σ_l ω^(lj)|l⟩ / √3`
//! - `R`, a diagonal phase gate, `diag(1, ω, ω)` (or `diag(1, ω, ω²)` with
//!   [`PhaseGate::Linear`])
//! - `X_ij`, the controlled shift `|x_i⟩|x_j⟩ ↦ |x_i⟩|x_j − x_i mod 3⟩` with
//!   control i and target j
//!
//! A word such as `F_{1}^{-1}X_{12}F_{2}^{-1}R_{2}^{-1}` is a product of these
//! gates. Qutrit 1 is the most significant digit of a register index. Since
//! the order in which a written product is applied is a matter of convention,
//! evaluation takes a [`Convention`], and table verification can try both.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::cxla::{omega, ComplexMatrix};
use crate::error::{Error, Result};
use crate::mub::{verify_unbiased, Basis, MubSet, Provenance};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum GateKind {
    F,
    R,
    X,
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            GateKind::F => "F",
            GateKind::R => "R",
            GateKind::X => "X",
        };
        write!(f, "{c}")
    }
}

/// One gate of a word. Qutrit indices are 1-based; `target` is set only for
/// `X`, where `qutrit` is the control.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct GateToken {
    pub kind: GateKind,
    pub qutrit: usize,
    pub target: Option<usize>,
    pub inverse: bool,
}

impl GateToken {
    pub fn fourier(qutrit: usize) -> Self {
        Self { kind: GateKind::F, qutrit, target: None, inverse: false }
    }

    pub fn phase(qutrit: usize) -> Self {
        Self { kind: GateKind::R, qutrit, target: None, inverse: false }
    }

    pub fn shift(control: usize, target: usize) -> Self {
        Self { kind: GateKind::X, qutrit: control, target: Some(target), inverse: false }
    }

    pub fn inverted(self) -> Self {
        Self { inverse: !self.inverse, ..self }
    }

    pub fn is_nonlocal(&self) -> bool {
        self.kind == GateKind::X
    }

    fn check(&self, n_qutrits: usize) -> Result<()> {
        for q in std::iter::once(self.qutrit).chain(self.target) {
            if q == 0 || q > n_qutrits {
                return Err(Error::QutritIndex { index: q, n_qutrits });
            }
        }
        match (self.kind, self.target) {
            (GateKind::X, Some(t)) if t == self.qutrit => Err(Error::Dimension(format!(
                "X gate with control and target both on qutrit {t}"
            ))),
            (GateKind::X, None) => Err(Error::Dimension("X gate without a target".into())),
            (GateKind::F | GateKind::R, Some(_)) => {
                Err(Error::Dimension(format!("{} gate with two qutrits", self.kind)))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for GateToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind, self.qutrit)?;
        if let Some(t) = self.target {
            write!(f, "{t}")?;
        }
        if self.inverse {
            write!(f, "^-1")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GateWord {
    pub tokens: Vec<GateToken>,
    pub n_qutrits: usize,
}

impl GateWord {
    pub fn new(tokens: Vec<GateToken>, n_qutrits: usize) -> Result<Self> {
        for t in &tokens {
            t.check(n_qutrits)?;
        }
        Ok(Self { tokens, n_qutrits })
    }

    pub fn identity(n_qutrits: usize) -> Self {
        Self { tokens: Vec::new(), n_qutrits }
    }

    /// Canonical text, e.g. `F1^-1 X12 R2`. [`parse_word`] reads it back.
    pub fn render(&self) -> String {
        self.tokens.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
    }

    /// The inverse word: tokens reversed, each inverted.
    pub fn inverse(&self) -> Self {
        Self {
            tokens: self.tokens.iter().rev().map(|t| t.inverted()).collect(),
            n_qutrits: self.n_qutrits,
        }
    }

    pub fn reversed(&self) -> Self {
        Self {
            tokens: self.tokens.iter().rev().copied().collect(),
            n_qutrits: self.n_qutrits,
        }
    }

    pub fn nonlocal_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.is_nonlocal()).count()
    }
}

impl fmt::Display for GateWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

/// Which diagonal gate an `R` token denotes.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub enum PhaseGate {
    /// `diag(1, ω, ω)`
    #[default]
    #[serde(rename = "paper")]
    Paper,
    /// `diag(1, ω, ω²)`
    #[serde(rename = "diag-1-w-w2")]
    Linear,
}

impl PhaseGate {
    pub const ALL: [PhaseGate; 2] = [PhaseGate::Paper, PhaseGate::Linear];

    fn exponents(self) -> [i64; 3] {
        match self {
            PhaseGate::Paper => [0, 1, 1],
            PhaseGate::Linear => [0, 1, 2],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PhaseGate::Paper => "paper",
            PhaseGate::Linear => "diag-1-w-w2",
        }
    }
}

/// Order in which the gates of a written word act on a state.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Convention {
    /// The leftmost gate acts first: `F R` means `R·F`.
    #[serde(rename = "left-first")]
    LeftFirst,
    /// The leftmost gate acts last, as in operator notation: `F R` means `F·R`.
    #[serde(rename = "left-last")]
    LeftLast,
}

impl Convention {
    pub const ALL: [Convention; 2] = [Convention::LeftFirst, Convention::LeftLast];

    pub fn name(self) -> &'static str {
        match self {
            Convention::LeftFirst => "left-first",
            Convention::LeftLast => "left-last",
        }
    }
}

/// Convention selection for table verification.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum ConventionChoice {
    /// Try both and keep the one with more unbiased pairs.
    #[default]
    Auto,
    Fixed(Convention),
}

/// Full 3^n × 3^n unitary of one gate on an n-qutrit register.
pub fn gate_unitary(token: &GateToken, n_qutrits: usize, phase: PhaseGate) -> Result<ComplexMatrix> {
    token.check(n_qutrits)?;
    let dim = 3usize.pow(n_qutrits as u32);
    let digit = |index: usize, qutrit: usize| (index / 3usize.pow((n_qutrits - qutrit) as u32)) % 3;
    let sign = if token.inverse { -1 } else { 1 };

    let u = match token.kind {
        GateKind::F => {
            let s = 1.0 / 3f64.sqrt();
            let f = ComplexMatrix::from_fn(3, 3, |l, j| omega(sign * (l * j) as i64) * s);
            embed_single(&f, token.qutrit, n_qutrits)
        }
        GateKind::R => {
            let e = phase.exponents();
            let r = ComplexMatrix::diag(&[omega(sign * e[0]), omega(sign * e[1]), omega(sign * e[2])]);
            embed_single(&r, token.qutrit, n_qutrits)
        }
        GateKind::X => {
            let control = token.qutrit;
            let target = token.target.expect("checked");
            let place = 3usize.pow((n_qutrits - target) as u32);
            ComplexMatrix::from_fn(dim, dim, |row, col| {
                let c = digit(col, control) as i64;
                let t = digit(col, target) as i64;
                let shifted = (t - sign * c).rem_euclid(3) as usize;
                let image = col - digit(col, target) * place + shifted * place;
                if row == image {
                    omega(0)
                } else {
                    omega(0) * 0.0
                }
            })
        }
    };
    Ok(u)
}

fn embed_single(gate: &ComplexMatrix, qutrit: usize, n_qutrits: usize) -> ComplexMatrix {
    let mut acc = ComplexMatrix::identity(1);
    for q in 1..=n_qutrits {
        if q == qutrit {
            acc = acc.kron(gate);
        } else {
            acc = acc.kron(&ComplexMatrix::identity(3));
        }
    }
    acc
}

/// Parses a decomposition word.
///
/// Grammar, with whitespace, `_`, `{` and `}` ignored:
///
/// ```text
/// word  := token*
/// token := ("F" | "R") inv? index? inv? | "X" inv? index index inv?
/// index := "1" | "2" | "3"
/// inv   := "^-1"
/// ```
///
/// The inverse marker may sit before or after the indices (`X^{-1}_{12}` and
/// `X_{12}^{-1}` both occur in print) but not both. A single-qutrit gate may
/// omit its index only when `n_qutrits` is 1.
pub fn parse_word(text: &str, n_qutrits: usize) -> Result<GateWord> {
    let chars: Vec<(usize, char)> = text
        .char_indices()
        .filter(|(_, c)| !c.is_whitespace() && !matches!(c, '_' | '{' | '}'))
        .collect();
    let mut parser = WordParser { chars: &chars, pos: 0, end: text.len() };
    let mut tokens = Vec::new();
    while let Some((at, c)) = parser.peek() {
        let kind = match c {
            'F' => GateKind::F,
            'R' => GateKind::R,
            'X' => GateKind::X,
            other => {
                return Err(Error::Parse {
                    position: at,
                    message: format!("expected F, R or X, found '{other}'"),
                })
            }
        };
        parser.pos += 1;
        let inv_before = parser.inverse_marker()?;
        let token = match kind {
            GateKind::X => {
                let control = parser.index(n_qutrits)?;
                let target = parser.index(n_qutrits)?;
                if control == target {
                    return Err(Error::Parse {
                        position: at,
                        message: format!("X gate with control and target both on qutrit {control}"),
                    });
                }
                GateToken::shift(control, target)
            }
            _ => {
                let qutrit = match parser.peek() {
                    Some((_, d)) if d.is_ascii_digit() => parser.index(n_qutrits)?,
                    _ if n_qutrits == 1 => 1,
                    _ => {
                        return Err(Error::Parse {
                            position: parser.position(),
                            message: format!("{kind} gate needs a qutrit index"),
                        })
                    }
                };
                GateToken { kind, qutrit, target: None, inverse: false }
            }
        };
        let inv_after = parser.inverse_marker()?;
        if inv_before && inv_after {
            return Err(Error::Parse {
                position: at,
                message: "inverse marker given twice".into(),
            });
        }
        tokens.push(GateToken { inverse: inv_before || inv_after, ..token });
    }
    Ok(GateWord { tokens, n_qutrits })
}

struct WordParser<'a> {
    chars: &'a [(usize, char)],
    pos: usize,
    end: usize,
}

impl WordParser<'_> {
    fn peek(&self) -> Option<(usize, char)> {
        self.chars.get(self.pos).copied()
    }

    fn position(&self) -> usize {
        self.peek().map_or(self.end, |(at, _)| at)
    }

    fn inverse_marker(&mut self) -> Result<bool> {
        match self.peek() {
            Some((at, '^')) => {
                for expected in ['-', '1'] {
                    self.pos += 1;
                    match self.peek() {
                        Some((_, c)) if c == expected => {}
                        _ => {
                            return Err(Error::Parse {
                                position: at,
                                message: "only the exponent ^-1 is supported".into(),
                            })
                        }
                    }
                }
                self.pos += 1;
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    fn index(&mut self, n_qutrits: usize) -> Result<usize> {
        match self.peek() {
            Some((at, c)) if c.is_ascii_digit() => {
                self.pos += 1;
                let q = c.to_digit(10).unwrap() as usize;
                if q == 0 || q > n_qutrits {
                    return Err(Error::Parse {
                        position: at,
                        message: format!("qutrit index {q} outside 1..={n_qutrits}"),
                    });
                }
                Ok(q)
            }
            _ => Err(Error::Parse {
                position: self.position(),
                message: "expected a qutrit index".into(),
            }),
        }
    }
}

/// Unitary of a word under the given ordering convention.
pub fn evaluate(word: &GateWord, convention: Convention, phase: PhaseGate) -> Result<ComplexMatrix> {
    let dim = 3usize.pow(word.n_qutrits as u32);
    let mut acc = ComplexMatrix::identity(dim);
    for token in &word.tokens {
        let g = gate_unitary(token, word.n_qutrits, phase)?;
        acc = match convention {
            Convention::LeftFirst => &g * &acc,
            Convention::LeftLast => &acc * &g,
        };
    }
    Ok(acc)
}

/// The basis whose k-th vector is the image of |k⟩ under the word's unitary.
pub fn basis_from_word(
    word: &GateWord,
    convention: Convention,
    phase: PhaseGate,
    label: impl Into<String>,
) -> Result<Basis> {
    let u = evaluate(word, convention, phase)?;
    Ok(Basis::from_columns(label, &u, Provenance::GateDecomposition))
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum TableId {
    I,
    II,
    III,
}

impl TableId {
    pub const ALL: [TableId; 3] = [TableId::I, TableId::II, TableId::III];

    pub fn from_number(n: usize) -> Result<Self> {
        match n {
            1 => Ok(TableId::I),
            2 => Ok(TableId::II),
            3 => Ok(TableId::III),
            _ => Err(Error::Unsupported(format!("table {n} (tables are 1, 2, 3)"))),
        }
    }

    pub fn n_qutrits(self) -> usize {
        match self {
            TableId::I => 1,
            TableId::II => 2,
            TableId::III => 3,
        }
    }

    /// Tables I and II leave the standard basis implicit as basis 1.
    pub fn includes_standard_basis(self) -> bool {
        matches!(self, TableId::I | TableId::II)
    }

    fn source(self) -> &'static str {
        match self {
            TableId::I => include_str!("../data/table1.txt"),
            TableId::II => include_str!("../data/table2.txt"),
            TableId::III => include_str!("../data/table3.txt"),
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TableId::I => "I",
            TableId::II => "II",
            TableId::III => "III",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub label: String,
    /// The word as transcribed.
    pub text: String,
    pub word: GateWord,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionTable {
    pub table_id: TableId,
    pub n_qutrits: usize,
    pub rows: Vec<TableRow>,
}

impl DecompositionTable {
    /// One of the embedded tables.
    pub fn load(id: TableId) -> Self {
        Self::parse(id, id.source()).expect("embedded table data parses")
    }

    /// Parses `label: word` lines; blank lines and `#` comments are skipped.
    pub fn parse(id: TableId, text: &str) -> Result<Self> {
        let n = id.n_qutrits();
        let mut rows = Vec::new();
        let mut offset = 0;
        for line in text.lines() {
            let line_start = offset;
            offset += line.len() + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (label, word_text) = line.split_once(':').ok_or_else(|| Error::Parse {
                position: line_start,
                message: "expected 'label: word'".into(),
            })?;
            let word = parse_word(word_text, n).map_err(|e| match e {
                Error::Parse { position, message } => Error::Parse {
                    position: line_start + label.len() + 1 + position,
                    message,
                },
                other => other,
            })?;
            rows.push(TableRow {
                label: label.trim().to_string(),
                text: word_text.trim().to_string(),
                word,
            });
        }
        Ok(Self { table_id: id, n_qutrits: n, rows })
    }
}

/// Total number of `X` tokens over all rows.
pub fn count_nonlocal(table: &DecompositionTable) -> usize {
    table.rows.iter().map(|r| r.word.nonlocal_count()).sum()
}

/// `(label, X count)` for each row.
pub fn nonlocal_per_row(table: &DecompositionTable) -> Vec<(String, usize)> {
    table
        .rows
        .iter()
        .map(|r| (r.label.clone(), r.word.nonlocal_count()))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct RowVerdict {
    pub label: String,
    /// `"table"` for a table row, `"standard"` for the implicit standard basis.
    pub source: &'static str,
    pub orthonormal: bool,
    pub unbiased_vs_all: bool,
    /// Label of the basis with the largest deviation from this one.
    pub worst_pair: Option<String>,
    pub deviation: f64,
}

/// Verdicts for an arbitrary list of bases, as produced by [`verify_set`].
#[derive(Clone, Debug, Serialize)]
pub struct SetVerdict {
    pub per_row: Vec<RowVerdict>,
    pub pairs_checked: usize,
    pub pairs_passed: usize,
    pub max_deviation: f64,
    pub all_unbiased: bool,
}

/// Runs the pairwise unbiasedness check and reduces it to one verdict per
/// basis. Bases labelled `standard_label` are tagged as the standard basis.
pub fn verify_set(set: &MubSet, standard_label: Option<&str>) -> SetVerdict {
    let report = verify_unbiased(set);
    let per_row = set
        .bases
        .iter()
        .zip(&report.within)
        .map(|(b, within)| {
            let worst = report.worst_for(&b.label);
            let cross_ok = worst.is_none_or(|p| p.pass);
            let (worst_pair, cross_dev) = match worst {
                Some(p) => {
                    let other = if p.a == b.label { &p.b } else { &p.a };
                    (Some(other.clone()), p.deviation)
                }
                None => (None, 0.0),
            };
            RowVerdict {
                label: b.label.clone(),
                source: if Some(b.label.as_str()) == standard_label { "standard" } else { "table" },
                orthonormal: within.pass,
                unbiased_vs_all: within.pass && cross_ok,
                worst_pair,
                deviation: cross_dev.max(within.deviation),
            }
        })
        .collect();
    SetVerdict {
        per_row,
        pairs_checked: report.pairs_checked,
        pairs_passed: report.pairs_passed,
        max_deviation: report.max_deviation,
        all_unbiased: report.pass,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConventionScore {
    pub convention: Convention,
    pub pairs_passed: usize,
    pub all_unbiased: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableReport {
    pub table: TableId,
    pub phase_gate: PhaseGate,
    pub convention_used: Convention,
    pub convention_scores: Vec<ConventionScore>,
    pub standard_basis_included: bool,
    pub bases_checked: usize,
    pub per_row: Vec<RowVerdict>,
    pub pairs_checked: usize,
    pub pairs_passed: usize,
    pub max_deviation: f64,
    pub all_unbiased: bool,
    /// For tables without an implicit standard basis: the standard basis
    /// checked against every row.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standard_vs_rows: Option<RowVerdict>,
}

fn label_key(label: &str) -> (u64, String) {
    (label.parse().unwrap_or(u64::MAX), label.to_string())
}

/// The bases of a table under one convention, sorted by label, with the
/// standard basis (label `"1"`) prepended when `with_standard` is set.
pub fn table_bases(
    table: &DecompositionTable,
    convention: Convention,
    phase: PhaseGate,
    with_standard: bool,
) -> Result<Vec<Basis>> {
    let mut rows: Vec<&TableRow> = table.rows.iter().collect();
    rows.sort_by_key(|r| label_key(&r.label));
    let mut bases: Vec<Basis> = rows
        .par_iter()
        .map(|r| basis_from_word(&r.word, convention, phase, r.label.clone()))
        .collect::<Result<_>>()?;
    if with_standard {
        let dim = 3usize.pow(table.n_qutrits as u32);
        let label = standard_label(table);
        let std_basis = Basis::from_columns(label, &ComplexMatrix::identity(dim), Provenance::GateDecomposition);
        bases.insert(0, std_basis);
    }
    Ok(bases)
}

fn standard_label(table: &DecompositionTable) -> String {
    if table.table_id.includes_standard_basis() {
        "1".to_string()
    } else {
        "standard".to_string()
    }
}

fn verify_table_fixed(table: &DecompositionTable, convention: Convention, phase: PhaseGate) -> Result<TableReport> {
    let with_std = table.table_id.includes_standard_basis();
    let bases = table_bases(table, convention, phase, with_std)?;
    let set = MubSet::new(bases)?;
    let label = standard_label(table);
    let verdict = verify_set(&set, with_std.then_some(label.as_str()));

    let standard_vs_rows = if with_std {
        None
    } else {
        let extended = MubSet::new(table_bases(table, convention, phase, true)?)?;
        verify_set(&extended, Some(label.as_str()))
            .per_row
            .into_iter()
            .find(|r| r.label == label)
    };

    Ok(TableReport {
        table: table.table_id,
        phase_gate: phase,
        convention_used: convention,
        convention_scores: Vec::new(),
        standard_basis_included: with_std,
        bases_checked: set.len(),
        per_row: verdict.per_row,
        pairs_checked: verdict.pairs_checked,
        pairs_passed: verdict.pairs_passed,
        max_deviation: verdict.max_deviation,
        all_unbiased: verdict.all_unbiased,
        standard_vs_rows,
    })
}

/// Builds every row basis and checks the whole set for mutual unbiasedness.
///
/// With [`ConventionChoice::Auto`] both conventions are evaluated and the one
/// with more unbiased pairs is reported (left-first on a tie). Failures are
/// part of the report, not errors.
pub fn verify_table(table: &DecompositionTable, choice: ConventionChoice, phase: PhaseGate) -> Result<TableReport> {
    let candidates: Vec<Convention> = match choice {
        ConventionChoice::Auto => Convention::ALL.to_vec(),
        ConventionChoice::Fixed(c) => vec![c],
    };
    let reports: Vec<TableReport> = candidates
        .iter()
        .map(|&c| verify_table_fixed(table, c, phase))
        .collect::<Result<_>>()?;
    let scores: Vec<ConventionScore> = reports
        .iter()
        .map(|r| ConventionScore {
            convention: r.convention_used,
            pairs_passed: r.pairs_passed,
            all_unbiased: r.all_unbiased,
        })
        .collect();
    let best = reports
        .into_iter()
        .rev()
        .max_by_key(|r| r.pairs_passed)
        .expect("at least one convention");
    Ok(TableReport {
        convention_scores: scores,
        ..best
    })
}

/// `true` when the two unitaries generate the same measurement basis up to
/// per-vector phase and ordering.
pub fn same_basis(u: &ComplexMatrix, v: &ComplexMatrix) -> bool {
    let a = Basis::from_columns("u", u, Provenance::GateDecomposition);
    let b = Basis::from_columns("v", v, Provenance::GateDecomposition);
    crate::mub::match_basis(&a, &b, 1e-8).is_some()
}

/// Largest |U†U − I| entry of the word's unitary, for sanity checks.
pub fn word_unitarity_error(word: &GateWord, convention: Convention, phase: PhaseGate) -> Result<f64> {
    Ok(evaluate(word, convention, phase)?.unitarity_error())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mub::{match_basis, qutrit_fixtures};
    use num_complex::Complex64 as C64;

    fn ket(dim: usize, index: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[index] = C64::new(1.0, 0.0);
        v
    }

    fn close(a: &[C64], b: &[C64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn gate_action_examples() {
        let s = 1.0 / 3f64.sqrt();
        let f = gate_unitary(&GateToken::fourier(1), 1, PhaseGate::Paper).unwrap();
        let out = f.matvec(&ket(3, 0)).unwrap();
        assert!(close(&out, &[C64::new(s, 0.0); 3], 1e-15));

        let r = gate_unitary(&GateToken::phase(1), 1, PhaseGate::Paper).unwrap();
        let out = r.matvec(&ket(3, 2)).unwrap();
        let mut want = vec![C64::new(0.0, 0.0); 3];
        want[2] = omega(1);
        assert!(close(&out, &want, 1e-15));

        // |1⟩|0⟩ → |1⟩|0 − 1⟩ = |1⟩|2⟩
        let x = gate_unitary(&GateToken::shift(1, 2), 2, PhaseGate::Paper).unwrap();
        let out = x.matvec(&ket(9, 3)).unwrap();
        assert!(close(&out, &ket(9, 5), 1e-15));
    }

    #[test]
    fn shift_respects_control_and_target_order() {
        let x21 = gate_unitary(&GateToken::shift(2, 1), 2, PhaseGate::Paper).unwrap();
        // |0⟩|1⟩ → |0 − 1⟩|1⟩ = |2⟩|1⟩
        assert!(close(&x21.matvec(&ket(9, 1)).unwrap(), &ket(9, 7), 1e-15));
        let x13 = gate_unitary(&GateToken::shift(1, 3), 3, PhaseGate::Paper).unwrap();
        // |2,1,1⟩ → |2,1,1−2⟩ = |2,1,2⟩
        assert!(close(&x13.matvec(&ket(27, 22)).unwrap(), &ket(27, 23), 1e-15));
        let inv = gate_unitary(&GateToken::shift(1, 3).inverted(), 3, PhaseGate::Paper).unwrap();
        assert!(close(&inv.matvec(&ket(27, 23)).unwrap(), &ket(27, 22), 1e-15));
    }

    #[test]
    fn all_gates_are_unitary_and_inverses_match() {
        for n in 1..=3 {
            let mut tokens = Vec::new();
            for q in 1..=n {
                tokens.push(GateToken::fourier(q));
                tokens.push(GateToken::phase(q));
                for t in 1..=n {
                    if t != q {
                        tokens.push(GateToken::shift(q, t));
                    }
                }
            }
            for phase in PhaseGate::ALL {
                for t in &tokens {
                    let u = gate_unitary(t, n, phase).unwrap();
                    assert!(u.unitarity_error() < 1e-12);
                    let ui = gate_unitary(&t.inverted(), n, phase).unwrap();
                    assert!(ui.max_abs_diff(&u.adjoint()) < 1e-15);
                }
            }
        }
    }

    #[test]
    fn shift_has_order_three() {
        let x = gate_unitary(&GateToken::shift(1, 2), 2, PhaseGate::Paper).unwrap();
        let x3 = &(&x * &x) * &x;
        assert_eq!(x3, ComplexMatrix::identity(9));
    }

    #[test]
    fn fourier_square_negates_indices_and_fourth_power_is_identity() {
        let f = gate_unitary(&GateToken::fourier(1), 1, PhaseGate::Paper).unwrap();
        let f2 = &f * &f;
        let negation = ComplexMatrix::from_fn(3, 3, |r, c| {
            if r == (3 - c) % 3 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
        });
        assert!(f2.max_abs_diff(&negation) < 1e-12);
        let f4 = &f2 * &f2;
        assert!(f4.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn out_of_range_gates_are_rejected() {
        assert!(matches!(
            gate_unitary(&GateToken::fourier(3), 2, PhaseGate::Paper),
            Err(Error::QutritIndex { index: 3, n_qutrits: 2 })
        ));
        assert!(gate_unitary(&GateToken::shift(1, 1), 2, PhaseGate::Paper).is_err());
        assert!(gate_unitary(&GateToken::phase(0), 2, PhaseGate::Paper).is_err());
    }

    #[test]
    fn parse_examples() {
        let w = parse_word("F1^-1 X12 F2^-1 R2^-1", 2).unwrap();
        assert_eq!(
            w.tokens,
            vec![
                GateToken::fourier(1).inverted(),
                GateToken::shift(1, 2),
                GateToken::fourier(2).inverted(),
                GateToken::phase(2).inverted(),
            ]
        );
        assert!(parse_word("", 2).unwrap().tokens.is_empty());
        assert!(matches!(parse_word("X11", 2), Err(Error::Parse { position: 0, .. })));
    }

    #[test]
    fn parse_latex_forms() {
        let a = parse_word("F_{1}^{-1}X^{-1}_{12}R_{1}F_{2}^{-1}R_{2}^{-1}", 2).unwrap();
        let b = parse_word("F1^-1 X12^-1 R1 F2^-1 R2^-1", 2).unwrap();
        assert_eq!(a, b);
        let single = parse_word("F^{-1}R", 1).unwrap();
        assert_eq!(single.tokens, vec![GateToken::fourier(1).inverted(), GateToken::phase(1)]);
    }

    #[test]
    fn parse_errors_carry_positions() {
        let cases = [
            ("F1 Q2", 2, 3),
            ("F4", 3, 1),
            ("F", 2, 1),
            ("X1", 2, 2),
            ("F1^2", 2, 2),
            ("X^-112^-1", 2, 0),
            ("R12", 2, 2),
        ];
        for (text, n, pos) in cases {
            match parse_word(text, n) {
                Err(Error::Parse { position, .. }) => assert_eq!(position, pos, "{text}"),
                other => panic!("{text}: expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn render_round_trips() {
        for id in TableId::ALL {
            for row in DecompositionTable::load(id).rows {
                let again = parse_word(&row.word.render(), row.word.n_qutrits).unwrap();
                assert_eq!(again, row.word);
            }
        }
    }

    #[test]
    fn evaluate_examples() {
        for c in Convention::ALL {
            let id = evaluate(&GateWord::identity(2), c, PhaseGate::Paper).unwrap();
            assert_eq!(id, ComplexMatrix::identity(9));
            let single = GateWord::new(vec![GateToken::shift(2, 1)], 2).unwrap();
            let g = gate_unitary(&GateToken::shift(2, 1), 2, PhaseGate::Paper).unwrap();
            assert_eq!(evaluate(&single, c, PhaseGate::Paper).unwrap(), g);
        }
        let word = parse_word("F1^-1 R1 X12 F2^-1 R2", 2).unwrap();
        let mut tokens = word.tokens.clone();
        tokens.extend(word.inverse().tokens);
        let round = GateWord::new(tokens, 2).unwrap();
        for c in Convention::ALL {
            let u = evaluate(&round, c, PhaseGate::Paper).unwrap();
            assert!(u.max_abs_diff(&ComplexMatrix::identity(9)) < 1e-10);
        }
    }

    #[test]
    fn conventions_are_related_by_reversal() {
        for id in TableId::ALL {
            for row in DecompositionTable::load(id).rows {
                let a = evaluate(&row.word, Convention::LeftFirst, PhaseGate::Paper).unwrap();
                let b = evaluate(&row.word.reversed(), Convention::LeftLast, PhaseGate::Paper).unwrap();
                assert!(a.max_abs_diff(&b) < 1e-12);
            }
        }
    }

    #[test]
    fn basis_from_word_examples() {
        let fixtures = qutrit_fixtures();
        let w = parse_word("F^{-1}", 1).unwrap();
        for c in Convention::ALL {
            let b = basis_from_word(&w, c, PhaseGate::Paper, "2").unwrap();
            assert!(match_basis(&b, &fixtures[1], 1e-12).is_some());
        }

        let b = basis_from_word(&GateWord::identity(2), Convention::LeftFirst, PhaseGate::Paper, "1").unwrap();
        assert_eq!(b.to_matrix(), ComplexMatrix::identity(9));

        let w = parse_word("F_{1}^{-1}F_{2}^{-1}", 2).unwrap();
        let product = basis_from_word(&w, Convention::LeftFirst, PhaseGate::Paper, "2").unwrap();
        let pair = MubSet::new(vec![Basis::standard(9), product]).unwrap();
        assert!(verify_unbiased(&pair).pass);
    }

    #[test]
    fn embedded_tables_have_expected_shape() {
        let sizes = [(TableId::I, 3), (TableId::II, 9), (TableId::III, 28)];
        for (id, rows) in sizes {
            let t = DecompositionTable::load(id);
            assert_eq!(t.rows.len(), rows);
            assert_eq!(t.n_qutrits, id.n_qutrits());
        }
    }

    #[test]
    fn nonlocal_counts() {
        assert_eq!(count_nonlocal(&DecompositionTable::load(TableId::I)), 0);
        assert_eq!(count_nonlocal(&DecompositionTable::load(TableId::II)), 6);
        assert_eq!(count_nonlocal(&DecompositionTable::load(TableId::III)), 44);
        let per_row = nonlocal_per_row(&DecompositionTable::load(TableId::II));
        let with_x: Vec<&str> = per_row.iter().filter(|(_, n)| *n > 0).map(|(l, _)| l.as_str()).collect();
        assert_eq!(with_x, ["4", "5", "6", "8", "9", "10"]);
    }

    #[test]
    fn table_one_is_unbiased_left_first_with_printed_phase_gate() {
        let t = DecompositionTable::load(TableId::I);
        let report = verify_table(&t, ConventionChoice::Auto, PhaseGate::Paper).unwrap();
        assert_eq!(report.convention_used, Convention::LeftFirst);
        assert!(report.all_unbiased);
        assert_eq!(report.bases_checked, 4);
        assert_eq!(report.pairs_checked, 6);
        assert!(report.max_deviation < 1e-10);
    }

    #[test]
    fn table_parse_reports_line_offsets() {
        let err = DecompositionTable::parse(TableId::II, "2: F1 F2\n3: F1 Q\n").unwrap_err();
        match err {
            Error::Parse { position, .. } => assert_eq!(position, 9 + 2 + 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(DecompositionTable::parse(TableId::II, "no colon here").is_err());
    }
}
