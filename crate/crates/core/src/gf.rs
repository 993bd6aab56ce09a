//! Arithmetic in GF(3), GF(9) and GF(27).
//!
//! An element is stored as its coefficient triple `(c0, c1, c2)` on the
//! polynomial basis `1, θ, θ²`, with θ a root of the field's monic modulus.
//! The modulus is held by [`FieldSpec`], which also fixes the bijection
//! between field elements and integer indices used to label basis vectors
//! and vector components.
//!
//! Default moduli:
//!
//! | order | modulus        |
//! |-------|----------------|
//! | 3     | θ              |
//! | 9     | θ² + θ + 2     |
//! | 27    | θ³ + 2θ + 1    |

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An element of GF(3^n), n ≤ 3.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement {
    coeffs: [u8; 3],
    order: u8,
}

impl FieldElement {
    /// Builds an element from its coefficients, reducing each one mod 3.
    ///
    /// Fails if a coefficient at or above the extension degree is nonzero
    /// or the order is not 3, 9 or 27.
    pub fn new(coeffs: [u8; 3], order: usize) -> Result<Self> {
        let degree = degree_of(order)?;
        let coeffs = coeffs.map(|c| c % 3);
        if coeffs[degree..].iter().any(|&c| c != 0) {
            return Err(Error::InvalidField(format!(
                "coefficients {coeffs:?} exceed degree {degree} of GF({order})"
            )));
        }
        Ok(Self { coeffs, order: order as u8 })
    }

    pub fn zero(order: usize) -> Result<Self> {
        Self::new([0, 0, 0], order)
    }

    pub fn one(order: usize) -> Result<Self> {
        Self::new([1, 0, 0], order)
    }

    /// The element θ (written α in some texts). Only defined for n ≥ 2.
    pub fn generator(order: usize) -> Result<Self> {
        Self::new([0, 1, 0], order)
    }

    pub fn coeffs(&self) -> [u8; 3] {
        self.coeffs
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs == [0, 0, 0]
    }

    fn key(&self) -> usize {
        self.coeffs[0] as usize + 3 * self.coeffs[1] as usize + 9 * self.coeffs[2] as usize
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (power, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let term = match (power, c) {
                (0, c) => c.to_string(),
                (1, 1) => "α".to_string(),
                (1, c) => format!("{c}α"),
                (_, 1) => "α²".to_string(),
                (_, c) => format!("{c}α²"),
            };
            terms.push(term);
        }
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join("+"))
        }
    }
}

fn degree_of(order: usize) -> Result<usize> {
    match order {
        3 => Ok(1),
        9 => Ok(2),
        27 => Ok(3),
        _ => Err(Error::InvalidField(format!(
            "order {order} is not one of 3, 9, 27"
        ))),
    }
}

/// A concrete field GF(3^n): modulus polynomial plus element enumeration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FieldSpecRepr", into = "FieldSpecRepr")]
pub struct FieldSpec {
    order: usize,
    degree: usize,
    /// Monic modulus, coefficients low to high, length `degree + 1`.
    modulus: Vec<u8>,
    enumeration: Vec<FieldElement>,
    /// Coefficient key → enumeration index.
    index_of: [usize; 27],
}

impl FieldSpec {
    /// The default field of the given order (see the module table).
    ///
    /// GF(9) is enumerated as `0, α, 2α, 1, 1+α, 1+2α, 2, 2+α, 2+2α`; GF(27)
    /// lexicographically on `(c2, c1, c0)`.
    pub fn standard(order: usize) -> Result<Self> {
        match order {
            3 => Self::new(vec![0, 1], (0..3).map(|c| [c, 0, 0]).collect()),
            9 => {
                let mut enumeration = Vec::with_capacity(9);
                for c0 in 0..3 {
                    for c1 in 0..3 {
                        enumeration.push([c0, c1, 0]);
                    }
                }
                Self::new(vec![2, 1, 1], enumeration)
            }
            27 => Self::new(vec![1, 2, 0, 1], lexicographic(3)),
            _ => Err(Error::InvalidField(format!(
                "order {order} is not one of 3, 9, 27"
            ))),
        }
    }

    /// The default field for `n_qutrits` qutrits, order 3^n.
    pub fn for_qutrits(n_qutrits: usize) -> Result<Self> {
        match n_qutrits {
            1..=3 => Self::standard(3usize.pow(n_qutrits as u32)),
            _ => Err(Error::Unsupported(format!(
                "{n_qutrits} qutrits (only 1 to 3 are supported)"
            ))),
        }
    }

    /// Builds a field from a monic modulus (low-to-high coefficients) and
    /// an enumeration of coefficient triples.
    ///
    /// The modulus must be irreducible over GF(3) and the enumeration must
    /// list every element exactly once, starting with zero.
    pub fn new(modulus: Vec<u8>, enumeration: Vec<[u8; 3]>) -> Result<Self> {
        let degree = modulus
            .len()
            .checked_sub(1)
            .filter(|d| (1..=3).contains(d))
            .ok_or_else(|| {
                Error::InvalidField(format!("modulus {modulus:?} must have degree 1 to 3"))
            })?;
        if modulus.iter().any(|&c| c > 2) {
            return Err(Error::InvalidField(format!(
                "modulus {modulus:?} has coefficients outside GF(3)"
            )));
        }
        if modulus[degree] != 1 {
            return Err(Error::InvalidField(format!("modulus {modulus:?} is not monic")));
        }
        if !is_irreducible(&modulus) {
            return Err(Error::InvalidField(format!(
                "modulus {modulus:?} is reducible over GF(3)"
            )));
        }
        let order = 3usize.pow(degree as u32);
        if enumeration.len() != order {
            return Err(Error::InvalidField(format!(
                "enumeration has {} entries, expected {order}",
                enumeration.len()
            )));
        }
        let mut index_of = [usize::MAX; 27];
        let mut elements = Vec::with_capacity(order);
        for (i, coeffs) in enumeration.into_iter().enumerate() {
            if coeffs.iter().any(|&c| c > 2) {
                return Err(Error::InvalidField(format!(
                    "enumeration entry {coeffs:?} has coefficients outside GF(3)"
                )));
            }
            let element = FieldElement::new(coeffs, order)?;
            if index_of[element.key()] != usize::MAX {
                return Err(Error::InvalidField(format!(
                    "enumeration lists {element} twice"
                )));
            }
            index_of[element.key()] = i;
            elements.push(element);
        }
        if !elements[0].is_zero() {
            return Err(Error::InvalidField("enumeration must start with zero".into()));
        }
        Ok(Self {
            order,
            degree,
            modulus,
            enumeration: elements,
            index_of,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Extension degree n over GF(3).
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn modulus(&self) -> &[u8] {
        &self.modulus
    }

    /// All elements in enumeration order. Index `i` of this slice is the
    /// label of the element everywhere else in the crate.
    pub fn elements(&self) -> &[FieldElement] {
        &self.enumeration
    }

    pub fn element(&self, index: usize) -> FieldElement {
        self.enumeration[index]
    }

    pub fn index_of(&self, a: FieldElement) -> Result<usize> {
        self.check(a)?;
        Ok(self.index_of[a.key()])
    }

    fn check(&self, a: FieldElement) -> Result<()> {
        if a.order() != self.order {
            return Err(Error::FieldMismatch {
                left: a.order(),
                right: self.order,
            });
        }
        Ok(())
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.add_unchecked(a, b))
    }

    pub fn neg(&self, a: FieldElement) -> Result<FieldElement> {
        self.check(a)?;
        Ok(FieldElement {
            coeffs: a.coeffs.map(|c| (3 - c) % 3),
            order: a.order,
        })
    }

    /// Polynomial product reduced modulo the field's modulus.
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.mul_unchecked(a, b))
    }

    pub fn pow(&self, a: FieldElement, exp: u32) -> Result<FieldElement> {
        self.check(a)?;
        Ok(self.pow_unchecked(a, exp))
    }

    /// Multiplicative inverse, `None` for zero.
    pub fn inv(&self, a: FieldElement) -> Result<Option<FieldElement>> {
        self.check(a)?;
        if a.is_zero() {
            return Ok(None);
        }
        // a^(q-2) = a^-1 in the multiplicative group of order q-1
        Ok(Some(self.pow_unchecked(a, self.order as u32 - 2)))
    }

    /// Field trace a + a³ + … + a^(3^(n-1)), returned as its GF(3) label.
    pub fn trace(&self, a: FieldElement) -> Result<u8> {
        self.check(a)?;
        Ok(self.trace_unchecked(a))
    }

    pub(crate) fn add_unchecked(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let mut coeffs = [0u8; 3];
        for i in 0..3 {
            coeffs[i] = (a.coeffs[i] + b.coeffs[i]) % 3;
        }
        FieldElement { coeffs, order: a.order }
    }

    pub(crate) fn mul_unchecked(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let mut product = [0u8; 5];
        for i in 0..self.degree {
            for j in 0..self.degree {
                product[i + j] = (product[i + j] + a.coeffs[i] * b.coeffs[j]) % 3;
            }
        }
        // θ^n = -(m_0 + m_1 θ + … + m_{n-1} θ^{n-1}), applied from the top down
        for top in (self.degree..2 * self.degree - 1).rev() {
            let lead = product[top];
            if lead == 0 {
                continue;
            }
            product[top] = 0;
            let shift = top - self.degree;
            for (k, &m) in self.modulus[..self.degree].iter().enumerate() {
                product[shift + k] = (product[shift + k] + 3 * 3 - lead * m) % 3;
            }
        }
        FieldElement {
            coeffs: [product[0], product[1], product[2]],
            order: a.order,
        }
    }

    fn pow_unchecked(&self, a: FieldElement, mut exp: u32) -> FieldElement {
        let mut base = a;
        let mut acc = FieldElement {
            coeffs: [1, 0, 0],
            order: a.order,
        };
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul_unchecked(acc, base);
            }
            base = self.mul_unchecked(base, base);
            exp >>= 1;
        }
        acc
    }

    pub(crate) fn trace_unchecked(&self, a: FieldElement) -> u8 {
        let mut sum = a;
        let mut frob = a;
        for _ in 1..self.degree {
            frob = self.pow_unchecked(frob, 3);
            sum = self.add_unchecked(sum, frob);
        }
        debug_assert!(
            sum.coeffs[1] == 0 && sum.coeffs[2] == 0,
            "trace left the prime field"
        );
        sum.coeffs[0]
    }
}

fn lexicographic(degree: usize) -> Vec<[u8; 3]> {
    let order = 3usize.pow(degree as u32);
    (0..order)
        .map(|i| [(i % 3) as u8, ((i / 3) % 3) as u8, ((i / 9) % 3) as u8])
        .collect()
}

/// Irreducibility over GF(3) for degree ≤ 3: a polynomial of degree 2 or 3
/// is irreducible iff it has no root in GF(3).
fn is_irreducible(poly: &[u8]) -> bool {
    let degree = poly.len() - 1;
    if degree == 1 {
        return true;
    }
    (0u32..3).all(|x| {
        let value: u32 = poly
            .iter()
            .enumerate()
            .map(|(k, &c)| c as u32 * x.pow(k as u32))
            .sum();
        !value.is_multiple_of(3)
    })
}

#[derive(Serialize, Deserialize)]
struct FieldSpecRepr {
    order: usize,
    modulus: Vec<u8>,
    enumeration: Vec<[u8; 3]>,
}

impl From<FieldSpec> for FieldSpecRepr {
    fn from(spec: FieldSpec) -> Self {
        Self {
            order: spec.order,
            modulus: spec.modulus,
            enumeration: spec.enumeration.iter().map(|e| e.coeffs).collect(),
        }
    }
}

impl TryFrom<FieldSpecRepr> for FieldSpec {
    type Error = Error;

    fn try_from(repr: FieldSpecRepr) -> Result<Self> {
        let spec = FieldSpec::new(repr.modulus, repr.enumeration)?;
        if spec.order != repr.order {
            return Err(Error::InvalidField(format!(
                "declared order {} does not match modulus degree (order {})",
                repr.order, spec.order
            )));
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Schoolbook product and long division over GF(3), independent of the
    /// reduction loop in `mul_unchecked`.
    fn poly_mulmod(a: &[u8], b: &[u8], modulus: &[u8]) -> Vec<u8> {
        let mut prod = vec![0i32; a.len() + b.len()];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] += x as i32 * y as i32;
            }
        }
        let n = modulus.len() - 1;
        // modulus is monic, so each step cancels the current leading term
        for top in (n..prod.len()).rev() {
            let q = prod[top].rem_euclid(3);
            for (k, &m) in modulus.iter().enumerate() {
                prod[top - n + k] -= q * m as i32;
            }
        }
        prod.truncate(n);
        prod.into_iter().map(|c| c.rem_euclid(3) as u8).collect()
    }

    fn all(spec: &FieldSpec) -> Vec<FieldElement> {
        spec.elements().to_vec()
    }

    fn el(c: [u8; 3], order: usize) -> FieldElement {
        FieldElement::new(c, order).unwrap()
    }

    #[test]
    fn add_examples() {
        let f3 = FieldSpec::standard(3).unwrap();
        assert_eq!(f3.add(el([2, 0, 0], 3), el([2, 0, 0], 3)).unwrap(), el([1, 0, 0], 3));

        let f9 = FieldSpec::standard(9).unwrap();
        let sum = f9.add(el([1, 1, 0], 9), el([2, 2, 0], 9)).unwrap();
        assert!(sum.is_zero());

        let f27 = FieldSpec::standard(27).unwrap();
        let zero = FieldElement::zero(27).unwrap();
        for x in all(&f27) {
            assert_eq!(f27.add(zero, x).unwrap(), x);
        }
    }

    #[test]
    fn mixed_fields_are_rejected() {
        let f9 = FieldSpec::standard(9).unwrap();
        let a = el([1, 0, 0], 9);
        let b = el([1, 0, 0], 27);
        assert!(matches!(f9.add(a, b), Err(Error::FieldMismatch { .. })));
        assert!(matches!(f9.mul(b, a), Err(Error::FieldMismatch { .. })));
        assert!(f9.trace(b).is_err());
    }

    #[test]
    fn mul_examples() {
        let f9 = FieldSpec::standard(9).unwrap();
        let alpha = FieldElement::generator(9).unwrap();
        assert_eq!(f9.mul(alpha, alpha).unwrap(), el([1, 2, 0], 9));
        let one = FieldElement::one(9).unwrap();
        for x in all(&f9) {
            assert_eq!(f9.mul(one, x).unwrap(), x);
        }

        let f27 = FieldSpec::standard(27).unwrap();
        let a = FieldElement::generator(27).unwrap();
        let a2 = el([0, 0, 1], 27);
        let expected = poly_mulmod(&[0, 1, 0], &[0, 0, 1], f27.modulus());
        assert_eq!(expected, vec![2, 1, 0]);
        assert_eq!(f27.mul(a, a2).unwrap().coeffs(), [2, 1, 0]);
    }

    #[test]
    fn mul_matches_long_division_exhaustively() {
        for order in [3, 9, 27] {
            let f = FieldSpec::standard(order).unwrap();
            let n = f.degree();
            for a in all(&f) {
                for b in all(&f) {
                    let got = f.mul(a, b).unwrap().coeffs();
                    let want = poly_mulmod(&a.coeffs()[..n], &b.coeffs()[..n], f.modulus());
                    assert_eq!(&got[..n], &want[..], "{a} * {b} in GF({order})");
                }
            }
        }
    }

    #[test]
    fn trace_examples() {
        let f3 = FieldSpec::standard(3).unwrap();
        for x in all(&f3) {
            assert_eq!(f3.trace(x).unwrap(), x.coeffs()[0]);
        }
        let f9 = FieldSpec::standard(9).unwrap();
        let alpha = FieldElement::generator(9).unwrap();
        assert_eq!(f9.pow(alpha, 3).unwrap(), el([2, 2, 0], 9));
        assert_eq!(f9.trace(alpha).unwrap(), 2);
        assert_eq!(f9.trace(FieldElement::zero(9).unwrap()).unwrap(), 0);
    }

    #[test]
    fn enumeration_orders() {
        let f3 = FieldSpec::standard(3).unwrap();
        let labels: Vec<String> = f3.elements().iter().map(|e| e.to_string()).collect();
        assert_eq!(labels, ["0", "1", "2"]);

        let f9 = FieldSpec::standard(9).unwrap();
        let labels: Vec<String> = f9.elements().iter().map(|e| e.to_string()).collect();
        assert_eq!(
            labels,
            ["0", "α", "2α", "1", "1+α", "1+2α", "2", "2+α", "2+2α"]
        );

        let f27 = FieldSpec::standard(27).unwrap();
        let mut sorted: Vec<[u8; 3]> = (0..27u8)
            .map(|i| [i % 3, (i / 3) % 3, i / 9])
            .collect();
        sorted.sort_by_key(|c| (c[2], c[1], c[0]));
        let got: Vec<[u8; 3]> = f27.elements().iter().map(|e| e.coeffs()).collect();
        assert_eq!(got, sorted);
        for (i, &e) in f27.elements().iter().enumerate() {
            assert_eq!(f27.index_of(e).unwrap(), i);
        }
    }

    #[test]
    fn field_axioms_exhaustive() {
        for order in [9, 27] {
            let f = FieldSpec::standard(order).unwrap();
            let xs = all(&f);
            let zero = FieldElement::zero(order).unwrap();
            let one = FieldElement::one(order).unwrap();
            for &a in &xs {
                if !a.is_zero() {
                    let inv = f.inv(a).unwrap().unwrap();
                    assert_eq!(f.mul(a, inv).unwrap(), one);
                    let count = xs.iter().filter(|&&b| f.mul(a, b).unwrap() == one).count();
                    assert_eq!(count, 1, "inverse of {a} not unique");
                } else {
                    assert!(f.inv(a).unwrap().is_none());
                }
                assert_eq!(f.add(a, f.neg(a).unwrap()).unwrap(), zero);
                for &b in &xs {
                    assert_eq!(f.add(a, b).unwrap(), f.add(b, a).unwrap());
                    assert_eq!(f.mul(a, b).unwrap(), f.mul(b, a).unwrap());
                    for &c in &xs {
                        let ab_c = f.mul(f.mul(a, b).unwrap(), c).unwrap();
                        let a_bc = f.mul(a, f.mul(b, c).unwrap()).unwrap();
                        assert_eq!(ab_c, a_bc);
                        let sum_assoc_l = f.add(f.add(a, b).unwrap(), c).unwrap();
                        let sum_assoc_r = f.add(a, f.add(b, c).unwrap()).unwrap();
                        assert_eq!(sum_assoc_l, sum_assoc_r);
                        let lhs = f.mul(a, f.add(b, c).unwrap()).unwrap();
                        let rhs = f.add(f.mul(a, b).unwrap(), f.mul(a, c).unwrap()).unwrap();
                        assert_eq!(lhs, rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn trace_properties_exhaustive() {
        for order in [3, 9, 27] {
            let f = FieldSpec::standard(order).unwrap();
            let xs = all(&f);
            let mut fibers = [0usize; 3];
            for &a in &xs {
                let ta = f.trace(a).unwrap();
                fibers[ta as usize] += 1;
                assert_eq!(f.trace(f.pow(a, 3).unwrap()).unwrap(), ta);
                for &b in &xs {
                    let tb = f.trace(b).unwrap();
                    assert_eq!(f.trace(f.add(a, b).unwrap()).unwrap(), (ta + tb) % 3);
                }
            }
            assert_eq!(fibers, [order / 3; 3]);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        // θ² + 1 has no root mod 3 and is fine; θ² + 2 = (θ-1)(θ+1) is not
        assert!(FieldSpec::new(vec![1, 0, 1], lexicographic(2)).is_ok());
        assert!(FieldSpec::new(vec![2, 0, 1], lexicographic(2)).is_err());
        assert!(FieldSpec::new(vec![2, 1, 2], lexicographic(2)).is_err());
        let mut dup = lexicographic(2);
        dup[3] = dup[4];
        assert!(FieldSpec::new(vec![2, 1, 1], dup).is_err());
        let mut nonzero_first = lexicographic(2);
        nonzero_first.swap(0, 1);
        assert!(FieldSpec::new(vec![2, 1, 1], nonzero_first).is_err());
        assert!(FieldSpec::standard(81).is_err());
        assert!(FieldElement::new([0, 1, 0], 3).is_err());
    }

    #[test]
    fn spec_serde_round_trip() {
        let f9 = FieldSpec::standard(9).unwrap();
        let json = serde_json::to_string(&f9).unwrap();
        assert!(json.starts_with(r#"{"order":9,"modulus":[2,1,1],"enumeration":[[0,0,0],[0,1,0]"#));
        let back: FieldSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f9);
        let bad = r#"{"order":9,"modulus":[2,0,1],"enumeration":[]}"#;
        assert!(serde_json::from_str::<FieldSpec>(bad).is_err());
    }
}
