//! Exact multivariate polynomial and rational-function arithmetic over Q.
//!
//! Polynomials are sparse maps from monomials to `BigRational` coefficients.
//! Monomials are ordered graded-lexicographically, which fixes the leading
//! term used by [`Polynomial::divides`] and makes [`Polynomial::leading_part`]
//! the maximal-total-degree slice.

mod transform;

pub use transform::RationalTransform;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RatFunError {
    #[error("variate dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("point has {got} coordinates, expected {expected}")]
    PointLength { expected: usize, got: usize },
    #[error("the zero polynomial has no leading part")]
    ZeroLeadingPart,
    #[error("division by the zero polynomial")]
    ZeroDivisor,
    #[error("denominator vanishes at the evaluation point")]
    DenominatorVanishes,
    #[error("variable index {index} out of range for dimension {n}")]
    VariableIndex { index: usize, n: usize },
    #[error("invalid rational transform: {0}")]
    InvalidTransform(String),
    #[error("invalid rational literal {0:?}")]
    BadRational(String),
}

/// Formats a rational as `"a"` or `"a/b"`; round-trips bit-exactly through
/// [`parse_rational`].
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"a"` or `"a/b"` with decimal integer parts.
pub fn parse_rational(s: &str) -> Result<BigRational, RatFunError> {
    let bad = || RatFunError::BadRational(s.to_string());
    match s.split_once('/') {
        None => {
            let n = BigInt::from_str(s).map_err(|_| bad())?;
            Ok(BigRational::from_integer(n))
        }
        Some((num, den)) => {
            let n = BigInt::from_str(num).map_err(|_| bad())?;
            let d = BigInt::from_str(den).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
    }
}

/// Exponent vector of a single monomial; the length is the variate dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn constant(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn variable(n: usize, index: usize) -> Result<Self, RatFunError> {
        if index >= n {
            return Err(RatFunError::VariableIndex { index, n });
        }
        let mut e = vec![0; n];
        e[index] = 1;
        Ok(Monomial(e))
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Componentwise quotient, or `None` if some exponent of `other` exceeds
    /// the corresponding exponent of `self`.
    fn checked_div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            out.push(a.checked_sub(*b)?);
        }
        Some(Monomial(out))
    }
}

// Graded lexicographic order: compare total degree first, ties lexicographic.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse multivariate polynomial with exact rational coefficients.
///
/// Invariants: no stored zero coefficients, and every monomial has exponent
/// length equal to the variate dimension `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Monomial, BigRational>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, value: BigRational) -> Self {
        let mut p = Polynomial::zero(n);
        if !value.is_zero() {
            p.terms.insert(Monomial::constant(n), value);
        }
        p
    }

    pub fn one(n: usize) -> Self {
        Polynomial::constant(n, BigRational::one())
    }

    /// The coordinate polynomial `s_index` (zero-based index).
    pub fn variable(n: usize, index: usize) -> Result<Self, RatFunError> {
        let mono = Monomial::variable(n, index)?;
        let mut p = Polynomial::zero(n);
        p.terms.insert(mono, BigRational::one());
        Ok(p)
    }

    /// Builds a polynomial from (exponent vector, coefficient) pairs.
    /// Repeated monomials are accumulated; zero coefficients are dropped.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self, RatFunError>
    where
        I: IntoIterator<Item = (Vec<u32>, BigRational)>,
    {
        let mut p = Polynomial::zero(n);
        for (exps, coeff) in terms {
            if exps.len() != n {
                return Err(RatFunError::DimensionMismatch {
                    left: n,
                    right: exps.len(),
                });
            }
            p.add_term(Monomial::new(exps), coeff);
        }
        Ok(p)
    }

    /// Convenience constructor with integer coefficients.
    pub fn from_int_terms(n: usize, terms: &[(&[u32], i64)]) -> Result<Self, RatFunError> {
        Polynomial::from_terms(
            n,
            terms
                .iter()
                .map(|(e, c)| (e.to_vec(), BigRational::from_integer(BigInt::from(*c)))),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    /// Total degree, or `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        // Graded order: the last key has maximal total degree.
        self.terms.last_key_value().map(|(m, _)| m.total_degree())
    }

    pub fn coefficient(&self, exponents: &[u32]) -> BigRational {
        self.terms
            .get(&Monomial::new(exponents.to_vec()))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Constant term, i.e. the value at the origin.
    pub fn constant_term(&self) -> BigRational {
        self.coefficient(&vec![0; self.n])
    }

    fn add_term(&mut self, mono: Monomial, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(mono) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().clone() + coeff;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    fn check_dim(&self, other: &Polynomial) -> Result<(), RatFunError> {
        if self.n != other.n {
            return Err(RatFunError::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial, RatFunError> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Polynomial) -> Result<Polynomial, RatFunError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, factor: &BigRational) -> Polynomial {
        if factor.is_zero() {
            return Polynomial::zero(self.n);
        }
        Polynomial {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c * factor))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Result<Polynomial, RatFunError> {
        self.check_dim(other)?;
        let mut out = Polynomial::zero(self.n);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    /// Exact evaluation at a rational point.
    pub fn eval(&self, point: &[BigRational]) -> Result<BigRational, RatFunError> {
        if point.len() != self.n {
            return Err(RatFunError::PointLength {
                expected: self.n,
                got: point.len(),
            });
        }
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for (x, &e) in point.iter().zip(m.exponents()) {
                for _ in 0..e {
                    term *= x;
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Floating-point evaluation at a real point.
    pub fn eval_f64(&self, point: &[f64]) -> Result<f64, RatFunError> {
        if point.len() != self.n {
            return Err(RatFunError::PointLength {
                expected: self.n,
                got: point.len(),
            });
        }
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut term = rational_to_f64(c);
            for (x, &e) in point.iter().zip(m.exponents()) {
                term *= x.powi(e as i32);
            }
            acc += term;
        }
        Ok(acc)
    }

    /// The homogeneous component of maximal total degree.
    pub fn leading_part(&self) -> Result<Polynomial, RatFunError> {
        let top = self.total_degree().ok_or(RatFunError::ZeroLeadingPart)?;
        Ok(Polynomial {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.total_degree() == top)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        })
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degrees = self.terms.keys().map(|m| m.total_degree());
        match degrees.next() {
            None => true,
            Some(d) => degrees.all(|e| e == d),
        }
    }

    /// Tests whether `self` divides `dividend` exactly, returning the quotient.
    ///
    /// Multivariate division by the single divisor `self` under the graded
    /// lexicographic order; a singleton divisor set is a Groebner basis of the
    /// principal ideal it generates, so a zero remainder is equivalent to
    /// divisibility.
    pub fn divides(&self, dividend: &Polynomial) -> Result<Option<Polynomial>, RatFunError> {
        let (quotient, remainder) = self.div_rem(dividend)?;
        Ok(remainder.is_zero().then_some(quotient))
    }

    /// Division with remainder by the single divisor `self`: returns `(q, r)`
    /// with `dividend = self * q + r` and no term of `r` divisible by the
    /// leading term of `self`.
    pub fn div_rem(&self, dividend: &Polynomial) -> Result<(Polynomial, Polynomial), RatFunError> {
        self.check_dim(dividend)?;
        if self.is_zero() {
            return Err(RatFunError::ZeroDivisor);
        }
        let (lead_mono, lead_coeff) = self.terms.last_key_value().expect("nonzero divisor");
        let mut rest = dividend.clone();
        let mut quotient = Polynomial::zero(self.n);
        let mut remainder = Polynomial::zero(self.n);
        while let Some((m, c)) = rest.terms.last_key_value() {
            let m = m.clone();
            let c = c.clone();
            rest.terms.remove(&m);
            match m.checked_div(lead_mono) {
                Some(qm) => {
                    let qc = &c / lead_coeff;
                    // Subtract qc * qm * (self minus its leading term).
                    for (sm, sc) in self.terms.iter().filter(|(sm, _)| *sm != lead_mono) {
                        rest.add_term(qm.mul(sm), -(&qc * sc));
                    }
                    quotient.add_term(qm, qc);
                }
                None => remainder.add_term(m, c),
            }
        }
        Ok((quotient, remainder))
    }

    /// Sets variable `index` to zero, dropping it from the variable list.
    pub fn restrict_var_zero(&self, index: usize) -> Result<Polynomial, RatFunError> {
        if index >= self.n {
            return Err(RatFunError::VariableIndex { index, n: self.n });
        }
        let mut out = Polynomial::zero(self.n - 1);
        for (m, c) in &self.terms {
            if m.exponents()[index] != 0 {
                continue;
            }
            let exps: Vec<u32> = m
                .exponents()
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != index)
                .map(|(_, &e)| e)
                .collect();
            out.add_term(Monomial::new(exps), c.clone());
        }
        Ok(out)
    }

    /// Reinterprets the polynomial in a larger variable set, padding with
    /// zero exponents.
    pub fn extend_vars(&self, new_n: usize) -> Result<Polynomial, RatFunError> {
        if new_n < self.n {
            return Err(RatFunError::DimensionMismatch {
                left: self.n,
                right: new_n,
            });
        }
        let mut out = Polynomial::zero(new_n);
        for (m, c) in &self.terms {
            let mut exps = m.exponents().to_vec();
            exps.resize(new_n, 0);
            out.add_term(Monomial::new(exps), c.clone());
        }
        Ok(out)
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut printed_coeff = false;
            if !mag.is_one() || m.is_constant() {
                write!(f, "{}", format_rational(&mag))?;
                printed_coeff = true;
            }
            for (j, &e) in m.exponents().iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if printed_coeff {
                    write!(f, "*")?;
                }
                printed_coeff = true;
                write!(f, "s{}", j + 1)?;
                if e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    e: Vec<u32>,
    c: String,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    n: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let repr = PolyRepr {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| TermRepr {
                    e: m.exponents().to_vec(),
                    c: format_rational(c),
                })
                .collect(),
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = PolyRepr::deserialize(deserializer)?;
        let terms = repr
            .terms
            .into_iter()
            .map(|t| Ok((t.e, parse_rational(&t.c).map_err(D::Error::custom)?)))
            .collect::<Result<Vec<_>, D::Error>>()?;
        Polynomial::from_terms(repr.n, terms).map_err(D::Error::custom)
    }
}
