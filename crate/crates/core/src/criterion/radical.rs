//! Exact arithmetic for linear forms whose coefficients live in quadratic
//! extensions of Q: values `a + b*sqrt(d)` with rational `a`, `b` and a
//! non-negative rational radicand `d`.
//!
//! Multiplying factors back together needs sums over several radicands; the
//! [`RadicalSum`] type keys terms by a square-reduced integer radicand so
//! that conjugate contributions cancel exactly.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::ratfun::format_rational;

/// `rational + radical * sqrt(radicand)`, with `radicand >= 0`. A zero
/// radical part is normalized to radicand 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadicalCoeff {
    pub rational: BigRational,
    pub radical: BigRational,
    pub radicand: BigRational,
}

impl RadicalCoeff {
    pub fn from_rational(value: BigRational) -> Self {
        RadicalCoeff {
            rational: value,
            radical: BigRational::zero(),
            radicand: BigRational::one(),
        }
    }

    /// Builds `a + b*sqrt(d)`, folding perfect-square radicands into the
    /// rational part.
    pub fn new(a: BigRational, b: BigRational, d: BigRational) -> Self {
        assert!(!d.is_negative(), "radicand must be non-negative");
        if b.is_zero() || d.is_zero() {
            return RadicalCoeff::from_rational(a);
        }
        let (scale, reduced) = reduce_radicand(&d);
        if reduced.is_one() {
            return RadicalCoeff::from_rational(a + b * scale);
        }
        RadicalCoeff {
            rational: a,
            radical: b * scale,
            radicand: BigRational::from_integer(reduced),
        }
    }

    pub fn is_rational(&self) -> bool {
        self.radical.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.radical.is_zero()
    }

    pub fn neg(&self) -> Self {
        RadicalCoeff {
            rational: -self.rational.clone(),
            radical: -self.radical.clone(),
            radicand: self.radicand.clone(),
        }
    }

    /// Exact sign: -1, 0, or 1.
    pub fn signum(&self) -> i32 {
        let a = &self.rational;
        let b = &self.radical;
        if b.is_zero() {
            return rational_signum(a);
        }
        if a.is_zero() {
            return rational_signum(b);
        }
        let (sa, sb) = (rational_signum(a), rational_signum(b));
        if sa == sb {
            return sa;
        }
        // Opposite signs: compare a^2 against b^2 d.
        let lhs = a * a;
        let rhs = b * b * &self.radicand;
        match lhs.cmp(&rhs) {
            std::cmp::Ordering::Greater => sa,
            std::cmp::Ordering::Less => sb,
            std::cmp::Ordering::Equal => 0,
        }
    }

    pub fn to_f64(&self) -> f64 {
        crate::ratfun::rational_to_f64(&self.rational)
            + crate::ratfun::rational_to_f64(&self.radical)
                * crate::ratfun::rational_to_f64(&self.radicand).sqrt()
    }
}

fn rational_signum(r: &BigRational) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_negative() {
        -1
    } else {
        1
    }
}

/// Writes `sqrt(d)` for rational `d >= 0` as `scale * sqrt(reduced)` with a
/// square-reduced positive integer `reduced`.
fn reduce_radicand(d: &BigRational) -> (BigRational, BigInt) {
    debug_assert!(!d.is_negative() && !d.is_zero());
    // sqrt(p/q) = sqrt(p q) / q
    let p = d.numer().clone();
    let q = d.denom().clone();
    let mut r = &p * &q;
    let mut scale = BigRational::new(BigInt::one(), q);
    // Strip small square prime factors, then whole perfect squares.
    for prime in SMALL_PRIMES {
        let sq = BigInt::from(prime * prime);
        loop {
            let (quot, rem) = r.div_rem(&sq);
            if rem.is_zero() {
                r = quot;
                scale *= BigRational::from_integer(BigInt::from(prime));
            } else {
                break;
            }
        }
    }
    let root = r.sqrt();
    if &root * &root == r {
        scale *= BigRational::from_integer(root);
        r = BigInt::one();
    }
    (scale, r)
}

const SMALL_PRIMES: [u32; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97,
];

/// Exact sum of terms `c * sqrt(R)` keyed by square-reduced integer radicand
/// (radicand 1 holds the rational part).
#[derive(Debug, Clone, Default)]
pub struct RadicalSum {
    terms: BTreeMap<BigInt, BigRational>,
}

impl RadicalSum {
    pub fn zero() -> Self {
        RadicalSum::default()
    }

    fn push(&mut self, radicand: BigInt, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(radicand).or_insert_with(BigRational::zero);
        *entry += coeff;
        if entry.is_zero() {
            let key = self
                .terms
                .iter()
                .find(|(_, v)| v.is_zero())
                .map(|(k, _)| k.clone());
            if let Some(key) = key {
                self.terms.remove(&key);
            }
        }
    }

    pub fn add_coeff(&mut self, c: &RadicalCoeff) {
        self.push(BigInt::one(), c.rational.clone());
        if !c.radical.is_zero() {
            let (scale, reduced) = reduce_radicand(&c.radicand);
            self.push(reduced, &c.radical * scale);
        }
    }

    /// Adds the product of two coefficients, expanding
    /// `(a + b sqrt(d))(a' + b' sqrt(d'))` with square-reduced cross terms.
    pub fn add_product(&mut self, x: &RadicalCoeff, y: &RadicalCoeff) {
        let mut parts: Vec<(BigRational, BigRational)> = Vec::new();
        parts.push((&x.rational * &y.rational, BigRational::one()));
        if !y.radical.is_zero() {
            parts.push((&x.rational * &y.radical, y.radicand.clone()));
        }
        if !x.radical.is_zero() {
            parts.push((&y.rational * &x.radical, x.radicand.clone()));
        }
        if !x.radical.is_zero() && !y.radical.is_zero() {
            parts.push((&x.radical * &y.radical, &x.radicand * &y.radicand));
        }
        for (coeff, radicand) in parts {
            if coeff.is_zero() {
                continue;
            }
            if radicand.is_one() {
                self.push(BigInt::one(), coeff);
            } else {
                let (scale, reduced) = reduce_radicand(&radicand);
                self.push(reduced, coeff * scale);
            }
        }
    }

    pub fn is_rational(&self) -> bool {
        self.terms.keys().all(|k| k.is_one())
    }

    pub fn rational_part(&self) -> BigRational {
        self.terms
            .get(&BigInt::one())
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }
}

/// A linear form with radical coefficients, one entry per variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearFactor {
    pub coeffs: Vec<RadicalCoeff>,
}

impl LinearFactor {
    pub fn from_rationals(coeffs: Vec<BigRational>) -> Self {
        LinearFactor {
            coeffs: coeffs.into_iter().map(RadicalCoeff::from_rational).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn neg(&self) -> Self {
        LinearFactor {
            coeffs: self.coeffs.iter().map(RadicalCoeff::neg).collect(),
        }
    }

    /// Flips the sign so the first nonzero coefficient is positive; returns
    /// the sign that was factored out (+1 or -1).
    pub fn sign_normalize(&self) -> (LinearFactor, i32) {
        for c in &self.coeffs {
            match c.signum() {
                0 => continue,
                s if s < 0 => return (self.neg(), -1),
                _ => break,
            }
        }
        (self.clone(), 1)
    }

    /// True when every coefficient is non-negative.
    pub fn is_nonnegative(&self) -> bool {
        self.coeffs.iter().all(|c| c.signum() >= 0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rational: Vec<String> = self
            .coeffs
            .iter()
            .map(|c| format_rational(&c.rational))
            .collect();
        // Group the radical parts by radicand.
        let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.radical.is_zero() {
                continue;
            }
            let key = format_rational(&c.radicand);
            let entry = groups
                .entry(key)
                .or_insert_with(|| vec!["0".to_string(); self.coeffs.len()]);
            entry[j] = format_rational(&c.radical);
        }
        let mut value = serde_json::json!({ "coeffs": rational });
        if !groups.is_empty() {
            value["sqrt"] = serde_json::Value::Array(
                groups
                    .into_iter()
                    .map(|(radicand, coeffs)| {
                        serde_json::json!({ "radicand": radicand, "coeffs": coeffs })
                    })
                    .collect(),
            );
        }
        value
    }
}

/// Expands `c0 * f1 * f2` exactly; returns `None` if any product coefficient
/// keeps an irrational residue (which certifies a bookkeeping error in the
/// caller rather than a property of the form).
pub fn multiply_factors(
    c0: &BigRational,
    f1: &LinearFactor,
    f2: &LinearFactor,
) -> Option<crate::ratfun::Polynomial> {
    let n = f1.n();
    assert_eq!(n, f2.n());
    let mut terms: Vec<(Vec<u32>, BigRational)> = Vec::new();
    for i in 0..n {
        for j in i..n {
            let mut sum = RadicalSum::zero();
            sum.add_product(&f1.coeffs[i], &f2.coeffs[j]);
            if i != j {
                sum.add_product(&f1.coeffs[j], &f2.coeffs[i]);
            }
            if !sum.is_rational() {
                return None;
            }
            let mut exps = vec![0u32; n];
            exps[i] += 1;
            exps[j] += 1;
            terms.push((exps, sum.rational_part() * c0));
        }
    }
    crate::ratfun::Polynomial::from_terms(n, terms).ok()
}
