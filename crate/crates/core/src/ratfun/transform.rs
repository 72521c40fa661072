//! Rational multivariate Laplace transforms split into an atom at the origin
//! plus a strictly proper rational part.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{rational_to_f64, Polynomial, RatFunError};

/// A candidate law's transform `p0 + num(s)/den(s)`.
///
/// Construction enforces: `den(0) != 0`; the value at the origin is exactly 1
/// (`num(0)/den(0) = 1 - p0`); and the non-atomic part is strictly proper
/// (`num` is zero or has smaller total degree than `den`). Coprimality of
/// `num` and `den` cannot be verified here and is only recorded as a
/// declaration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TransformRepr", into = "TransformRepr")]
pub struct RationalTransform {
    p0: BigRational,
    num: Polynomial,
    den: Polynomial,
    coprime_declared: bool,
}

impl RationalTransform {
    pub fn new(
        p0: BigRational,
        num: Polynomial,
        den: Polynomial,
        coprime_declared: bool,
    ) -> Result<Self, RatFunError> {
        if num.n() != den.n() {
            return Err(RatFunError::DimensionMismatch {
                left: num.n(),
                right: den.n(),
            });
        }
        if p0 < BigRational::zero() || p0 > BigRational::one() {
            return Err(RatFunError::InvalidTransform(format!(
                "atom p0 = {} outside [0, 1]",
                p0
            )));
        }
        let den0 = den.constant_term();
        if den0.is_zero() {
            return Err(RatFunError::InvalidTransform(
                "denominator vanishes at the origin".into(),
            ));
        }
        let at_origin = num.constant_term() / &den0;
        if at_origin != BigRational::one() - &p0 {
            return Err(RatFunError::InvalidTransform(format!(
                "num(0)/den(0) = {} but 1 - p0 = {}",
                at_origin,
                BigRational::one() - &p0
            )));
        }
        if !num.is_zero() {
            let (dn, dd) = (num.total_degree().unwrap(), den.total_degree().unwrap_or(0));
            if dn >= dd {
                return Err(RatFunError::InvalidTransform(format!(
                    "non-atomic part is not strictly proper: deg num = {dn}, deg den = {dd}"
                )));
            }
        }
        Ok(RationalTransform {
            p0,
            num,
            den,
            coprime_declared,
        })
    }

    /// The point mass at the origin: transform identically 1.
    pub fn degenerate(n: usize) -> Self {
        RationalTransform {
            p0: BigRational::one(),
            num: Polynomial::zero(n),
            den: Polynomial::one(n),
            coprime_declared: true,
        }
    }

    pub fn n(&self) -> usize {
        self.num.n()
    }

    pub fn p0(&self) -> &BigRational {
        &self.p0
    }

    pub fn p0_f64(&self) -> f64 {
        rational_to_f64(&self.p0)
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn coprime_declared(&self) -> bool {
        self.coprime_declared
    }

    pub fn is_degenerate(&self) -> bool {
        self.p0.is_one()
    }

    /// `p0 + num(point)/den(point)` in floating point.
    pub fn eval(&self, point: &[f64]) -> Result<f64, RatFunError> {
        let den = self.den.eval_f64(point)?;
        if den == 0.0 {
            return Err(RatFunError::DenominatorVanishes);
        }
        Ok(self.p0_f64() + self.num.eval_f64(point)? / den)
    }

    /// Exact evaluation at a rational point.
    pub fn eval_exact(&self, point: &[BigRational]) -> Result<BigRational, RatFunError> {
        let den = self.den.eval(point)?;
        if den.is_zero() {
            return Err(RatFunError::DenominatorVanishes);
        }
        Ok(&self.p0 + self.num.eval(point)? / den)
    }
}

#[derive(Serialize, Deserialize)]
struct TransformRepr {
    p0: String,
    num: Polynomial,
    den: Polynomial,
    coprime_declared: bool,
}

impl From<RationalTransform> for TransformRepr {
    fn from(t: RationalTransform) -> Self {
        TransformRepr {
            p0: super::format_rational(&t.p0),
            num: t.num,
            den: t.den,
            coprime_declared: t.coprime_declared,
        }
    }
}

impl TryFrom<TransformRepr> for RationalTransform {
    type Error = String;

    fn try_from(repr: TransformRepr) -> Result<Self, String> {
        let p0 = super::parse_rational(&repr.p0).map_err(|e| e.to_string())?;
        RationalTransform::new(p0, repr.num, repr.den, repr.coprime_declared)
            .map_err(|e| e.to_string())
    }
}
