//! Exact univariate polynomials over Q and Sturm-sequence real-root
//! counting, used to test real-rootedness of restricted binary forms.

use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// Dense univariate polynomial; `coeffs[i]` multiplies `t^i`, no trailing
/// zeros are stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniPoly {
    coeffs: Vec<BigRational>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn zero() -> Self {
        UniPoly { coeffs: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&BigRational> {
        self.coeffs.last()
    }

    pub fn derivative(&self) -> UniPoly {
        UniPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(i.into()))
                .collect(),
        )
    }

    /// Euclidean remainder of `self` by `divisor`.
    pub fn rem(&self, divisor: &UniPoly) -> UniPoly {
        assert!(!divisor.is_zero(), "division by zero polynomial");
        let dd = divisor.degree().unwrap();
        let lead = divisor.leading().unwrap().clone();
        let mut rest = self.coeffs.clone();
        while rest.len() > dd {
            let shift = rest.len() - 1 - dd;
            let factor = rest.last().unwrap() / &lead;
            if !factor.is_zero() {
                for (i, c) in divisor.coeffs.iter().enumerate() {
                    let updated = &rest[shift + i] - &factor * c;
                    rest[shift + i] = updated;
                }
            }
            rest.pop();
            while rest.last().is_some_and(|c| c.is_zero()) {
                rest.pop();
            }
        }
        UniPoly { coeffs: rest }
    }

    /// Monic scaling; keeps remainder chains from blowing up.
    fn monic(mut self) -> UniPoly {
        if let Some(lead) = self.leading().cloned() {
            for c in &mut self.coeffs {
                *c /= &lead;
            }
        }
        self
    }

    /// Monic greatest common divisor by the Euclidean algorithm.
    pub fn gcd(&self, other: &UniPoly) -> UniPoly {
        let mut a = self.clone().monic();
        let mut b = other.clone();
        if b.is_zero() {
            return a;
        }
        b = b.monic();
        while !b.is_zero() {
            let r = a.rem(&b).monic();
            a = b;
            b = r;
        }
        a
    }

    /// Exact quotient; panics unless `divisor` divides `self` (used only for
    /// the squarefree part where divisibility holds by construction).
    fn exact_div(&self, divisor: &UniPoly) -> UniPoly {
        let dd = divisor.degree().expect("nonzero divisor");
        let lead = divisor.leading().unwrap().clone();
        let mut rest = self.coeffs.clone();
        let mut out = vec![BigRational::zero(); self.coeffs.len().saturating_sub(dd)];
        while rest.len() > dd {
            let shift = rest.len() - 1 - dd;
            let factor = rest.last().unwrap() / &lead;
            out[shift] = factor.clone();
            for (i, c) in divisor.coeffs.iter().enumerate() {
                let updated = &rest[shift + i] - &factor * c;
                rest[shift + i] = updated;
            }
            rest.pop();
            while rest.last().is_some_and(|c| c.is_zero()) {
                rest.pop();
            }
        }
        assert!(rest.is_empty(), "exact_div called with a non-divisor");
        UniPoly::new(out)
    }

    /// Squarefree part `self / gcd(self, self')`.
    pub fn squarefree_part(&self) -> UniPoly {
        if self.degree().unwrap_or(0) == 0 {
            return self.clone();
        }
        let g = self.gcd(&self.derivative());
        if g.degree() == Some(0) {
            self.clone()
        } else {
            self.exact_div(&g)
        }
    }

    /// Number of distinct real roots, by Sturm's theorem over the whole line.
    pub fn count_distinct_real_roots(&self) -> usize {
        let sf = self.squarefree_part();
        let Some(deg) = sf.degree() else {
            return 0;
        };
        if deg == 0 {
            return 0;
        }
        // Sturm chain on the squarefree part.
        let mut chain = vec![sf.clone(), sf.derivative()];
        while !chain.last().unwrap().is_zero() {
            let k = chain.len();
            let r = chain[k - 2].rem(&chain[k - 1]);
            chain.push(UniPoly::new(r.coeffs.into_iter().map(|c| -c).collect()));
        }
        chain.pop();
        let sign_at = |p: &UniPoly, at_minus_inf: bool| -> i32 {
            match p.leading() {
                None => 0,
                Some(lead) => {
                    let s = if lead.is_negative() { -1 } else { 1 };
                    if at_minus_inf && p.degree().unwrap() % 2 == 1 {
                        -s
                    } else {
                        s
                    }
                }
            }
        };
        let variations = |at_minus_inf: bool| -> usize {
            let mut count = 0;
            let mut prev = 0i32;
            for p in &chain {
                let s = sign_at(p, at_minus_inf);
                if s == 0 {
                    continue;
                }
                if prev != 0 && s != prev {
                    count += 1;
                }
                prev = s;
            }
            count
        };
        variations(true) - variations(false)
    }

    /// A polynomial splits over R exactly when its squarefree part has as
    /// many distinct real roots as its degree. Returns
    /// `(real_rooted, distinct_real_roots, squarefree_degree)`.
    pub fn real_rootedness(&self) -> (bool, usize, usize) {
        let sf = self.squarefree_part();
        let deg = sf.degree().unwrap_or(0);
        let count = self.count_distinct_real_roots();
        (count == deg, count, deg)
    }
}
