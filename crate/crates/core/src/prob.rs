//! Exact nonnegative rational arithmetic.
//!
//! Every probability-like quantity in this crate is a [`Prob`]: an
//! arbitrary-precision nonnegative rational kept in lowest terms. There is no
//! floating point anywhere on a computation path; decimal input such as
//! `"0.25"` is converted digit-by-digit to an exact rational.

use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Div, Mul, MulAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProbError {
    #[error("denominator must be nonzero")]
    ZeroDenominator,
    #[error("value {0} is negative")]
    Negative(String),
    #[error("malformed rational literal `{0}`")]
    Malformed(String),
}

/// An exact nonnegative rational, stored in lowest terms with a positive
/// denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prob(BigRational);

impl Prob {
    pub fn zero() -> Self {
        Prob(BigRational::zero())
    }

    pub fn one() -> Self {
        Prob(BigRational::one())
    }

    /// Builds `num/den`. Panics if `den` is zero; intended for literals.
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den != 0, "denominator must be nonzero");
        Prob(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_int(n: u64) -> Self {
        Prob(BigRational::from_integer(BigInt::from(n)))
    }

    /// Checked constructor from big integers.
    pub fn from_big(num: BigInt, den: BigInt) -> Result<Self, ProbError> {
        if den.is_zero() {
            return Err(ProbError::ZeroDenominator);
        }
        let r = BigRational::new(num, den);
        if r.is_negative() {
            return Err(ProbError::Negative(r.to_string()));
        }
        Ok(Prob(r))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    /// True when the value lies in `[0, 1]` and can serve as a probability.
    pub fn is_probability(&self) -> bool {
        self.0 <= BigRational::one()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "cannot invert zero");
        Prob(self.0.recip())
    }

    /// `1 - self`, or `None` when `self > 1`.
    pub fn one_minus(&self) -> Option<Self> {
        if self.is_probability() {
            Some(Prob(BigRational::one() - &self.0))
        } else {
            None
        }
    }

    pub fn pow(&self, exp: u32) -> Self {
        // A reduced fraction stays reduced under componentwise powers.
        Prob(BigRational::new_raw(
            self.0.numer().pow(exp),
            self.0.denom().pow(exp),
        ))
    }

    pub(crate) fn as_ratio(&self) -> &BigRational {
        &self.0
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl FromStr for Prob {
    type Err = ProbError;

    /// Accepts `"a/b"`, a nonnegative integer, or a decimal such as `"0.25"`.
    fn from_str(s: &str) -> Result<Self, ProbError> {
        let s = s.trim();
        let bad = || ProbError::Malformed(s.to_string());
        if let Some((num, den)) = s.split_once('/') {
            let n: BigInt = num.trim().parse().map_err(|_| bad())?;
            let d: BigInt = den.trim().parse().map_err(|_| bad())?;
            return Prob::from_big(n, d);
        }
        if let Some((int_part, frac_part)) = s.split_once('.') {
            if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let int_part = if int_part.is_empty() { "0" } else { int_part };
            let i: BigInt = int_part.parse().map_err(|_| bad())?;
            let f: BigInt = frac_part.parse().map_err(|_| bad())?;
            let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
            return Prob::from_big(i * &scale + f, scale);
        }
        let n: BigInt = s.parse().map_err(|_| bad())?;
        Prob::from_big(n, BigInt::one())
    }
}

impl Add for Prob {
    type Output = Prob;
    fn add(self, rhs: Prob) -> Prob {
        Prob(self.0 + rhs.0)
    }
}

impl<'a> Add<&'a Prob> for Prob {
    type Output = Prob;
    fn add(self, rhs: &'a Prob) -> Prob {
        Prob(self.0 + &rhs.0)
    }
}

impl AddAssign<&Prob> for Prob {
    fn add_assign(&mut self, rhs: &Prob) {
        self.0 += &rhs.0;
    }
}

impl Mul for Prob {
    type Output = Prob;
    fn mul(self, rhs: Prob) -> Prob {
        Prob(self.0 * rhs.0)
    }
}

impl<'a> Mul<&'a Prob> for Prob {
    type Output = Prob;
    fn mul(self, rhs: &'a Prob) -> Prob {
        Prob(self.0 * &rhs.0)
    }
}

impl Mul<&Prob> for &Prob {
    type Output = Prob;
    fn mul(self, rhs: &Prob) -> Prob {
        Prob(&self.0 * &rhs.0)
    }
}

impl MulAssign<&Prob> for Prob {
    fn mul_assign(&mut self, rhs: &Prob) {
        self.0 *= &rhs.0;
    }
}

impl Div for Prob {
    type Output = Prob;
    fn div(self, rhs: Prob) -> Prob {
        assert!(!rhs.is_zero(), "division by zero");
        Prob(self.0 / rhs.0)
    }
}

impl<'a> Div<&'a Prob> for Prob {
    type Output = Prob;
    fn div(self, rhs: &'a Prob) -> Prob {
        assert!(!rhs.is_zero(), "division by zero");
        Prob(self.0 / &rhs.0)
    }
}

impl Sum for Prob {
    fn sum<I: Iterator<Item = Prob>>(iter: I) -> Prob {
        iter.fold(Prob::zero(), |a, b| a + b)
    }
}

impl Product for Prob {
    fn product<I: Iterator<Item = Prob>>(iter: I) -> Prob {
        iter.fold(Prob::one(), |a, b| a * b)
    }
}
