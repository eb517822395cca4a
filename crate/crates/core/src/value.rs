//! Numeric values used by the engines.
//!
//! Exact results are big rationals. The same dynamic programs also run over
//! `f64` when the success probability was given as a decimal, so the engines
//! are generic over [`Scalar`].

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always in lowest terms with a positive denominator.
pub type ExactValue = BigRational;

/// Arithmetic the dynamic programs need.
pub trait Scalar:
    Clone
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    fn from_u64(v: u64) -> Self;
    fn to_f64(&self) -> f64;
}

impl Scalar for BigRational {
    fn from_u64(v: u64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn from_u64(v: u64) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

pub fn exact(num: i64, den: i64) -> ExactValue {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn exact_int(v: i64) -> ExactValue {
    BigRational::from_integer(BigInt::from(v))
}

/// One half, the success probability of the linear-optics fusion gate.
pub fn half() -> ExactValue {
    exact(1, 2)
}

/// Parses `"13/8"`, `"-3/2"` or `"4"`.
pub fn parse_exact(s: &str) -> Result<ExactValue> {
    let s = s.trim();
    let bad = || Error::InvalidRational(s.to_string());
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => BigInt::from_str(s).map(BigRational::from_integer).map_err(|_| bad()),
    }
}

/// `num/den` with the denominator always written, as used in persisted tables.
pub fn format_fraction(v: &ExactValue) -> String {
    format!("{}/{}", v.numer(), v.denom())
}

/// Success probability of a single fusion attempt.
///
/// A rational input selects the exact engines; a decimal input selects the
/// floating-point path.
#[derive(Debug, Clone, PartialEq)]
pub enum Probability {
    Exact(ExactValue),
    Float(f64),
}

impl Probability {
    pub fn half() -> Self {
        Probability::Exact(half())
    }

    pub fn exact(v: ExactValue) -> Result<Self> {
        if v.is_positive() && v <= BigRational::one() {
            Ok(Probability::Exact(v))
        } else {
            Err(Error::InvalidProbability(v.to_string()))
        }
    }

    pub fn float(v: f64) -> Result<Self> {
        if v > 0.0 && v <= 1.0 {
            Ok(Probability::Float(v))
        } else {
            Err(Error::InvalidProbability(v.to_string()))
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Probability::Exact(v) => Scalar::to_f64(v),
            Probability::Float(v) => *v,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Probability::Exact(_))
    }
}

impl FromStr for Probability {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.contains('/') || t.parse::<BigInt>().is_ok() {
            let v = parse_exact(t).map_err(|_| Error::InvalidProbability(t.to_string()))?;
            Probability::exact(v)
        } else {
            let v: f64 = t.parse().map_err(|_| Error::InvalidProbability(t.to_string()))?;
            Probability::float(v)
        }
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Probability::Exact(v) => write!(f, "{v}"),
            Probability::Float(v) => write!(f, "{v}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rationals() {
        assert_eq!(parse_exact("13/8").unwrap(), exact(13, 8));
        assert_eq!(parse_exact("26/16").unwrap(), exact(13, 8));
        assert_eq!(parse_exact("4").unwrap(), exact_int(4));
        assert!(parse_exact("1/0").is_err());
        assert!(parse_exact("x").is_err());
        assert_eq!(format_fraction(&exact_int(4)), "4/1");
        assert_eq!(exact(13, 8).to_string(), "13/8");
    }

    #[test]
    fn probability_selects_path() {
        assert_eq!("1/2".parse::<Probability>().unwrap(), Probability::half());
        assert!("1".parse::<Probability>().unwrap().is_exact());
        assert_eq!("0.3".parse::<Probability>().unwrap(), Probability::Float(0.3));
        assert!("0".parse::<Probability>().is_err());
        assert!("3/2".parse::<Probability>().is_err());
        assert!("-0.5".parse::<Probability>().is_err());
    }
}
