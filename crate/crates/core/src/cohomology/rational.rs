use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num::bigint::BigInt;
use num::{BigRational, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CohomologyError;

/// Exact rational scalar used for every cohomological quantity.
pub type Rational = BigRational;

pub fn q(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Parses `"p/q"`, `"p"` or a plain decimal such as `"0.25"`.
pub fn parse_rational(text: &str) -> Result<Rational, CohomologyError> {
    let s = text.trim();
    let bad = || CohomologyError::Parse(format!("not a rational number: {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(CohomologyError::Parse(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        if frac_part.is_empty() || !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int_part.starts_with('-');
        let digits = format!("{}{}", int_part.trim_start_matches(['-', '+']), frac_part);
        let mut n = BigInt::from_str(&digits).map_err(|_| bad())?;
        if negative {
            n = -n;
        }
        let d = num::pow(BigInt::from(10), frac_part.len());
        return Ok(Rational::new(n, d));
    }
    BigInt::from_str(s).map(Rational::from_integer).map_err(|_| bad())
}

pub fn format_rational(value: &Rational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Exact square root when `value` is the square of a rational.
pub fn rational_sqrt(value: &Rational) -> Option<Rational> {
    if value.is_negative() {
        return None;
    }
    let n = value.numer().sqrt();
    let d = value.denom().sqrt();
    let candidate = Rational::new(n, d);
    (&candidate * &candidate == *value).then_some(candidate)
}

pub(crate) mod serde_q {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        format_rational(value).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod serde_qvec {
    use super::*;

    pub fn serialize<S: Serializer>(values: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        values.iter().map(format_rational).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| parse_rational(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Rational coordinates of a (1,1)-class in a model's basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClassVector(Vec<Rational>);

impl ClassVector {
    pub fn new(coords: Vec<Rational>) -> Self {
        Self(coords)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![Rational::zero(); len])
    }

    pub fn from_ints(values: &[i64]) -> Self {
        Self(values.iter().map(|&v| qi(v)).collect())
    }

    pub fn coords(&self) -> &[Rational] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn scaled(&self, factor: &Rational) -> Self {
        Self(self.0.iter().map(|c| c * factor).collect())
    }

    /// `self + factor * other`, componentwise.
    pub fn add_scaled(&self, factor: &Rational, other: &Self) -> Result<Self, CohomologyError> {
        self.check_len(other.len())?;
        Ok(Self(
            self.0.iter().zip(&other.0).map(|(a, b)| a + factor * b).collect(),
        ))
    }

    pub fn check_len(&self, expected: usize) -> Result<(), CohomologyError> {
        if self.len() != expected {
            return Err(CohomologyError::DimensionMismatch {
                expected,
                got: self.len(),
            });
        }
        Ok(())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(to_f64).collect()
    }
}

impl Add for &ClassVector {
    type Output = ClassVector;

    /// Panics on length mismatch; use [`ClassVector::add_scaled`] for a checked sum.
    fn add(self, rhs: Self) -> ClassVector {
        self.add_scaled(&Rational::one(), rhs).expect("class length mismatch")
    }
}

impl Sub for &ClassVector {
    type Output = ClassVector;

    fn sub(self, rhs: Self) -> ClassVector {
        self.add_scaled(&-Rational::one(), rhs).expect("class length mismatch")
    }
}

impl Neg for &ClassVector {
    type Output = ClassVector;

    fn neg(self) -> ClassVector {
        ClassVector(self.0.iter().map(|c| -c).collect())
    }
}

impl FromStr for ClassVector {
    type Err = CohomologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        if inner.trim().is_empty() {
            return Err(CohomologyError::Parse("empty class".into()));
        }
        inner.split(',').map(parse_rational).collect::<Result<Vec<_>, _>>().map(Self)
    }
}

impl fmt::Display for ClassVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(format_rational).collect();
        write!(f, "({})", parts.join(", "))
    }
}

impl Serialize for ClassVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serde_qvec::serialize(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for ClassVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        serde_qvec::deserialize(d).map(Self)
    }
}
