//! Exact rational numbers.
//!
//! [`Value`] keeps small numbers as `Ratio<i64>` and promotes to a
//! `BigRational` only when a checked operation overflows, so desk-scale games
//! run at machine speed while staying exact at any magnitude. A big value that
//! fits back into `i64` is always demoted, which makes the representation
//! canonical and lets equality and hashing stay structural.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

type Small = Ratio<i64>;

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    Small(Small),
    Big(BigRational),
}

/// An exact rational number.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Value(Repr);

fn to_big(r: &Small) -> BigRational {
    BigRational::new_raw(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

impl Value {
    pub fn zero() -> Self {
        Value(Repr::Small(Small::zero()))
    }

    pub fn one() -> Self {
        Value(Repr::Small(Small::one()))
    }

    pub fn from_int(n: i64) -> Self {
        Value(Repr::Small(Small::from_integer(n)))
    }

    /// `numer / denom`, reduced. Panics on a zero denominator.
    pub fn ratio(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Value(Repr::Small(Small::new(numer, denom)))
    }

    pub fn from_big(r: BigRational) -> Self {
        Self::demote(r)
    }

    fn demote(r: BigRational) -> Self {
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) => Value(Repr::Small(Small::new_raw(n, d))),
            _ => Value(Repr::Big(r)),
        }
    }

    pub fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(s) => to_big(s),
            Repr::Big(b) => b.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.0 {
            Repr::Small(s) => s.is_zero(),
            Repr::Big(b) => b.is_zero(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(s) => s.is_negative(),
            Repr::Big(b) => b.is_negative(),
        }
    }

    pub fn is_positive(&self) -> bool {
        !self.is_zero() && !self.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(s) => s.is_integer(),
            Repr::Big(b) => b.is_integer(),
        }
    }

    pub fn abs(&self) -> Value {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    /// `max(self, 0)`.
    pub fn positive_part(&self) -> Value {
        if self.is_negative() {
            Value::zero()
        } else {
            self.clone()
        }
    }

    pub fn recip(&self) -> Value {
        assert!(!self.is_zero(), "reciprocal of zero");
        match &self.0 {
            Repr::Small(s) => Value(Repr::Small(s.recip())),
            Repr::Big(b) => Self::demote(b.recip()),
        }
    }

    pub fn floor(&self) -> Value {
        match &self.0 {
            Repr::Small(s) => Value(Repr::Small(s.floor())),
            Repr::Big(b) => Self::demote(b.floor()),
        }
    }

    pub fn ceil(&self) -> Value {
        match &self.0 {
            Repr::Small(s) => Value(Repr::Small(s.ceil())),
            Repr::Big(b) => Self::demote(b.ceil()),
        }
    }

    /// Integer part as `u64`, when it fits.
    pub fn to_u64(&self) -> Option<u64> {
        match &self.0 {
            Repr::Small(s) => s.to_integer().to_u64(),
            Repr::Big(b) => b.to_integer().to_u64(),
        }
    }

    /// Lossy conversion for display and CSV summaries only.
    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(s) => *s.numer() as f64 / *s.denom() as f64,
            Repr::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn pow(&self, exp: u32) -> Value {
        let mut acc = Value::one();
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }

    /// Harmonic number `H_n = 1 + 1/2 + ... + 1/n`.
    pub fn harmonic(n: usize) -> Value {
        (1..=n as i64).map(|k| Value::ratio(1, k)).sum()
    }

    pub fn min(self, other: Value) -> Value {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Value) -> Value {
        if other > self {
            other
        } else {
            self
        }
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl<'a> $trait<&'a Value> for &'a Value {
            type Output = Value;
            fn $method(self, rhs: &'a Value) -> Value {
                match (&self.0, &rhs.0) {
                    (Repr::Small(a), Repr::Small(b)) => match a.$checked(b) {
                        Some(r) => Value(Repr::Small(r)),
                        None => Value::demote(to_big(a).$method(to_big(b))),
                    },
                    _ => Value::demote(self.to_big().$method(rhs.to_big())),
                }
            }
        }
        impl $trait<Value> for Value {
            type Output = Value;
            fn $method(self, rhs: Value) -> Value {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $trait<&'a Value> for Value {
            type Output = Value;
            fn $method(self, rhs: &'a Value) -> Value {
                (&self).$method(rhs)
            }
        }
        impl<'a> $trait<Value> for &'a Value {
            type Output = Value;
            fn $method(self, rhs: Value) -> Value {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);
binop!(Div, div, checked_div);

impl AddAssign<&Value> for Value {
    fn add_assign(&mut self, rhs: &Value) {
        *self = &*self + rhs;
    }
}

impl AddAssign<Value> for Value {
    fn add_assign(&mut self, rhs: Value) {
        *self = &*self + &rhs;
    }
}

impl SubAssign<&Value> for Value {
    fn sub_assign(&mut self, rhs: &Value) {
        *self = &*self - rhs;
    }
}

impl Neg for &Value {
    type Output = Value;
    fn neg(self) -> Value {
        match &self.0 {
            Repr::Small(s) if *s.numer() != i64::MIN => Value(Repr::Small(-s)),
            _ => Value::demote(-self.to_big()),
        }
    }
}

impl Neg for Value {
    type Output = Value;
    fn neg(self) -> Value {
        -&self
    }
}

impl Sum for Value {
    fn sum<I: Iterator<Item = Value>>(iter: I) -> Value {
        iter.fold(Value::zero(), |acc, x| &acc + &x)
    }
}

impl<'a> Sum<&'a Value> for Value {
    fn sum<I: Iterator<Item = &'a Value>>(iter: I) -> Value {
        iter.fold(Value::zero(), |acc, x| &acc + x)
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => a.cmp(b),
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Default for Value {
    fn default() -> Self {
        Value::zero()
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::from_int(n)
    }
}

impl From<BigRational> for Value {
    fn from(r: BigRational) -> Self {
        Value::demote(r)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(s) => write!(f, "{}", s),
            Repr::Big(b) => write!(f, "{}", b),
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseValueError(pub String);

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{}{}", int_part, frac_part);
    let mut numer: BigInt = all_digits.parse().ok()?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let r = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(r)
}

impl FromStr for Value {
    type Err = ParseValueError;

    /// Accepts `"a/b"`, integers, and exact decimals such as `"0.998"` or `"1e-3"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let err = || ParseValueError(s.to_string());
        if let Some((n, d)) = t.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| err())?;
            let d: BigInt = d.trim().parse().map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            return Ok(Value::demote(BigRational::new(n, d)));
        }
        parse_decimal(t).map(Value::demote).ok_or_else(err)
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        // JSON numbers keep their literal text, so decimals parse exactly.
        match serde_json::Value::deserialize(deserializer)? {
            serde_json::Value::Number(n) => n.to_string().parse().map_err(D::Error::custom),
            serde_json::Value::String(s) => s.parse().map_err(D::Error::custom),
            other => Err(D::Error::custom(format!("expected a number or \"a/b\" string, got {other}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Value {
        s.parse().unwrap()
    }

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(v("3/6"), Value::ratio(1, 2));
        assert_eq!(v("0.998"), Value::ratio(499, 500));
        assert_eq!(v("1.27"), Value::ratio(127, 100));
        assert_eq!(v("-2"), Value::from_int(-2));
        assert_eq!(v("1e-3"), Value::ratio(1, 1000));
        assert_eq!(v("2.5E1"), Value::from_int(25));
        assert!("1/0".parse::<Value>().is_err());
        assert!("abc".parse::<Value>().is_err());
        assert!(".".parse::<Value>().is_err());
    }

    #[test]
    fn overflow_promotes_and_demotes() {
        let big = Value::from_int(i64::MAX);
        let sum = &big + &big;
        assert!(matches!(sum.0, Repr::Big(_)));
        let back = &sum - &big;
        assert!(matches!(back.0, Repr::Small(_)));
        assert_eq!(back, big);
        let tiny = Value::ratio(1, i64::MAX);
        let prod = &tiny * &tiny;
        assert!(prod.is_positive());
        assert!(prod < tiny);
        assert_eq!(&prod / &tiny, tiny);
    }

    #[test]
    fn harmonic_numbers() {
        assert_eq!(Value::harmonic(1), Value::one());
        assert_eq!(Value::harmonic(3), Value::ratio(11, 6));
        assert_eq!(Value::harmonic(4), Value::ratio(25, 12));
        assert_eq!(Value::harmonic(5), Value::ratio(137, 60));
    }

    #[test]
    fn json_numbers_are_exact() {
        let x: Value = serde_json::from_str("0.1").unwrap();
        assert_eq!(x, Value::ratio(1, 10));
        let y: Value = serde_json::from_str("\"7/3\"").unwrap();
        assert_eq!(y, Value::ratio(7, 3));
        assert_eq!(serde_json::to_string(&y).unwrap(), "\"7/3\"");
    }

    #[test]
    fn negation_of_min_small_is_exact() {
        let m = Value::from_int(i64::MIN);
        assert_eq!(-(-&m), m);
    }
}
