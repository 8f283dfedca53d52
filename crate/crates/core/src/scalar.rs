//! Numeric carriers.
//!
//! Every computation in the crate is generic over [`Scalar`], implemented for
//! exact rationals ([`Q`]) and for `f64`. Exponentials `e^{-rate * t}` are
//! produced by [`Rate`], which keeps an exact base `b = e^{-rate}` whenever
//! one is known, so that integer powers stay rational.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::Value;

use crate::error::{Error, Result};

/// Exact rational number.
pub type Q = BigRational;

/// Builds a rational from a numerator and denominator.
pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// Builds an integer rational.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses `"3/2"`, `"-4"`, or a finite decimal such as `"0.25"` / `"1e-6"`
/// into an exact rational.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Input("empty number".into()));
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| Error::Input(format!("bad numerator in `{s}`")))?;
        let d = BigInt::from_str(d.trim()).map_err(|_| Error::Input(format!("bad denominator in `{s}`")))?;
        if d.is_zero() {
            return Err(Error::Input(format!("zero denominator in `{s}`")));
        }
        return Ok(Q::new(n, d));
    }
    if let Ok(n) = BigInt::from_str(s) {
        return Ok(Q::from_integer(n));
    }
    parse_decimal(s).ok_or_else(|| Error::Input(format!("not a number: `{s}`")))
}

fn parse_decimal(s: &str) -> Option<Q> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let mut value = Q::from_integer(BigInt::from_str(&digits).ok()?);
    let shift = exp - frac_part.len() as i32;
    let ten = Q::from_integer(BigInt::from(10));
    value *= pow_q(&ten, shift as i64);
    Some(if neg { -value } else { value })
}

/// `base^exp` for an integer exponent.
pub fn pow_q(base: &Q, exp: i64) -> Q {
    let e = exp.unsigned_abs() as u32;
    let num = num_traits::pow::Pow::pow(base.numer(), e);
    let den = num_traits::pow::Pow::pow(base.denom(), e);
    let p = Q::new(num, den);
    if exp < 0 {
        p.recip()
    } else {
        p
    }
}

/// Formats a rational as `"n"` or `"n/d"`.
pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn q_to_f64(x: &Q) -> f64 {
    ToPrimitive::to_f64(x).unwrap_or_else(|| {
        // Very large numerators/denominators: fall back to a scaled division.
        let n = x.numer().bits() as i64;
        let d = x.denom().bits() as i64;
        let shift = (n - d).clamp(-1000, 1000);
        let scaled = if shift > 0 {
            x / Q::from_integer(BigInt::one() << shift as usize)
        } else {
            x * Q::from_integer(BigInt::one() << (-shift) as usize)
        };
        let ratio = scaled.numer().to_f64().unwrap_or(f64::NAN) / scaled.denom().to_f64().unwrap_or(f64::NAN);
        ratio * 2f64.powi(shift as i32)
    })
}

/// Ordered field used for masses, function values and distances.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialOrd
    + PartialEq
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    /// True when arithmetic is exact.
    const EXACT: bool;

    fn from_q(x: &Q) -> Self;

    /// Exact conversion of the binary value for rationals.
    fn from_f64(x: f64) -> Self;

    fn as_f64(&self) -> f64;

    /// Rational value if this scalar is exact.
    fn to_q(&self) -> Option<Q>;

    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// `self <= other`, tolerating float rounding on ties.
    fn le_tol(&self, other: &Self) -> bool {
        self <= other
    }

    fn to_json(&self) -> Value;

    fn from_json(v: &Value) -> Result<Self>;

    fn from_i64(n: i64) -> Self {
        Self::from_q(&qi(n))
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_q(x: &Q) -> Self {
        q_to_f64(x)
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn as_f64(&self) -> f64 {
        *self
    }

    fn to_q(&self) -> Option<Q> {
        None
    }

    fn abs_val(&self) -> Self {
        f64::abs(*self)
    }

    fn le_tol(&self, other: &Self) -> bool {
        *self <= *other + 1e-12 * f64::abs(*other).max(f64::MIN_POSITIVE)
    }

    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or_else(|| Value::String(self.to_string()))
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Number(n) => n.as_f64().ok_or_else(|| Error::Serde(format!("bad number {n}"))),
            Value::String(s) => parse_q(s).map(|x| q_to_f64(&x)),
            other => Err(Error::Serde(format!("expected number, found {other}"))),
        }
    }
}

impl Scalar for Q {
    const EXACT: bool = true;

    fn from_q(x: &Q) -> Self {
        x.clone()
    }

    fn from_f64(x: f64) -> Self {
        Q::from_float(x).unwrap_or_else(Q::zero)
    }

    fn as_f64(&self) -> f64 {
        q_to_f64(self)
    }

    fn to_q(&self) -> Option<Q> {
        Some(self.clone())
    }

    fn abs_val(&self) -> Self {
        Signed::abs(self)
    }

    fn to_json(&self) -> Value {
        Value::String(fmt_q(self))
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => parse_q(s),
            Value::Number(n) => parse_q(&n.to_string()),
            other => Err(Error::Serde(format!("expected fraction string, found {other}"))),
        }
    }
}

pub fn smax<S: Scalar>(a: S, b: S) -> S {
    if b > a {
        b
    } else {
        a
    }
}

pub fn smin<S: Scalar>(a: S, b: S) -> S {
    if b < a {
        b
    } else {
        a
    }
}

/// A positive exponential rate `r`, evaluated as `e^{-r t}`.
///
/// `base` is `e^{-r}` when it is rational (for instance `r = log 3` gives
/// `base = 1/3`). With a base, integer powers are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct Rate {
    value: f64,
    base: Option<Q>,
}

impl Rate {
    /// `log(n)` for a rational `n > 1`.
    pub fn log_of(n: Q) -> Result<Rate> {
        if n <= Q::one() {
            return Err(Error::Input(format!("log({}) is not a positive rate", fmt_q(&n))));
        }
        Ok(Rate { value: q_to_f64(&n).ln(), base: Some(n.recip()) })
    }

    /// A rate known only as a float.
    pub fn real(value: f64) -> Result<Rate> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Input(format!("rate must be positive and finite, got {value}")));
        }
        Ok(Rate { value, base: None })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// `e^{-rate}` when rational.
    pub fn base(&self) -> Option<&Q> {
        self.base.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        self.base.is_some()
    }

    /// `m * rate`; the base survives only for integer multipliers.
    pub fn times(&self, m: &Q) -> Result<Rate> {
        if *m <= Q::zero() {
            return Err(Error::Input("rate multiplier must be positive".into()));
        }
        let base = match &self.base {
            Some(b) if m.is_integer() => m.to_integer().to_i64().map(|k| pow_q(b, k)),
            _ => None,
        };
        Ok(Rate { value: self.value * q_to_f64(m), base })
    }

    /// Sum of two rates.
    pub fn plus(&self, other: &Rate) -> Rate {
        let base = match (&self.base, &other.base) {
            (Some(a), Some(b)) => Some(a * b),
            _ => None,
        };
        Rate { value: self.value + other.value, base }
    }

    /// `e^{-rate * t}`.
    pub fn exp_neg<S: Scalar>(&self, t: &Q) -> Result<S> {
        if S::EXACT {
            let base = self.base.as_ref().ok_or_else(|| {
                Error::Inexact(format!("rate {} has no rational base", self.value))
            })?;
            if !t.is_integer() {
                return Err(Error::Inexact(format!("non-integer exponent {}", fmt_q(t))));
            }
            let k = t
                .to_integer()
                .to_i64()
                .ok_or_else(|| Error::Inexact("exponent out of range".into()))?;
            Ok(S::from_q(&pow_q(base, k)))
        } else {
            Ok(S::from_f64((-self.value * q_to_f64(t)).exp()))
        }
    }

    /// Parses `"log 3"`, `"ln(3)"`, `"log(5/2)"` or a decimal rate.
    pub fn parse(s: &str) -> Result<Rate> {
        let t = s.trim();
        for prefix in ["log", "ln"] {
            if let Some(rest) = t.strip_prefix(prefix) {
                let inner = rest.trim().trim_start_matches('(').trim_end_matches(')');
                return Rate::log_of(parse_q(inner)?);
            }
        }
        let v: f64 = t.parse().map_err(|_| Error::Input(format!("bad rate `{s}`")))?;
        Rate::real(v)
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.base {
            Some(b) => write!(f, "log({})", fmt_q(&b.recip())),
            None => write!(f, "{}", self.value),
        }
    }
}

/// Rounds a rational to the nearest integer, returning it when exact.
pub fn as_integer(x: &Q) -> Option<i64> {
    if x.is_integer() {
        x.to_integer().to_i64()
    } else {
        None
    }
}

/// `floor(x)` for rationals.
pub fn floor_q(x: &Q) -> BigInt {
    x.numer().div_floor(x.denom())
}
