//! Numeric weights for distributions and kernels.
//!
//! Two modes are supported: exact rationals ([`Rational`]) for law checking and
//! `f64` for optimization. Everything in the Markov layer is generic over
//! [`Weight`].

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::Value;

pub type Rational = BigRational;

/// Accept a float total within this distance of one without touching it.
pub const FLOAT_NORM_TOL: f64 = 1e-12;
/// Renormalize float totals within this distance of one; reject beyond it.
pub const FLOAT_RENORM_TOL: f64 = 1e-9;

/// What to do with a weight vector given its total.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Accept,
    Renormalize,
    Reject,
}

pub trait Weight:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    /// Whether arithmetic in this mode is exact.
    const EXACT: bool;

    fn to_f64(&self) -> f64;

    /// `num / den`; used by generators that quantize weights.
    fn from_ratio(num: u64, den: u64) -> Self;

    fn is_negative(&self) -> bool {
        *self < Self::zero()
    }

    fn check_total(total: &Self) -> Normalization;

    /// Entrywise comparison: exact in rational mode, within `tol` for floats.
    fn close(&self, other: &Self, tol: f64) -> bool;

    /// `ln(self / other)` computed as accurately as the mode allows.
    fn ln_ratio(&self, other: &Self) -> f64;

    fn to_json(&self) -> Value;

    fn from_json(value: &Value) -> std::result::Result<Self, String>;
}

impl Weight for f64 {
    const EXACT: bool = false;

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn is_negative(&self) -> bool {
        *self < 0.0 || self.is_nan()
    }

    fn check_total(total: &Self) -> Normalization {
        let gap = (total - 1.0).abs();
        if gap <= FLOAT_NORM_TOL {
            Normalization::Accept
        } else if gap <= FLOAT_RENORM_TOL {
            Normalization::Renormalize
        } else {
            Normalization::Reject
        }
    }

    fn close(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }

    fn ln_ratio(&self, other: &Self) -> f64 {
        self.ln() - other.ln()
    }

    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }

    fn from_json(value: &Value) -> std::result::Result<Self, String> {
        match value {
            Value::Number(n) => n.as_f64().ok_or_else(|| format!("bad number {n}")),
            Value::String(s) => parse_rational(s)
                .map(|r| Weight::to_f64(&r))
                .or_else(|_| s.trim().parse::<f64>().map_err(|e| e.to_string())),
            other => Err(format!("expected a number, found {other}")),
        }
    }
}

impl Weight for Rational {
    const EXACT: bool = true;

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }

    fn check_total(total: &Self) -> Normalization {
        if total.is_one() {
            Normalization::Accept
        } else {
            Normalization::Reject
        }
    }

    fn close(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn ln_ratio(&self, other: &Self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        if other.is_zero() {
            return f64::INFINITY;
        }
        Weight::to_f64(&(self / other)).ln()
    }

    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }

    fn from_json(value: &Value) -> std::result::Result<Self, String> {
        match value {
            Value::String(s) => parse_rational(s),
            Value::Number(n) => {
                if let Some(i) = n.as_u64() {
                    Ok(BigRational::from_integer(BigInt::from(i)))
                } else {
                    Err(format!(
                        "rational weights must be \"p/q\" strings, found {n}"
                    ))
                }
            }
            other => Err(format!("expected a \"p/q\" string, found {other}")),
        }
    }
}

/// Formats as `p/q`, or `p` for integers.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> std::result::Result<Rational, String> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| format!("bad numerator in `{s}`"))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| format!("bad denominator in `{s}`"))?;
    if den.is_zero() {
        return Err(format!("zero denominator in `{s}`"));
    }
    Ok(BigRational::new(num, den))
}

/// Shorthand for building exact weights in code and tests.
pub fn ratio(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
