//! Scalar fields the algebraic routines run over.
//!
//! Everything in [`crate::algebra`], [`crate::arnold`] and [`crate::hypo`] is generic over
//! [`Scalar`], which is implemented for `f64` (float mode) and [`Rational`] (exact mode).
//! Rank decisions are delegated to the scalar type: floats use a relative singular-value
//! cutoff, rationals use exact Gaussian elimination.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::linalg::{self, SpanReduction};

pub type Rational = num_rational::BigRational;

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// `true` for exact arithmetic.
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_i64(v: i64) -> Self {
        Self::from_ratio(v, 1)
    }

    fn to_f64(&self) -> f64;

    /// Absolute value as a float, used for pivoting only.
    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }

    fn to_json(&self) -> serde_json::Value;

    /// The exact value, `None` for non-finite floats.
    fn to_rational(&self) -> Option<Rational>;

    /// Reduce a list of vectors to a basis of their span.
    fn reduce_span(rows: &[Vec<Self>]) -> SpanReduction<Self>;

    /// Whether `v` lies in the span of a basis produced by [`Scalar::reduce_span`].
    fn in_span(basis: &[Vec<Self>], v: &[Self]) -> bool;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::json!(*self)
    }

    fn to_rational(&self) -> Option<Rational> {
        rational_from_f64(*self)
    }

    fn reduce_span(rows: &[Vec<Self>]) -> SpanReduction<Self> {
        linalg::float_span(rows)
    }

    fn in_span(basis: &[Vec<Self>], v: &[Self]) -> bool {
        linalg::float_in_span(basis, v)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn magnitude(&self) -> f64 {
        rational_to_f64(&self.abs())
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(format_rational(self))
    }

    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }

    fn reduce_span(rows: &[Vec<Self>]) -> SpanReduction<Self> {
        linalg::exact_span(rows)
    }

    fn in_span(basis: &[Vec<Self>], v: &[Self]) -> bool {
        linalg::exact_in_span(basis, v)
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Very large numerators/denominators: scale both down together.
    let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
    let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Exact rational with the same value as the binary float `x`.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parse `"3"`, `"-7/4"`, `"1.25"` or `"2.5e-3"` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((n, d)) = text.split_once('/') {
        let n = parse_decimal(n)?;
        let d = parse_decimal(d)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    parse_decimal(text)
}

fn parse_decimal(text: &str) -> Option<Rational> {
    let text = text.trim();
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rational::from_integer(numer);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if negative { -value } else { value })
}
