//! Numeric traits shared by the scoring, metric and similarity code.
//!
//! Counting metrics (accuracy, Macro-F1, hit rate) only need field
//! arithmetic, so they are generic over [`Scalar`] and can be evaluated
//! exactly with [`Exact`]. Anything that takes a logarithm or a square
//! root is generic over [`RealScalar`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{Float, Num, ToPrimitive};

/// Exact rational numbers used for counting metrics and sampling ratios.
pub type Exact = Ratio<i64>;

/// Field-like number type with a lossless embedding of small counts.
pub trait Scalar: Num + Copy + PartialOrd + Debug + Display + Send + Sync + 'static {
    /// make a count into a value of this type
    fn from_count(n: usize) -> Self;

    /// lossy view used for reporting
    fn to_f64_lossy(self) -> f64;
}

/// Real floating point scalar: f32 or f64.
pub trait RealScalar: Scalar + Float + Sum {
    fn from_f64(value: f64) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn from_count(n: usize) -> Self {
        n as f64
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    #[inline]
    fn from_count(n: usize) -> Self {
        n as f32
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Scalar for Exact {
    #[inline]
    fn from_count(n: usize) -> Self {
        Ratio::from_integer(i64::try_from(n).expect("count fits in i64"))
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl RealScalar for f64 {
    #[inline]
    fn from_f64(value: f64) -> Self {
        value
    }
}

impl RealScalar for f32 {
    #[inline]
    fn from_f64(value: f64) -> Self {
        value as _
    }
}

/// Parse a decimal literal such as `0.6` or `1` into an exact ratio.
///
/// Only plain decimal notation is accepted; exponents are rejected so
/// that configuration values keep their written meaning.
pub fn parse_decimal(text: &str) -> Option<Ratio<u64>> {
    let text = text.trim();
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int_part) || !all_digits(frac_part) || frac_part.len() > 18 {
        return None;
    }
    let denom = 10u64.checked_pow(frac_part.len() as u32)?;
    let int_val: u64 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
    let frac_val: u64 = if frac_part.is_empty() { 0 } else { frac_part.parse().ok()? };
    let numer = int_val.checked_mul(denom)?.checked_add(frac_val)?;
    Some(Ratio::new(numer, denom))
}

/// Exact ratio for a finite non-negative float, via its shortest decimal
/// representation (`0.3` becomes `3/10`, not the nearest binary fraction).
pub fn ratio_from_f64(value: f64) -> Option<Ratio<u64>> {
    if !value.is_finite() || value < 0.0 {
        return None;
    }
    parse_decimal(&format!("{value}"))
}
