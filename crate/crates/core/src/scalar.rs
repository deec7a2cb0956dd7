//! Numeric domain shared by every module.
//!
//! A table commits to one of two modes: exact rationals (`BigRational`) or
//! binary64 floats. Algorithms are written once against [`Field`]; the
//! tolerance argument is ignored in exact mode, where every comparison is
//! literal.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::matrix::{
    bareiss_pivots, default_rank_threshold, partial_pivots, singular_values, Matrix, PivotList,
};

/// Default tolerance for float-mode equality checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericMode {
    Exact,
    Float,
}

impl NumericMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NumericMode::Exact => "exact",
            NumericMode::Float => "float",
        }
    }
}

impl fmt::Display for NumericMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NumericMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(NumericMode::Exact),
            "float" => Ok(NumericMode::Float),
            other => Err(Error::Syntax(format!(
                "unknown numeric mode '{other}' (expected exact|float)"
            ))),
        }
    }
}

/// An ordered field usable as a table entry.
pub trait Field:
    Clone + fmt::Debug + fmt::Display + PartialEq + PartialOrd + Num + Signed + Send + Sync + 'static
{
    const MODE: NumericMode;

    /// `|self| <= tol` in float mode, `self == 0` in exact mode.
    fn is_negligible(&self, tol: f64) -> bool;

    fn to_f64(&self) -> f64;

    /// Converts a finite float. Exact mode converts the binary value exactly.
    fn from_f64(x: f64) -> Option<Self>;

    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_usize(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }

    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self.clone() - other.clone()).is_negligible(tol)
    }

    /// `self >= 0` up to tolerance.
    fn is_nonnegative(&self, tol: f64) -> bool {
        !self.is_negative() || self.is_negligible(tol)
    }

    fn to_json(&self) -> Value;

    fn from_json(value: &Value) -> Result<Self>;

    /// Text form used by CSV files.
    fn to_text(&self) -> String;

    fn parse_text(text: &str) -> Result<Self>;

    /// Rank of a matrix: fraction-free elimination in exact mode, singular
    /// values above `threshold` (default `max(L,M)·ε·σ_max`) in float mode.
    fn matrix_rank(m: &Matrix<Self>, threshold: Option<f64>) -> usize;

    /// Up to `limit` pivots of a row-echelon reduction, scanning columns left
    /// to right. `threshold` only matters in float mode.
    fn select_pivots(m: &Matrix<Self>, limit: usize, threshold: f64) -> PivotList;
}

impl Field for f64 {
    const MODE: NumericMode = NumericMode::Float;

    fn is_negligible(&self, tol: f64) -> bool {
        self.abs() <= tol
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_f64(x: f64) -> Option<Self> {
        x.is_finite().then_some(x)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }

    fn from_json(value: &Value) -> Result<Self> {
        let x = match value {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => return Self::parse_text(s),
            _ => None,
        };
        match x {
            Some(x) if x.is_finite() => Ok(x),
            _ => Err(Error::Syntax(format!("expected a finite number, found {value}"))),
        }
    }

    fn to_text(&self) -> String {
        // Debug keeps a decimal point on integral values
        format!("{self:?}")
    }

    fn parse_text(text: &str) -> Result<Self> {
        let text = text.trim();
        let x = if text.contains('/') {
            let q = parse_rational(text)?;
            ToPrimitive::to_f64(&q)
                .ok_or_else(|| Error::Syntax(format!("'{text}' is not representable")))?
        } else {
            text.parse::<f64>()
                .map_err(|_| Error::Syntax(format!("'{text}' is not a number")))?
        };
        if x.is_finite() {
            Ok(x)
        } else {
            Err(Error::Syntax(format!("'{text}' is not finite")))
        }
    }

    fn matrix_rank(m: &Matrix<Self>, threshold: Option<f64>) -> usize {
        let sv = singular_values(m);
        let Some(&sigma_max) = sv.first() else { return 0 };
        let tau = threshold.unwrap_or_else(|| default_rank_threshold(m.rows(), m.cols(), sigma_max));
        sv.iter().filter(|&&s| s > tau).count()
    }

    fn select_pivots(m: &Matrix<Self>, limit: usize, threshold: f64) -> PivotList {
        partial_pivots(m, limit, threshold)
    }
}

impl Field for BigRational {
    const MODE: NumericMode = NumericMode::Exact;

    fn is_negligible(&self, _tol: f64) -> bool {
        self.is_zero()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_json(&self) -> Value {
        Value::String(self.to_text())
    }

    fn from_json(value: &Value) -> Result<Self> {
        match value {
            Value::String(s) => Self::parse_text(s),
            // shortest round-trip decimal text, read exactly
            Value::Number(n) => Self::parse_text(&n.to_string()),
            _ => Err(Error::Syntax(format!(
                "exact-mode entries must be \"num/den\" strings or numbers, found {value}"
            ))),
        }
    }

    fn to_text(&self) -> String {
        if self.denom().is_one() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn parse_text(text: &str) -> Result<Self> {
        parse_rational(text.trim())
    }

    fn matrix_rank(m: &Matrix<Self>, _threshold: Option<f64>) -> usize {
        bareiss_pivots(m, usize::MAX).len()
    }

    fn select_pivots(m: &Matrix<Self>, limit: usize, _threshold: f64) -> PivotList {
        bareiss_pivots(m, limit)
    }
}

/// Parses `"n"`, `"n/d"` or a finite decimal such as `"0.25"` or `"1e-3"`
/// exactly.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let bad = || Error::Syntax(format!("'{text}' is not a rational number"));
    if let Some((mantissa, exp)) = text.split_once(['e', 'E']) {
        let exp: i32 = exp.parse().map_err(|_| bad())?;
        if mantissa.contains('/') || exp.unsigned_abs() > 4096 {
            return Err(bad());
        }
        let scale = BigRational::from_integer(num_traits::pow(BigInt::from(10), exp.unsigned_abs() as usize));
        let m = parse_rational(mantissa).map_err(|_| bad())?;
        return Ok(if exp >= 0 { m * scale } else { m / scale });
    }
    if let Some((num, den)) = text.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| bad())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| bad())?;
        if den.is_zero() {
            return Err(Error::Syntax(format!("'{text}' has a zero denominator")));
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((int, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let mut num = BigInt::from_str_radix(&digits, 10).map_err(|_| bad())?;
        if negative {
            num = -num;
        }
        let den = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(BigRational::new(num, den));
    }
    BigInt::from_str(text)
        .map(BigRational::from_integer)
        .map_err(|_| bad())
}

/// Rounds a float to the nearest rational with denominator at most
/// `max_den`, accepting it only if it lies within `tol` of `x`.
pub fn snap_to_rational(x: f64, tol: f64, max_den: i64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    // continued-fraction convergents
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i128;
        let h2 = a * h1 + h0;
        let k2 = a * k1 + k0;
        if k2 > max_den as i128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let approx = h1 as f64 / k1 as f64;
        if (approx - x).abs() <= tol {
            return Some(BigRational::new(BigInt::from(h1), BigInt::from(k1)));
        }
        let frac = rest - rest.floor();
        if frac == 0.0 {
            break;
        }
        rest = 1.0 / frac;
    }
    None
}

/// Mode-erased scalar, used where a value crosses a file or CLI boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Exact(BigRational),
    Float(f64),
}

impl Scalar {
    pub fn mode(&self) -> NumericMode {
        match self {
            Scalar::Exact(_) => NumericMode::Exact,
            Scalar::Float(_) => NumericMode::Float,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(q) => Field::to_f64(q),
            Scalar::Float(x) => *x,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(q) => f.write_str(&q.to_text()),
            Scalar::Float(x) => write!(f, "{x}"),
        }
    }
}

pub(crate) fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
