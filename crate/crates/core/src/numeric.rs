//! Numeric modes: exact rationals and tolerance-based floats behind one trait.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Neg;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

pub type Rational = num_rational::BigRational;

/// Absolute tolerance used for comparisons in float mode.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

/// Field operations shared by the exact and the floating-point solver paths.
pub trait Scalar:
    Clone + fmt::Debug + fmt::Display + PartialOrd + Num + Neg<Output = Self> + Send + Sync + 'static
{
    const EXACT: bool;
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    fn to_rational(&self) -> Rational;
    /// Comparison that treats values within the mode's tolerance as equal.
    fn cmp_tol(&self, other: &Self) -> Ordering;

    fn from_usize(n: usize) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(n)))
    }
    fn is_zero_tol(&self) -> bool {
        self.cmp_tol(&Self::zero()) == Ordering::Equal
    }
    fn is_pos_tol(&self) -> bool {
        self.cmp_tol(&Self::zero()) == Ordering::Greater
    }
    fn is_neg_tol(&self) -> bool {
        self.cmp_tol(&Self::zero()) == Ordering::Less
    }
    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn to_f64(&self) -> f64 {
        self.to_f64_lossy()
    }
    fn to_rational(&self) -> Rational {
        self.clone()
    }
    fn cmp_tol(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn from_rational(r: &Rational) -> Self {
        r.to_f64_lossy()
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_rational(&self) -> Rational {
        Rational::from_f64(*self).unwrap_or_else(Rational::zero)
    }
    fn cmp_tol(&self, other: &Self) -> Ordering {
        if (self - other).abs() <= FLOAT_TOLERANCE {
            Ordering::Equal
        } else if self < other {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
}

trait LossyF64 {
    fn to_f64_lossy(&self) -> f64;
}

impl LossyF64 for Rational {
    fn to_f64_lossy(&self) -> f64 {
        match (self.numer().to_f64(), self.denom().to_f64()) {
            (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
            _ => {
                // Scale down huge numerators/denominators before dividing.
                let shift = self.numer().bits().max(self.denom().bits()).saturating_sub(1000);
                let n = (self.numer() >> shift).to_f64().unwrap_or(0.0);
                let d = (self.denom() >> shift).to_f64().unwrap_or(1.0);
                n / d
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid number `{0}`: expected a decimal or p/q")]
pub struct NumberParseError(pub String);

/// Parses `"3/4"`, `"0.75"`, `"1e-4"` or `"2"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, NumberParseError> {
    let t = text.trim();
    let err = || NumberParseError(text.to_string());
    if t.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| err())?),
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(BigInt::from_str(&all_digits).map_err(|_| err())?);
    let scale = exponent - frac_part.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Ok(if negative { -value } else { value })
}

/// Canonical text form: `"n"` for integers, `"p/q"` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn is_probability(r: &Rational) -> bool {
    !r.is_negative() && *r <= Rational::one()
}


/// Solves `a · x = b` by Gauss-Jordan elimination with partial pivoting on the largest
/// magnitude (first non-zero in exact mode). Returns `None` for singular systems.
pub fn solve_linear<N: Scalar>(mut a: Vec<Vec<N>>, mut b: Vec<N>) -> Option<Vec<N>> {
    let n = b.len();
    for col in 0..n {
        let pivot = if N::EXACT {
            (col..n).find(|&r| !a[r][col].is_zero())?
        } else {
            let r = (col..n).max_by(|&x, &y| {
                a[x][col]
                    .to_f64()
                    .abs()
                    .partial_cmp(&a[y][col].to_f64().abs())
                    .unwrap_or(Ordering::Equal)
            })?;
            if a[r][col].is_zero_tol() {
                return None;
            }
            r
        };
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x = x.clone() / p.clone();
        }
        b[col] = b[col].clone() / p;
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for c in col..n {
                let v = a[col][c].clone();
                if !v.is_zero() {
                    a[r][c] = a[r][c].clone() - f.clone() * v;
                }
            }
            b[r] = b[r].clone() - f * b[col].clone();
        }
    }
    Some(b)
}
