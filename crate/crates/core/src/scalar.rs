//! Number types used for cell values.
//!
//! Everything in the crate is generic over [`Scalar`]. Two implementations
//! ship: [`Rational`] (exact, `i128` numerator and denominator) and `f64`
//! (float mode for resolutions beyond the exact cap).

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, Zero};

use crate::error::Error;

/// Value type stored in a step function cell.
pub trait Scalar:
    Copy
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True when arithmetic on this type is exact.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_rational(r: Rational) -> Self;
    fn to_f64(self) -> f64;
    /// The exact value, when the type carries one.
    fn to_rational(self) -> Option<Rational>;

    fn abs(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    fn is_zero(self) -> bool {
        self == Self::zero()
    }
}

/// Exact rational number backed by `Ratio<i128>`.
///
/// Arithmetic is checked: an `i128` overflow panics instead of wrapping, so a
/// result is either exact or absent. Integer-valued operands take a fast path
/// that skips the gcd.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Rational(Ratio<i128>);

impl Rational {
    pub const ZERO: Rational = Rational(Ratio::new_raw(0, 1));
    pub const ONE: Rational = Rational(Ratio::new_raw(1, 1));

    /// `num/den` in lowest terms. Panics if `den == 0`.
    pub fn new(num: i128, den: i128) -> Self {
        Rational(Ratio::new(num, den))
    }

    pub fn integer(v: i128) -> Self {
        Rational(Ratio::from_integer(v))
    }

    pub fn numer(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i128 {
        *self.0.denom()
    }

    pub fn is_integer(&self) -> bool {
        self.denom() == 1
    }

    /// `2^e`, for `-126 <= e <= 126`.
    pub fn pow2(e: i32) -> Self {
        assert!(e.abs() <= 126, "2^{e} does not fit an i128 rational");
        if e >= 0 {
            Rational::integer(1i128 << e)
        } else {
            Rational(Ratio::new_raw(1, 1i128 << (-e)))
        }
    }

    pub fn recip(self) -> Self {
        assert!(!self.0.is_zero(), "reciprocal of zero");
        Rational(self.0.recip())
    }

    /// Integer power with overflow checking (negative exponents allowed).
    pub fn pow(self, e: i32) -> Self {
        let base = if e < 0 { self.recip() } else { self };
        let mut acc = Rational::ONE;
        for _ in 0..e.unsigned_abs() {
            acc = acc * base;
        }
        acc
    }

    /// Exact `k`-th root if both numerator and denominator are perfect powers.
    pub fn exact_root(self, k: u32) -> Option<Self> {
        if k == 0 {
            return None;
        }
        if k == 1 {
            return Some(self);
        }
        let neg = self.numer() < 0;
        if neg && k.is_multiple_of(2) {
            return None;
        }
        let n = integer_root(self.numer().unsigned_abs(), k)?;
        let d = integer_root(self.denom().unsigned_abs(), k)?;
        let n = n as i128;
        Some(Rational::new(if neg { -n } else { n }, d as i128))
    }

    pub fn to_bigint_pair(self) -> (BigInt, BigInt) {
        (BigInt::from(self.numer()), BigInt::from(self.denom()))
    }

    pub fn floor(self) -> i128 {
        self.0.floor().to_integer()
    }
}

fn integer_root(v: u128, k: u32) -> Option<u128> {
    if v < 2 {
        return Some(v);
    }
    let guess = (v as f64).powf(1.0 / k as f64).round() as u128;
    let lo = guess.saturating_sub(2);
    (lo..=guess + 2).find(|c| c.checked_pow(k) == Some(v))
}

#[cold]
fn overflow(op: &str) -> ! {
    panic!("rational overflow in {op}: value exceeds i128 range")
}

impl Add for Rational {
    type Output = Rational;
    #[inline]
    fn add(self, rhs: Rational) -> Rational {
        if self.denom() == 1 && rhs.denom() == 1 {
            match self.numer().checked_add(rhs.numer()) {
                Some(v) => Rational(Ratio::new_raw(v, 1)),
                None => overflow("add"),
            }
        } else {
            Rational(self.0.checked_add(&rhs.0).unwrap_or_else(|| overflow("add")))
        }
    }
}

impl Sub for Rational {
    type Output = Rational;
    #[inline]
    fn sub(self, rhs: Rational) -> Rational {
        if self.denom() == 1 && rhs.denom() == 1 {
            match self.numer().checked_sub(rhs.numer()) {
                Some(v) => Rational(Ratio::new_raw(v, 1)),
                None => overflow("sub"),
            }
        } else {
            Rational(self.0.checked_sub(&rhs.0).unwrap_or_else(|| overflow("sub")))
        }
    }
}

impl Mul for Rational {
    type Output = Rational;
    #[inline]
    fn mul(self, rhs: Rational) -> Rational {
        if self.denom() == 1 && rhs.denom() == 1 {
            match self.numer().checked_mul(rhs.numer()) {
                Some(v) => Rational(Ratio::new_raw(v, 1)),
                None => overflow("mul"),
            }
        } else {
            Rational(self.0.checked_mul(&rhs.0).unwrap_or_else(|| overflow("mul")))
        }
    }
}

impl Div for Rational {
    type Output = Rational;
    #[inline]
    fn div(self, rhs: Rational) -> Rational {
        assert!(!rhs.0.is_zero(), "rational division by zero");
        Rational(self.0.checked_div(&rhs.0).unwrap_or_else(|| overflow("div")))
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        match self.numer().checked_neg() {
            Some(v) => Rational(Ratio::new_raw(v, self.denom())),
            None => overflow("neg"),
        }
    }
}

impl AddAssign for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        *self = *self + rhs;
    }
}

impl SubAssign for Rational {
    fn sub_assign(&mut self, rhs: Rational) {
        *self = *self - rhs;
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::ZERO, |a, b| a + b)
    }
}

impl From<i64> for Rational {
    fn from(v: i64) -> Self {
        Rational::integer(v as i128)
    }
}

impl From<u64> for Rational {
    fn from(v: u64) -> Self {
        Rational::integer(v as i128)
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

/// Always `numerator/denominator`, the step-function file format.
impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `a/b` or a bare integer `a`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::Parse(format!("not a rational number: {s:?}"));
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let n: i128 = n.trim().parse().map_err(|_| bad())?;
                let d: i128 = d.trim().parse().map_err(|_| bad())?;
                if d == 0 {
                    return Err(bad());
                }
                Ok(Rational::new(n, d))
            }
            None => s.parse::<i128>().map(Rational::integer).map_err(|_| bad()),
        }
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Rational::ZERO
    }
    fn one() -> Self {
        Rational::ONE
    }
    fn from_i64(v: i64) -> Self {
        Rational::integer(v as i128)
    }
    fn from_rational(r: Rational) -> Self {
        r
    }
    fn to_f64(self) -> f64 {
        if self.is_integer() {
            self.numer() as f64
        } else {
            self.numer() as f64 / self.denom() as f64
        }
    }
    fn to_rational(self) -> Option<Rational> {
        Some(self)
    }
    fn abs(self) -> Self {
        Rational(self.0.abs())
    }
    fn is_zero(self) -> bool {
        self.numer() == 0
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_rational(r: Rational) -> Self {
        r.to_f64()
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn to_rational(self) -> Option<Rational> {
        None
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

/// Neumaier-compensated sum; keeps the error of a long positive sum at a few ulps.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

/// `x^p` for `x >= 0`.
///
/// Exponents `2^-j` go through repeated square roots (each correctly rounded);
/// other exponents use `powf`.
pub fn nonneg_pow(x: f64, p: Rational) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if p.numer() == 1 && p.denom() > 0 && (p.denom() as u128).is_power_of_two() {
        let mut v = x;
        let mut d = p.denom();
        while d > 1 {
            v = v.sqrt();
            d >>= 1;
        }
        return v;
    }
    if p.is_integer() {
        if let Ok(e) = i32::try_from(p.numer()) {
            return x.powi(e);
        }
    }
    x.powf(p.to_f64())
}

/// Splits a positive rational exponent into `(a, b)` with `p = a/b`, both positive.
pub fn exponent_parts(p: Rational) -> Result<(u32, u32), Error> {
    if p <= Rational::ZERO {
        return Err(Error::InvalidExponent(format!("{p} is not positive")));
    }
    let a = u32::try_from(p.numer()).map_err(|_| Error::InvalidExponent(format!("{p} too large")))?;
    let b = u32::try_from(p.denom()).map_err(|_| Error::InvalidExponent(format!("{p} too large")))?;
    Ok((a, b))
}

/// Exact test of `|v| <= 2^(depth/p)`, i.e. `|v|^a <= 2^(depth*b)` for `p = a/b`.
pub fn abs_le_pow2_over_p(v: Rational, depth: u32, p: Rational) -> Result<bool, Error> {
    let (a, b) = exponent_parts(p)?;
    let (num, den) = v.abs().to_bigint_pair();
    // |num/den|^a <= 2^(depth*b)  <=>  num^a <= den^a * 2^(depth*b)
    let lhs = num_traits::pow(num, a as usize);
    let rhs = num_traits::pow(den, a as usize) << (depth as usize * b as usize);
    Ok(lhs <= rhs)
}
