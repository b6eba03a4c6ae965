//! Closed rational intervals with directed enclosures of `π` and square roots.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An exact rational number that prints powers of two as `2^k`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Exact(pub BigRational);

impl Exact {
    pub fn pow2(k: i64) -> Self {
        Exact(pow2(k))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// `Some(k)` when the value is exactly `2^k`.
    pub fn log2_exact(&self) -> Option<i64> {
        let (n, d) = (self.0.numer(), self.0.denom());
        if !n.is_positive() {
            return None;
        }
        let is_pow2 = |x: &BigInt| x.bits() > 0 && x.trailing_zeros() == Some(x.bits() - 1);
        if is_pow2(n) && is_pow2(d) {
            Some(n.bits() as i64 - d.bits() as i64)
        } else {
            None
        }
    }
}

pub fn pow2(k: i64) -> BigRational {
    let base = BigInt::one() << k.unsigned_abs();
    if k >= 0 {
        BigRational::from_integer(base)
    } else {
        BigRational::new(BigInt::one(), base)
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.log2_exact() {
            Some(k) => write!(f, "2^{k}"),
            None => write!(f, "{}", self.0),
        }
    }
}

/// Accepts `2^k`, `p/q`, integers and finite decimals such as `0.125`.
impl FromStr for Exact {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("cannot parse exact number {s:?}"));
        if let Some(exp) = s.strip_prefix("2^") {
            let k: i64 = exp.trim_matches(|c| c == '(' || c == ')').parse().map_err(|_| bad())?;
            if k.unsigned_abs() > 1 << 16 {
                return Err(bad());
            }
            return Ok(Exact::pow2(k));
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
            let scale = num_traits::pow(BigInt::from(10), frac.len());
            return Ok(Exact(BigRational::new(digits, scale)));
        }
        s.parse::<BigRational>().map(Exact).map_err(|_| bad())
    }
}

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Exact {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    lo: BigRational,
    hi: BigRational,
}

impl Interval {
    pub fn exact(q: BigRational) -> Self {
        Self { lo: q.clone(), hi: q }
    }

    pub fn int(k: i64) -> Self {
        Self::exact(BigRational::from_integer(k.into()))
    }

    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        Self { lo, hi }
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn contains(&self, q: &BigRational) -> bool {
        &self.lo <= q && q <= &self.hi
    }

    pub fn midpoint_f64(&self) -> f64 {
        ((&self.lo + &self.hi) / BigRational::from_integer(2.into())).to_f64().unwrap_or(f64::NAN)
    }

    pub fn recip(&self) -> Option<Self> {
        if self.lo.is_positive() || self.hi.is_negative() {
            Some(Self::new(self.hi.recip(), self.lo.recip()))
        } else {
            None
        }
    }

    pub fn div(&self, rhs: &Self) -> Option<Self> {
        rhs.recip().map(|r| self * &r)
    }

    pub fn square(&self) -> Self {
        if self.lo.is_negative() && self.hi.is_positive() {
            let m = self.lo.abs().max(self.hi.abs());
            Self::new(BigRational::zero(), &m * &m)
        } else {
            let (a, b) = (&self.lo * &self.lo, &self.hi * &self.hi);
            if a <= b {
                Self::new(a, b)
            } else {
                Self::new(b, a)
            }
        }
    }

    /// Enclosure of `√x` with endpoints on the grid `2^{-bits}/denominator`.
    pub fn sqrt(&self, bits: u32) -> Option<Self> {
        if self.lo.is_negative() {
            return None;
        }
        Some(Self::new(sqrt_bound(&self.lo, bits, false), sqrt_bound(&self.hi, bits, true)))
    }

    /// `self ≤ rhs` if decidable at this width.
    pub fn le(&self, rhs: &Self) -> Option<bool> {
        if self.hi <= rhs.lo {
            Some(true)
        } else if self.lo > rhs.hi {
            Some(false)
        } else {
            None
        }
    }

    /// `self < rhs` if decidable at this width.
    pub fn lt(&self, rhs: &Self) -> Option<bool> {
        if self.hi < rhs.lo {
            Some(true)
        } else if self.lo >= rhs.hi {
            Some(false)
        } else {
            None
        }
    }

    /// Enclosure of `π` from Machin's formula in fixed point with
    /// `bits + 16` fractional bits.
    pub fn pi(bits: u32) -> Self {
        let shift = bits as usize + 16;
        let scale = BigUint::one() << shift;
        let (a5, n5) = atan_inv_fixed(5, &scale);
        let (a239, n239) = atan_inv_fixed(239, &scale);
        let centre = BigInt::from(16) * a5 - BigInt::from(4) * a239;
        let err = BigInt::from(16 * (n5 + 1) + 4 * (n239 + 1));
        let den = BigInt::from(scale);
        Self::new(
            BigRational::new(&centre - &err, den.clone()),
            BigRational::new(centre + err, den),
        )
    }
}

/// `Σ (−1)^j ⌊S / ((2j+1) k^{2j+1})⌋` until the terms vanish; every term is
/// an exact floor, so the error is below `terms + 1` units.
fn atan_inv_fixed(k: u32, scale: &BigUint) -> (BigInt, u64) {
    let k2 = BigUint::from(k * k);
    let mut power = scale / BigUint::from(k);
    let mut sum = BigInt::zero();
    let mut j = 0u64;
    loop {
        let t = &power / BigUint::from(2 * j + 1);
        if t.is_zero() {
            break;
        }
        if j % 2 == 0 {
            sum += BigInt::from(t);
        } else {
            sum -= BigInt::from(t);
        }
        power /= &k2;
        j += 1;
    }
    (sum, j)
}

/// `√(a/b) = √(ab)/b`, bracketed through the integer square root of
/// `ab · 4^bits`.
fn sqrt_bound(q: &BigRational, bits: u32, upper: bool) -> BigRational {
    if q.is_zero() {
        return BigRational::zero();
    }
    let a = q.numer().to_biguint().expect("non-negative");
    let b = q.denom().to_biguint().expect("positive");
    let radicand = (&a * &b) << (2 * bits as usize);
    let s = radicand.sqrt();
    let exact = &s * &s == radicand;
    let top = if upper && !exact { s + BigUint::one() } else { s };
    BigRational::new(BigInt::from(top), BigInt::from(b << bits as usize))
}

impl Add for &Interval {
    type Output = Interval;
    fn add(self, rhs: &Interval) -> Interval {
        Interval::new(&self.lo + &rhs.lo, &self.hi + &rhs.hi)
    }
}

impl Sub for &Interval {
    type Output = Interval;
    fn sub(self, rhs: &Interval) -> Interval {
        Interval::new(&self.lo - &rhs.hi, &self.hi - &rhs.lo)
    }
}

impl Mul for &Interval {
    type Output = Interval;
    fn mul(self, rhs: &Interval) -> Interval {
        let products = [&self.lo * &rhs.lo, &self.lo * &rhs.hi, &self.hi * &rhs.lo, &self.hi * &rhs.hi];
        let lo = products.iter().min().expect("four products").clone();
        let hi = products.iter().max().expect("four products").clone();
        Interval::new(lo, hi)
    }
}

impl Neg for &Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::new(-&self.hi, -&self.lo)
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Interval {
            type Output = Interval;
            fn $m(self, rhs: Interval) -> Interval {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Interval> for Interval {
            type Output = Interval;
            fn $m(self, rhs: &Interval) -> Interval {
                (&self).$m(rhs)
            }
        }
        impl $tr<Interval> for &Interval {
            type Output = Interval;
            fn $m(self, rhs: Interval) -> Interval {
                self.$m(&rhs)
            }
        }
    )*};
}

owned_ops!(Add add, Sub sub, Mul mul);

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn pi_enclosure_contains_float_pi_and_shrinks() {
        let coarse = Interval::pi(64);
        let fine = Interval::pi(1024);
        assert!(coarse.lo().to_f64().unwrap() <= std::f64::consts::PI);
        assert!(coarse.hi().to_f64().unwrap() >= std::f64::consts::PI);
        assert!(fine.lo() >= coarse.lo() && fine.hi() <= coarse.hi());
        let width = fine.hi() - fine.lo();
        assert!(width < pow2(-1000));
        // 355/113 overshoots π by about 2.7e-7
        assert!(fine.hi() < &q(355, 113));
        assert!(fine.lo() > &q(333, 106));
    }

    #[test]
    fn pi_digits() {
        // first 30 decimals of π
        let digits: BigRational = "3141592653589793238462643383279/1000000000000000000000000000000"
            .parse()
            .unwrap();
        let p = Interval::pi(256);
        assert!(p.lo() > &(&digits - q(1, 1_000_000_000_000_000_000)));
        assert!(p.hi() < &(&digits + q(1, 1_000_000_000_000_000_000)));
    }

    #[test]
    fn sqrt_enclosures() {
        let two = Interval::int(2).sqrt(200).unwrap();
        let sq = two.square();
        assert!(sq.lo() <= &q(2, 1) && sq.hi() >= &q(2, 1));
        assert!(two.hi() - two.lo() <= pow2(-199));
        let four = Interval::exact(q(9, 4)).sqrt(10).unwrap();
        assert_eq!(four, Interval::exact(q(3, 2)));
        assert!(Interval::int(-1).sqrt(10).is_none());
    }

    #[test]
    fn arithmetic_encloses() {
        let a = Interval::new(q(-1, 2), q(1, 3));
        let b = Interval::new(q(2, 1), q(3, 1));
        let p = &a * &b;
        assert_eq!(p, Interval::new(q(-3, 2), q(1, 1)));
        assert_eq!(&a - &b, Interval::new(q(-7, 2), q(-5, 3)));
        assert_eq!(a.square(), Interval::new(q(0, 1), q(1, 4)));
        assert!(a.recip().is_none());
        assert_eq!(b.recip().unwrap(), Interval::new(q(1, 3), q(1, 2)));
    }

    #[test]
    fn comparisons() {
        let a = Interval::exact(q(1, 2));
        let b = Interval::new(q(1, 4), q(3, 4));
        assert_eq!(a.le(&a), Some(true));
        assert_eq!(a.lt(&a), Some(false));
        assert_eq!(a.le(&b), None);
        assert_eq!(Interval::int(1).lt(&Interval::int(2)), Some(true));
    }

    #[test]
    fn exact_parsing_and_printing() {
        let e: Exact = "2^-37".parse().unwrap();
        assert_eq!(e.log2_exact(), Some(-37));
        assert_eq!(e.to_string(), "2^-37");
        assert_eq!("3/4".parse::<Exact>().unwrap().0, q(3, 4));
        assert_eq!("0.125".parse::<Exact>().unwrap().to_string(), "2^-3");
        assert_eq!("5".parse::<Exact>().unwrap().0, q(5, 1));
        assert_eq!(Exact(q(3, 4)).to_string(), "3/4");
        assert!("two".parse::<Exact>().is_err());
        assert!("1.".parse::<Exact>().is_err());
        assert_eq!(Exact::pow2(0).to_string(), "2^0");
    }
}
