//! Interval arithmetic over binary64 with a guaranteed outward-rounding
//! containment contract: for every operation, the exact real result set is
//! contained in the returned interval.
//!
//! Directed rounding is realized without touching the FPU rounding mode.
//! Each elementary operation is performed in round-to-nearest, the exact
//! rounding error is recovered with an error-free transformation (TwoSum for
//! `+`/`-`, an FMA residual for `*`/`/`), and the affected endpoint is bumped
//! one representable value outward only when the operation was inexact in
//! the unsafe direction. This never under-encloses and over-encloses by at
//! most one ulp per endpoint.

use serde::de::{self, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// Below this magnitude the FMA residual of a product or quotient may itself
/// be inexact (results graze the subnormal range), so exactness detection is
/// not trusted and endpoints are bumped unconditionally.
const RESIDUAL_TRUST_FLOOR: f64 = 1e-280;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IntervalError {
    /// An endpoint became non-finite (overflow or NaN from invalid input).
    #[error("non-finite interval endpoint")]
    NonFinite,
    /// Construction with lo > hi.
    #[error("inverted interval bounds: lo > hi")]
    InvertedBounds,
    /// Division by an interval containing zero.
    #[error("zero contained in divisor interval")]
    ZeroInDivisor,
}

/// A closed interval `[lo, hi]` of finite binary64 numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

#[inline]
fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    // Knuth TwoSum: a + b = s + err exactly (no overflow on intermediates).
    let bv = s - a;
    let av = s - bv;
    (a - av) + (b - bv)
}

#[inline]
fn add_directed(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    if !s.is_finite() {
        return (s, s);
    }
    let e = two_sum_err(a, b, s);
    if e > 0.0 {
        (s, s.next_up())
    } else if e < 0.0 {
        (s.next_down(), s)
    } else {
        (s, s)
    }
}

#[inline]
fn mul_directed(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    if !p.is_finite() {
        return (p, p);
    }
    if p == 0.0 {
        // Product of finite values rounded to zero: exact only if a or b is zero.
        if a == 0.0 || b == 0.0 {
            return (0.0, 0.0);
        }
        return if (a > 0.0) == (b > 0.0) {
            (0.0, f64::MIN_POSITIVE)
        } else {
            (-f64::MIN_POSITIVE, 0.0)
        };
    }
    if p.abs() < RESIDUAL_TRUST_FLOOR {
        return (p.next_down(), p.next_up());
    }
    let e = a.mul_add(b, -p);
    if e > 0.0 {
        (p, p.next_up())
    } else if e < 0.0 {
        (p.next_down(), p)
    } else {
        (p, p)
    }
}

#[inline]
fn div_directed(a: f64, b: f64) -> (f64, f64) {
    let q = a / b;
    if !q.is_finite() {
        return (q, q);
    }
    if q == 0.0 {
        if a == 0.0 {
            return (0.0, 0.0);
        }
        return if (a > 0.0) == (b > 0.0) {
            (0.0, f64::MIN_POSITIVE)
        } else {
            (-f64::MIN_POSITIVE, 0.0)
        };
    }
    if q.abs() < RESIDUAL_TRUST_FLOOR || a.abs() < RESIDUAL_TRUST_FLOOR {
        return (q.next_down(), q.next_up());
    }
    // q*b - a is exact under FMA; a/b - q has the sign of -(q*b - a)/b.
    let e = q.mul_add(b, -a);
    if e == 0.0 {
        return (q, q);
    }
    let true_above = (e < 0.0) == (b > 0.0);
    if true_above {
        (q, q.next_up())
    } else {
        (q.next_down(), q)
    }
}

impl Interval {
    /// Builds `[lo, hi]`, rejecting non-finite or inverted endpoints.
    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(IntervalError::NonFinite);
        }
        if lo > hi {
            return Err(IntervalError::InvertedBounds);
        }
        Ok(Interval { lo, hi })
    }

    /// The degenerate interval `[x, x]`. Panics on non-finite input; use only
    /// for values that are finite by construction.
    pub fn point(x: f64) -> Self {
        assert!(x.is_finite(), "point interval from non-finite value");
        Interval { lo: x, hi: x }
    }

    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// A representable point inside the interval, used for re-centering.
    pub fn midpoint(&self) -> f64 {
        let m = self.lo + (self.hi - self.lo) * 0.5;
        m.clamp(self.lo, self.hi)
    }

    /// Upper bound on `hi - lo` (upward-rounded subtraction).
    pub fn width(&self) -> f64 {
        let w = self.hi - self.lo;
        if two_sum_err(self.hi, -self.lo, w) < 0.0 {
            w.next_up()
        } else {
            w
        }
    }

    /// Largest absolute value of a member of the interval.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    fn check(lo: f64, hi: f64) -> Result<Interval, IntervalError> {
        if lo.is_finite() && hi.is_finite() {
            Ok(Interval { lo, hi })
        } else {
            Err(IntervalError::NonFinite)
        }
    }

    pub fn add(&self, other: &Interval) -> Result<Interval, IntervalError> {
        let (lo, _) = add_directed(self.lo, other.lo);
        let (_, hi) = add_directed(self.hi, other.hi);
        Self::check(lo, hi)
    }

    pub fn sub(&self, other: &Interval) -> Result<Interval, IntervalError> {
        let (lo, _) = add_directed(self.lo, -other.hi);
        let (_, hi) = add_directed(self.hi, -other.lo);
        Self::check(lo, hi)
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn mul(&self, other: &Interval) -> Result<Interval, IntervalError> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in &[self.lo, self.hi] {
            for &y in &[other.lo, other.hi] {
                let (d, u) = mul_directed(x, y);
                lo = lo.min(d);
                hi = hi.max(u);
            }
        }
        Self::check(lo, hi)
    }

    pub fn div(&self, other: &Interval) -> Result<Interval, IntervalError> {
        if other.lo <= 0.0 && 0.0 <= other.hi {
            return Err(IntervalError::ZeroInDivisor);
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in &[self.lo, self.hi] {
            for &y in &[other.lo, other.hi] {
                let (d, u) = div_directed(x, y);
                lo = lo.min(d);
                hi = hi.max(u);
            }
        }
        Self::check(lo, hi)
    }

    /// Integer power by repeated multiplication. Negative exponents require
    /// an interval excluding zero.
    pub fn powi(&self, n: i32) -> Result<Interval, IntervalError> {
        if n < 0 {
            return Interval::ONE.div(&self.powi(-n)?);
        }
        let mut acc = Interval::ONE;
        let mut base = *self;
        let mut k = n as u32;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Widens both endpoints outward by `pad >= 0`.
    pub fn widen(&self, pad: f64) -> Result<Interval, IntervalError> {
        debug_assert!(pad >= 0.0);
        let (lo, _) = add_directed(self.lo, -pad);
        let (_, hi) = add_directed(self.hi, pad);
        Self::check(lo, hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        (self.lo, self.hi).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct IvVisitor;
        impl<'de> Visitor<'de> for IvVisitor {
            type Value = Interval;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a two-element array [lo, hi]")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Interval, A::Error> {
                let lo: f64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let hi: f64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                Interval::new(lo, hi).map_err(de::Error::custom)
            }
        }
        deserializer.deserialize_seq(IvVisitor)
    }
}
