//! Double-double arithmetic.
//!
//! A value is an unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`, giving
//! roughly 106 bits of significand. Only the operations needed for phase
//! reduction and root sums are provided.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };

    #[inline]
    pub const fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    /// Exact for every `u64`.
    pub fn from_u64(n: u64) -> Self {
        let hi = n as f64;
        // `hi` may have rounded; the remainder fits in an f64 exactly.
        let lo = (n as i128 - hi as i128) as f64;
        let (hi, lo) = quick_two_sum(hi, lo);
        Self { hi, lo }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// Exact product of two doubles.
    #[inline]
    pub fn product(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        Self { hi, lo }
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }

    pub fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + Self::from_f64(q3)
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn powi(self, k: u32) -> Self {
        let mut acc = Self::from_f64(1.0);
        for _ in 0..k {
            acc = acc * self;
        }
        acc
    }

    /// Largest integer not exceeding the value.
    pub fn floor(self) -> Self {
        let hi = self.hi.floor();
        if hi == self.hi {
            let lo = self.lo.floor();
            let (hi, lo) = quick_two_sum(hi, lo);
            Self { hi, lo }
        } else {
            Self { hi, lo: 0.0 }
        }
    }

    /// Fractional part in `[0, 1)`.
    pub fn fract(self) -> f64 {
        let f = (self - self.floor()).to_f64();
        if f >= 1.0 {
            0.0
        } else {
            f
        }
    }

    /// Real `k`-th root of a non-negative value: one Newton step in
    /// double-double from the f64 estimate.
    pub fn root(self, k: u32) -> Self {
        debug_assert!(k >= 1);
        if k == 1 || self.hi == 0.0 {
            return self;
        }
        let r0 = self.hi.powf(1.0 / k as f64);
        let r0 = Self::from_f64(r0);
        let pow = r0.powi(k - 1);
        let num = self - pow * r0;
        let den = pow.mul_f64(k as f64);
        // Second step cleans up the residual left by the f64 estimate.
        let r1 = r0 + num.div(den);
        let pow = r1.powi(k - 1);
        let num = self - pow * r1;
        let den = pow.mul_f64(k as f64);
        r1 + num.div(den)
    }

    #[inline]
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.hi
            .total_cmp(&other.hi)
            .then_with(|| self.lo.total_cmp(&other.lo))
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    #[inline]
    fn add(self, b: Self) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let e = e + t;
        let (s, e) = quick_two_sum(s, e);
        let e = e + f;
        let (hi, lo) = quick_two_sum(s, e);
        Self { hi, lo }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    #[inline]
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    #[inline]
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }
}

/// 2π as a double-double.
pub const TWO_PI: DoubleDouble = DoubleDouble {
    hi: std::f64::consts::TAU,
    lo: 2.4492935982947064e-16,
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_of_two_is_accurate_past_f64() {
        let r = DoubleDouble::from_f64(2.0).root(2);
        let err = (r * r - DoubleDouble::from_f64(2.0)).to_f64().abs();
        assert!(err < 1e-30, "{err:e}");
    }

    #[test]
    fn cube_root_of_perfect_cube_is_exact() {
        let r = DoubleDouble::from_u64(1_000_000_000).root(3);
        assert_eq!(r.hi, 1000.0);
        assert!(r.lo.abs() < 1e-28);
    }

    #[test]
    fn fract_of_large_value_keeps_low_bits() {
        // 2^60 + 0.25 is not representable as f64, but is as double-double.
        let x = DoubleDouble::from_u64(1 << 60) + DoubleDouble::from_f64(0.25);
        assert_eq!(x.fract(), 0.25);
    }

    #[test]
    fn from_u64_round_trips_large_odd_values() {
        let n = u64::MAX - 2;
        let x = DoubleDouble::from_u64(n);
        assert_eq!(x.hi as i128 + x.lo as i128, n as i128);
    }
}
