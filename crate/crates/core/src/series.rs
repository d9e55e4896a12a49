//! The Dirichlet series `S_k = Σ d_k(n)² n^{-(k+1)/k}` that fixes the
//! mean-square constant `∫_1^X Δ_k² ~ S_k / (2(2k−1)π²) · X^{(2k−1)/k}`.
//!
//! Two routes are provided:
//! * a partial sum over a sieved table plus the smooth tail
//!   `Σ_{n>N} ≈ ∫_N^∞ t^{-σ} dM(t)`, where `M` is the main term of
//!   `Σ_{n<=t} d_k(n)²`; the tail equals
//!   `Res_{s=1} F(s) N^{s−σ} / (σ − s)` and is taken by contour integration;
//! * the Euler product `F(σ) = ζ(σ)^{k²} H(σ)` at the real point.
//!
//! Here `F(s) = Σ d_k(n)² n^{-s} = ζ(s)^{k²} ζ(2s)^{c} Π_p G_p(s)` where the
//! exponent `c` is chosen so that `G_p = 1 + O(p^{-3s})`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sieve::{primes_up_to, DivisorTable};
use crate::zeta::{contour_integral, zeta};

/// Primes used in the Euler product.
pub const EULER_PRIME_BOUND: u64 = 1_000_000;
const TAIL_RADIUS: f64 = 0.2;
const TAIL_POINTS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub k: u32,
    pub terms: u64,
    pub partial_sum: f64,
    pub tail: f64,
    pub total: f64,
}

/// `σ = (k+1)/k`.
pub fn series_exponent(k: u32) -> f64 {
    (k + 1) as f64 / k as f64
}

/// `1 / (2(2k−1)π²)`.
pub fn mean_square_prefactor(k: u32) -> f64 {
    1.0 / (2.0 * (2 * k - 1) as f64 * PI * PI)
}

/// `C(e+k−1, k−1)²` for `e = 0..len`.
fn local_coeffs(k: u32, len: usize) -> Vec<f64> {
    (0..len as u64)
        .map(|e| {
            let mut c = 1.0f64;
            for i in 1..k as u64 {
                c = c * (e + i) as f64 / i as f64;
            }
            c * c
        })
        .collect()
}

/// `c` with `(1−y)^{k²} L_p(y) = 1 + c·y² + O(y³)`, so that `ζ(2s)^c`
/// carries the `p^{-2s}` part of the Euler product.
fn second_order_exponent(k: u32) -> i32 {
    let kk = (k * k) as i64;
    let l1 = kk;
    let l2 = {
        let t = (k * (k + 1) / 2) as i64;
        t * t
    };
    let c2 = l2 - kk * l1 + kk * (kk - 1) / 2;
    c2 as i32
}

/// Euler product for `F(s) / ζ(s)^{k²}` over primes up to `bound`.
struct EulerFactor {
    k: u32,
    c2: i32,
    primes: Vec<u64>,
}

impl EulerFactor {
    fn new(k: u32, bound: u64) -> Self {
        Self {
            k,
            c2: second_order_exponent(k),
            primes: primes_up_to(bound),
        }
    }

    fn eval(&self, s: Complex64) -> Complex64 {
        let kk = (self.k * self.k) as i32;
        let coeffs = local_coeffs(self.k, 200);
        let mut prod = zeta(2.0 * s).powi(self.c2);
        for &p in &self.primes {
            let y = (-s * (p as f64).ln()).exp();
            let mut l = Complex64::new(0.0, 0.0);
            let mut yp = Complex64::new(1.0, 0.0);
            for c in &coeffs {
                let term = yp * *c;
                l += term;
                if term.norm() < 1e-18 * l.norm() {
                    break;
                }
                yp *= y;
            }
            let one_minus = Complex64::new(1.0, 0.0) - y;
            let y2 = y * y;
            let g = l * one_minus.powi(kk) * (Complex64::new(1.0, 0.0) - y2).powi(self.c2);
            prod *= g;
        }
        prod
    }
}

/// `Σ_{n>=1} d_k(n)² n^{-s}` at real `s` by the Euler product.
pub fn dk_squared_series_euler(k: u32, s: f64, prime_bound: u64) -> Result<f64> {
    if !(2..=4).contains(&k) || s <= 1.0 {
        return Err(Error::Domain(format!("Euler product for k = {k}, s = {s}")));
    }
    let sc = Complex64::new(s, 0.0);
    let h = EulerFactor::new(k, prime_bound).eval(sc);
    Ok((zeta(sc).powi((k * k) as i32) * h).re)
}

/// Partial sum over the table plus the smooth tail.
pub fn dk_squared_series(table: &DivisorTable, prime_bound: u64) -> Result<SeriesValue> {
    let k = table.k();
    if !(2..=4).contains(&k) {
        return Err(Error::Unsupported(format!("series for k = {k}")));
    }
    let sigma = series_exponent(k);
    let n = table.limit();
    let mut acc = crate::sum::CompensatedSum::new();
    for (i, &d) in table.values().iter().enumerate() {
        let d = d as f64;
        acc.add(d * d * ((i + 1) as f64).powf(-sigma));
    }
    let partial_sum = acc.value();

    let euler = EulerFactor::new(k, prime_bound);
    let kk = (k * k) as i32;
    let ln_n = (n as f64).ln();
    let tail = contour_integral(1.0, TAIL_RADIUS, TAIL_POINTS, |s| {
        zeta(s).powi(kk) * euler.eval(s) * ((s - sigma) * ln_n).exp() / (sigma - s)
    })
    .re;
    Ok(SeriesValue {
        k,
        terms: n,
        partial_sum,
        tail,
        total: partial_sum + tail,
    })
}
