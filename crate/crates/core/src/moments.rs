//! Moment integrals of `Δ_k` over long and short intervals.
//!
//! Between consecutive integers `Δ_k(x) = D_k(n) − x P(log x)` is analytic,
//! so each unit piece is integrated with a fixed Gauss–Legendre rule.
//! Pieces are grouped in fixed-size chunks, accumulated with compensated
//! summation and combined by an order-fixed pairwise tree.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::delta::DeltaEvaluator;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::sum::{map_chunks, pairwise_sum, CompensatedSum};

pub const DEFAULT_ORDER: usize = 8;
pub const MIN_ORDER: usize = 4;
pub const MAX_ORDER: usize = 16;
pub const MAX_MOMENT: u32 = 9;
const CHUNK: u64 = 1 << 14;

/// `131/416`, the best known upper bound for the exponent of `Δ`.
pub const HUXLEY_ALPHA: f64 = 131.0 / 416.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentResult {
    pub k: u32,
    pub m: u32,
    pub a: f64,
    pub b: f64,
    pub value: f64,
    pub quadrature_order: usize,
    /// `value / b^{1 + m(k−1)/(2k)}`.
    pub normalization: f64,
}

/// Exponent of `X` in the predicted size of `∫_1^X Δ_k^m`.
pub fn moment_exponent(k: u32, m: u32) -> f64 {
    1.0 + m as f64 * (k - 1) as f64 / (2 * k) as f64
}

/// `∫_a^b Δ_k(x)^m dx`.
///
/// `a == b` gives zero; `b < a` is a domain error.
pub fn moment_integral(
    ev: &DeltaEvaluator<'_>,
    m: u32,
    a: f64,
    b: f64,
    order: usize,
) -> Result<MomentResult> {
    if !(1..=MAX_MOMENT).contains(&m) {
        return Err(Error::Domain(format!(
            "moment m = {m} outside 1..={MAX_MOMENT}"
        )));
    }
    if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
        return Err(Error::Domain(format!(
            "quadrature order {order} outside {MIN_ORDER}..={MAX_ORDER}"
        )));
    }
    if !(b >= a) {
        return Err(Error::Domain(format!(
            "empty or reversed interval [{a}, {b}]"
        )));
    }
    ev.check_range(a)?;
    ev.check_range(b)?;
    let rule = GaussLegendre::new(order);
    let value = if a == b {
        0.0
    } else {
        integrate_power(ev, &rule, m, a, b)
    };
    Ok(MomentResult {
        k: ev.k(),
        m,
        a,
        b,
        value,
        quadrature_order: order,
        normalization: value / b.powf(moment_exponent(ev.k(), m)),
    })
}

fn integrate_power(ev: &DeltaEvaluator<'_>, rule: &GaussLegendre, m: u32, a: f64, b: f64) -> f64 {
    let first = a.floor() as u64;
    // Piece [n, n+1) for n in first..=last.
    let last = if b.fract() == 0.0 {
        b as u64 - 1
    } else {
        b.floor() as u64
    };
    let table = ev.table();
    let chunks = map_chunks(first, last + 1, CHUNK, |lo, hi| {
        let mut acc = CompensatedSum::new();
        let mut summatory = table.summatory(lo - 1);
        for n in lo..hi {
            summatory += table.get(n) as u64;
            let pa = (n as f64).max(a);
            let pb = ((n + 1) as f64).min(b);
            if pb > pa {
                acc.add(rule.integrate(pa, pb, |x| ev.delta_on_piece(summatory, x).powi(m as i32)));
            }
        }
        acc.value()
    });
    pairwise_sum(&chunks)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub k: u32,
    pub m: u32,
    /// Normalised value at the largest `X`.
    pub fitted_constant: f64,
    pub exponent_fixed: f64,
    /// `(X, ∫_1^X Δ^m / X^{exponent})`.
    pub residual_series: Vec<(f64, f64)>,
}

/// Normalised moments `∫_1^X Δ_k^m / X^{1 + m(k−1)/(2k)}` along `x_list`.
/// The integral is accumulated piece by piece, so the cost is that of the
/// largest `X`.
pub fn fit_moment_constant(ev: &DeltaEvaluator<'_>, m: u32, x_list: &[f64]) -> Result<FitResult> {
    fit_moment_constant_with_order(ev, m, x_list, DEFAULT_ORDER)
}

pub fn fit_moment_constant_with_order(
    ev: &DeltaEvaluator<'_>,
    m: u32,
    x_list: &[f64],
    order: usize,
) -> Result<FitResult> {
    if x_list.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} points; need at least 4",
            x_list.len()
        )));
    }
    if x_list.windows(2).any(|w| w[1] <= w[0]) || x_list[0] <= 1.0 {
        return Err(Error::Domain(
            "X list must be increasing and above 1".into(),
        ));
    }
    let exponent = moment_exponent(ev.k(), m);
    let mut total = 0.0;
    let mut prev = 1.0;
    let mut residual_series = Vec::with_capacity(x_list.len());
    for &x in x_list {
        total += moment_integral(ev, m, prev, x, order)?.value;
        prev = x;
        residual_series.push((x, total / x.powf(exponent)));
    }
    Ok(FitResult {
        k: ev.k(),
        m,
        fitted_constant: residual_series.last().unwrap().1,
        exponent_fixed: exponent,
        residual_series,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalAverage {
    pub x: f64,
    pub h: f64,
    pub average: f64,
    pub residual: f64,
}

/// `average = (1/H) ∫_X^{X+H} Δ_k` and `residual = Δ_k(X) − average`.
pub fn interval_average(ev: &DeltaEvaluator<'_>, x: f64, h: f64) -> Result<IntervalAverage> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!(
            "interval length H = {h} must be positive"
        )));
    }
    if h > x / 2.0 {
        return Err(Error::Domain(format!("H = {h} exceeds X/2 = {}", x / 2.0)));
    }
    let integral = moment_integral(ev, 1, x, x + h, DEFAULT_ORDER)?.value;
    let average = integral / h;
    Ok(IntervalAverage {
        x,
        h,
        average,
        residual: ev.delta(x)? - average,
    })
}

/// Random `(X, H)` pairs: `X` uniform in `[x_min, x_max]` and
/// `H = X^u` with `u` uniform in `[u_lo, u_hi]`. Each draw takes two
/// ChaCha8 outputs mapped to `[0, 1)` by `(v >> 11) · 2^{-53}`.
pub fn random_windows(
    count: usize,
    x_min: f64,
    x_max: f64,
    u_lo: f64,
    u_hi: f64,
    seed: u64,
) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = move || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (0..count)
        .map(|_| {
            let x = x_min + (x_max - x_min) * unit();
            let u = u_lo + (u_hi - u_lo) * unit();
            (x, x.powf(u))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortIntervalMoment {
    pub k: u32,
    pub x: f64,
    pub h: f64,
    pub value: f64,
    /// `(H X^{(2k−2)/k}, H^{(2k−3)/(2k+1)} X^{(8k−8)/(2k+1)})`.
    pub bound_terms: (f64, f64),
}

/// `∫_{X−H}^{X+H} Δ_k⁴` with the two terms of the short-interval bound.
pub fn short_interval_fourth_moment(
    ev: &DeltaEvaluator<'_>,
    x: f64,
    h: f64,
) -> Result<ShortIntervalMoment> {
    if !(h >= 1.0) || h > x / 2.0 {
        return Err(Error::Domain(format!(
            "need 1 <= H <= X/2, got H = {h}, X = {x}"
        )));
    }
    let value = moment_integral(ev, 4, x - h, x + h, DEFAULT_ORDER)?.value;
    Ok(ShortIntervalMoment {
        k: ev.k(),
        x,
        h,
        value,
        bound_terms: fourth_moment_bound_terms(ev.k(), x, h),
    })
}

pub fn fourth_moment_bound_terms(k: u32, x: f64, h: f64) -> (f64, f64) {
    let k = k as f64;
    let t1 = h * x.powf((2.0 * k - 2.0) / k);
    let t2 = h.powf((2.0 * k - 3.0) / (2.0 * k + 1.0)) * x.powf((8.0 * k - 8.0) / (2.0 * k + 1.0));
    (t1, t2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuxleyReport {
    pub x: f64,
    pub h: f64,
    pub measured: f64,
    pub alpha_est: f64,
    /// `1 + 2α` for the estimate and for `131/416`.
    pub exponent_est: f64,
    pub exponent_huxley: f64,
    pub bound_est: f64,
    pub bound_huxley: f64,
    pub ratio_est: f64,
    pub ratio_huxley: f64,
}

/// `HX + X^{1+2α}` with `α = 131/416` and with `α = alpha_est`, compared to
/// the measured `∫_{X−H}^{X+H} Δ⁴` (k = 2, `√X <= H <= X/2`).
pub fn huxley_bound_check(
    ev: &DeltaEvaluator<'_>,
    x: f64,
    h: f64,
    alpha_est: f64,
) -> Result<HuxleyReport> {
    if ev.k() != 2 {
        return Err(Error::Unsupported("the α-bound applies to k = 2".into()));
    }
    if h < x.sqrt() || h > x / 2.0 {
        return Err(Error::Domain(format!(
            "need √X <= H <= X/2, got H = {h}, X = {x}"
        )));
    }
    let measured = short_interval_fourth_moment(ev, x, h)?.value;
    let bound = |alpha: f64| h * x + x.powf(1.0 + 2.0 * alpha);
    let bound_est = bound(alpha_est);
    let bound_huxley = bound(HUXLEY_ALPHA);
    Ok(HuxleyReport {
        x,
        h,
        measured,
        alpha_est,
        exponent_est: 1.0 + 2.0 * alpha_est,
        exponent_huxley: 1.0 + 2.0 * HUXLEY_ALPHA,
        bound_est,
        bound_huxley,
        ratio_est: measured / bound_est,
        ratio_huxley: measured / bound_huxley,
    })
}
