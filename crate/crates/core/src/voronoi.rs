//! Truncated Voronoi-type expansion of `Δ_k` and its empirical truncation
//! error.
//!
//! `Δ_k(x) ≈ x^{(k-1)/(2k)} / (π√k) · Σ_{n<=N} d_k(n) n^{-(k+1)/(2k)}
//! cos(2kπ (xn)^{1/k} + (k−3)π/4)`.

use std::f64::consts::PI;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dd::DoubleDouble;
use crate::delta::DeltaEvaluator;
use crate::error::{Error, Result};
use crate::sieve::DivisorTable;
use crate::stats::log_log_slope;
use crate::sum::pairwise_sum;

/// Phases above this many radians are reduced in double-double.
pub const DD_PHASE_THRESHOLD: f64 = 1e8;
pub const MIN_PROFILE_SAMPLES: usize = 8;

/// Amplitudes and phase constants for the first `N` terms.
#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiSeries {
    k: u32,
    amplitudes: Vec<f64>,
    phase_offset: f64,
    prefactor_exponent: f64,
}

impl VoronoiSeries {
    pub fn new(table: &DivisorTable, n_terms: u64) -> Result<Self> {
        if n_terms == 0 {
            return Err(Error::EmptyDomain("Voronoi series needs N >= 1".into()));
        }
        if n_terms > table.limit() {
            return Err(Error::OutOfRange {
                value: n_terms as f64,
                limit: table.limit(),
            });
        }
        let k = table.k();
        if k < 2 {
            return Err(Error::Unsupported("Voronoi expansion needs k >= 2".into()));
        }
        let expo = -((k + 1) as f64) / (2 * k) as f64;
        let amplitudes = (1..=n_terms)
            .map(|n| table.get(n) as f64 * (n as f64).powf(expo))
            .collect();
        Ok(Self {
            k,
            amplitudes,
            phase_offset: (k as f64 - 3.0) * PI / 4.0,
            prefactor_exponent: (k - 1) as f64 / (2 * k) as f64,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// `amplitudes()[n-1] = d_k(n) n^{-(k+1)/(2k)}`.
    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn phase_offset(&self) -> f64 {
        self.phase_offset
    }

    pub fn prefactor(&self, x: f64) -> f64 {
        x.powf(self.prefactor_exponent) / (PI * (self.k as f64).sqrt())
    }

    /// Unreduced phase `2kπ (xn)^{1/k} + (k−3)π/4` in double precision.
    pub fn phase_f64(&self, x: f64, n: u64) -> f64 {
        let r = (x * n as f64).powf(1.0 / self.k as f64);
        2.0 * self.k as f64 * PI * r + self.phase_offset
    }

    /// Phase reduced to `[0, 2π)`, with `(xn)^{1/k}` and the reduction
    /// carried in double-double.
    pub fn phase_reduced_dd(&self, x: f64, n: u64) -> f64 {
        let r = DoubleDouble::product(x, n as f64).root(self.k);
        // phase / 2π = k·r + (k−3)/8
        let turns = r.mul_f64(self.k as f64) + DoubleDouble::from_f64((self.k as f64 - 3.0) / 8.0);
        2.0 * PI * turns.fract()
    }

    /// `cos` of the phase of term `n` at `x`.
    #[inline]
    pub fn term_cos(&self, x: f64, n: u64) -> f64 {
        let raw = self.phase_f64(x, n);
        if raw.abs() > DD_PHASE_THRESHOLD {
            self.phase_reduced_dd(x, n).cos()
        } else {
            raw.cos()
        }
    }

    /// Partial sums of the bracketed series at each requested length.
    /// `lengths` must be sorted ascending and within the series.
    fn partial_sums(&self, x: f64, lengths: &[u64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(lengths.len());
        let mut acc = 0.0;
        let mut n = 0u64;
        for &len in lengths {
            while n < len {
                n += 1;
                acc += self.amplitudes[n as usize - 1] * self.term_cos(x, n);
            }
            out.push(acc);
        }
        out
    }
}

/// The truncated expansion at `x` using every term of `series`.
pub fn truncated_voronoi(series: &VoronoiSeries, x: f64) -> Result<f64> {
    if !(x >= 1.0) {
        return Err(Error::Domain(format!(
            "Voronoi expansion needs x >= 1, got {x}"
        )));
    }
    if series.is_empty() {
        return Err(Error::EmptyDomain("Voronoi series needs N >= 1".into()));
    }
    if series.len() as f64 > x {
        log::warn!("truncation N = {} exceeds x = {x}", series.len());
    }
    let s = series.partial_sums(x, &[series.len() as u64])[0];
    Ok(series.prefactor(x) * s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub n_terms: u64,
    pub rms_error: f64,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorProfile {
    pub k: u32,
    pub x_base: f64,
    pub sample_count: usize,
    pub rows: Vec<ProfileRow>,
    /// Least-squares slope of log RMS error against log N; absent with fewer
    /// than two distinct N.
    pub fitted_slope: Option<f64>,
}

/// Half-integer sample points in `[X, 2X)`: with `a = ⌊X⌋`,
/// `span = ⌊2X⌋ − a`, each point is `a + (u mod span) + 1/2` where `u` is
/// the next output of ChaCha8 seeded from `seed` via `seed_from_u64`.
pub fn half_integer_samples(x_base: f64, count: usize, seed: u64) -> Vec<f64> {
    let a = x_base.floor() as u64;
    let span = ((2.0 * x_base).floor() as u64 - a).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (a + rng.next_u64() % span) as f64 + 0.5)
        .collect()
}

/// RMS and max of `|Δ_k(x) − truncated sum|` over random half-integers in
/// `[X, 2X)` for each truncation length.
pub fn truncation_error_profile(
    evaluator: &DeltaEvaluator<'_>,
    x_base: f64,
    sample_count: usize,
    n_list: &[u64],
    seed: u64,
) -> Result<ErrorProfile> {
    if sample_count < MIN_PROFILE_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{sample_count} samples; need at least {MIN_PROFILE_SAMPLES}"
        )));
    }
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(Error::EmptyDomain(
            "every truncation length must be >= 1".into(),
        ));
    }
    let mut lengths = n_list.to_vec();
    lengths.sort_unstable();
    lengths.dedup();
    let n_max = *lengths.last().unwrap();
    evaluator.check_range(2.0 * x_base)?;
    let series = VoronoiSeries::new(evaluator.table(), n_max)?;
    if n_max as f64 > x_base {
        log::warn!("truncation N = {n_max} exceeds X = {x_base}");
    }

    let xs = half_integer_samples(x_base, sample_count, seed);
    let errors: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|&x| {
            let exact = evaluator.delta(x).expect("sample inside table");
            let pre = series.prefactor(x);
            series
                .partial_sums(x, &lengths)
                .into_iter()
                .map(|s| (exact - pre * s).abs())
                .collect()
        })
        .collect();

    let rows: Vec<ProfileRow> = lengths
        .iter()
        .enumerate()
        .map(|(j, &n_terms)| {
            let sq: Vec<f64> = errors.iter().map(|e| e[j] * e[j]).collect();
            ProfileRow {
                n_terms,
                rms_error: (pairwise_sum(&sq) / sample_count as f64).sqrt(),
                max_error: errors.iter().map(|e| e[j]).fold(0.0, f64::max),
            }
        })
        .collect();
    let ns: Vec<f64> = rows.iter().map(|r| r.n_terms as f64).collect();
    let rms: Vec<f64> = rows.iter().map(|r| r.rms_error).collect();
    Ok(ErrorProfile {
        k: evaluator.k(),
        x_base,
        sample_count,
        fitted_slope: log_log_slope(&ns, &rms),
        rows,
    })
}
