//! Large values of `Δ_k`: the omega threshold `G_k`, record scans, a crude
//! envelope exponent and the short-interval divisor-sum check.

use std::cmp::Ordering;
use std::f64::consts::E;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::delta::DeltaEvaluator;
use crate::error::{Error, Result};
use crate::moments::HUXLEY_ALPHA;
use crate::sieve::DivisorTable;
use crate::stats::linear_fit;
use crate::sum::map_chunks;

const SCAN_CHUNK: u64 = 1 << 16;
pub const MIN_ALPHA_RECORDS: usize = 10;
pub const SHIU_FLAG_RATIO: f64 = 10.0;

/// `e^e`, below which `log log log x <= 0`.
pub fn gk_domain_start() -> f64 {
    E.powf(E)
}

/// Exponents `(a, b)` of `log log x` and `log log log x` in `G_k`.
pub fn gk_exponents(k: u32) -> (f64, f64) {
    let k = k as f64;
    let a = (k + 1.0) / (2.0 * k) * (k.powf(2.0 * k / (k + 1.0)) - 1.0);
    let b = (3.0 * k - 1.0) / (4.0 * k);
    (a, b)
}

/// `G_k(x) = (x log x)^{(k−1)/(2k)} (log log x)^a (log log log x)^{−b}`.
pub fn gk_threshold(k: u32, x: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::Domain(format!("G_k needs k >= 2, got {k}")));
    }
    if !(x > gk_domain_start()) {
        return Err(Error::Domain(format!("G_k needs x > e^e, got {x}")));
    }
    let (a, b) = gk_exponents(k);
    let l1 = x.ln();
    let l2 = l1.ln();
    let l3 = l2.ln();
    let kf = k as f64;
    Ok((x * l1).powf((kf - 1.0) / (2.0 * kf)) * l2.powf(a) * l3.powf(-b))
}

/// `G_2` written with its literal constants `(3/4)(2^{4/3} − 1)` and `5/8`.
pub fn g2_literal(x: f64) -> Result<f64> {
    if !(x > gk_domain_start()) {
        return Err(Error::Domain(format!("G_2 needs x > e^e, got {x}")));
    }
    let log2 = x.ln().ln();
    let log3 = log2.ln();
    Ok(
        (x * x.ln()).powf(0.25)
            * log2.powf(0.75 * (2f64.powf(4.0 / 3.0) - 1.0))
            * log3.powf(-0.625),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremaRecord {
    pub x: f64,
    pub delta_value: f64,
    /// `|Δ(x)| / x^{(k−1)/(2k)}`.
    pub ratio_power: f64,
    /// `|Δ(x)| / G_k(x)`; `None` for `x <= e^e`.
    pub ratio_g: Option<f64>,
    pub sign: i8,
    /// The value is the limit from the left at the integer `x`.
    pub left_limit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignRun {
    pub sign: i8,
    /// First and last sample point of the run.
    pub start: f64,
    pub end: f64,
}

impl SignRun {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub k: u32,
    pub x_max: u64,
    pub points: u64,
    /// Sample points where `Δ` was exactly zero; excluded from records.
    pub zeros: u64,
    pub top_by_power: Vec<ExtremaRecord>,
    pub top_by_g: Vec<ExtremaRecord>,
    /// Points where `|Δ|` exceeds every earlier sample.
    pub envelope: Vec<ExtremaRecord>,
    pub longest_sign_runs: Vec<SignRun>,
}

struct ChunkScan {
    points: u64,
    zeros: u64,
    top_power: Vec<ExtremaRecord>,
    top_g: Vec<ExtremaRecord>,
    envelope: Vec<ExtremaRecord>,
    runs: Vec<SignRun>,
}

fn by_power(a: &ExtremaRecord, b: &ExtremaRecord) -> Ordering {
    b.ratio_power
        .total_cmp(&a.ratio_power)
        .then(a.x.total_cmp(&b.x))
}

fn by_g(a: &ExtremaRecord, b: &ExtremaRecord) -> Ordering {
    let ga = a.ratio_g.unwrap_or(f64::NEG_INFINITY);
    let gb = b.ratio_g.unwrap_or(f64::NEG_INFINITY);
    gb.total_cmp(&ga).then(a.x.total_cmp(&b.x))
}

fn by_length(a: &SignRun, b: &SignRun) -> Ordering {
    b.length()
        .total_cmp(&a.length())
        .then(a.start.total_cmp(&b.start))
}

fn keep_top<T>(v: &mut Vec<T>, top: usize, cmp: impl Fn(&T, &T) -> Ordering) {
    v.sort_by(&cmp);
    v.truncate(top);
}

/// Scan `Δ_k` on `[1, x_max]`.
///
/// On each piece `[n, n+1)` the function is sampled at `n` (just after the
/// jump), at `n + 1/2` and in the limit `x → n+1` from the left, where it
/// is smallest; `x_max` itself is sampled at the end.
pub fn scan_extrema(ev: &DeltaEvaluator<'_>, x_max: u64, top: usize) -> Result<ScanResult> {
    if x_max < 1 {
        return Err(Error::Domain("x_max must be at least 1".into()));
    }
    ev.check_range(x_max as f64)?;
    let k = ev.k();
    let power = (k - 1) as f64 / (2 * k) as f64;
    let g_start = gk_domain_start();
    let table = ev.table();
    let record = |x: f64, d: f64, left_limit: bool| ExtremaRecord {
        x,
        delta_value: d,
        ratio_power: d.abs() / x.powf(power),
        ratio_g: (x > g_start).then(|| d.abs() / gk_threshold(k, x).unwrap()),
        sign: if d > 0.0 { 1 } else { -1 },
        left_limit,
    };

    let chunks = map_chunks(1, x_max + 1, SCAN_CHUNK, |lo, hi| {
        let mut out = ChunkScan {
            points: 0,
            zeros: 0,
            top_power: Vec::new(),
            top_g: Vec::new(),
            envelope: Vec::new(),
            runs: Vec::new(),
        };
        let mut best = f64::NEG_INFINITY;
        let mut summatory = table.summatory(lo - 1);
        let mut visit = |x: f64, d: f64, left: bool, out: &mut ChunkScan| {
            out.points += 1;
            if d == 0.0 {
                out.zeros += 1;
                return;
            }
            let r = record(x, d, left);
            if d.abs() > best {
                best = d.abs();
                out.envelope.push(r);
            }
            match out.runs.last_mut() {
                Some(run) if run.sign == r.sign => run.end = x,
                _ => out.runs.push(SignRun {
                    sign: r.sign,
                    start: x,
                    end: x,
                }),
            }
            out.top_power.push(r);
            out.top_g.push(r);
            if out.top_power.len() >= 8 * top.max(1) {
                keep_top(&mut out.top_power, top, by_power);
                keep_top(&mut out.top_g, top, by_g);
            }
        };
        for n in lo..hi {
            summatory += table.get(n) as u64;
            let xn = n as f64;
            visit(xn, ev.delta_on_piece(summatory, xn), false, &mut out);
            if n == x_max {
                break;
            }
            visit(
                xn + 0.5,
                ev.delta_on_piece(summatory, xn + 0.5),
                false,
                &mut out,
            );
            visit(
                xn + 1.0,
                ev.delta_on_piece(summatory, xn + 1.0),
                true,
                &mut out,
            );
        }
        keep_top(&mut out.top_power, top, by_power);
        keep_top(&mut out.top_g, top, by_g);
        out
    });

    let mut result = ScanResult {
        k,
        x_max,
        points: 0,
        zeros: 0,
        top_by_power: Vec::new(),
        top_by_g: Vec::new(),
        envelope: Vec::new(),
        longest_sign_runs: Vec::new(),
    };
    let mut best = f64::NEG_INFINITY;
    let mut runs: Vec<SignRun> = Vec::new();
    for c in chunks {
        result.points += c.points;
        result.zeros += c.zeros;
        result.top_by_power.extend(c.top_power);
        result.top_by_g.extend(c.top_g);
        for r in c.envelope {
            if r.delta_value.abs() > best {
                best = r.delta_value.abs();
                result.envelope.push(r);
            }
        }
        for (i, run) in c.runs.into_iter().enumerate() {
            match runs.last_mut() {
                Some(prev) if i == 0 && prev.sign == run.sign => prev.end = run.end,
                _ => runs.push(run),
            }
        }
    }
    keep_top(&mut result.top_by_power, top, by_power);
    result.top_by_g.retain(|r| r.ratio_g.is_some());
    keep_top(&mut result.top_by_g, top, by_g);
    keep_top(&mut runs, top, by_length);
    result.longest_sign_runs = runs;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub alpha: f64,
    pub intercept: f64,
    pub records_used: usize,
    pub lower_reference: f64,
    pub upper_reference: f64,
    /// Estimate outside `[0, 1/2]`.
    pub flagged: bool,
}

/// Slope of `log(running max |Δ|)` against `log x` over records at
/// `x >= x_min_fit`.
pub fn estimate_alpha(records: &[ExtremaRecord], x_min_fit: f64) -> Result<AlphaEstimate> {
    let mut pts: Vec<&ExtremaRecord> = records.iter().filter(|r| r.x >= x_min_fit).collect();
    if pts.len() < MIN_ALPHA_RECORDS {
        return Err(Error::InsufficientData(format!(
            "{} records at x >= {x_min_fit}; need {MIN_ALPHA_RECORDS}",
            pts.len()
        )));
    }
    pts.sort_by(|a, b| a.x.total_cmp(&b.x));
    let mut running = 0.0f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts
        .iter()
        .map(|r| {
            running = running.max(r.delta_value.abs());
            (r.x.ln(), running.ln())
        })
        .unzip();
    let (alpha, intercept) = linear_fit(&xs, &ys)
        .ok_or_else(|| Error::InsufficientData("records share a single x".into()))?;
    Ok(AlphaEstimate {
        alpha,
        intercept,
        records_used: pts.len(),
        lower_reference: 0.25,
        upper_reference: HUXLEY_ALPHA,
        flagged: !(0.0..=0.5).contains(&alpha),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiuResult {
    pub x: f64,
    pub h: f64,
    /// `Σ_{x < n <= x+h} d_k(n)`.
    pub sum: u64,
    /// `sum / (h log^{k−1} x)`.
    pub ratio: f64,
}

pub fn shiu_check(table: &DivisorTable, x: f64, h: f64) -> Result<ShiuResult> {
    if !(x > 1.0) {
        return Err(Error::Domain(format!("x = {x} must exceed 1")));
    }
    if !(h >= x.powf(0.1) && h <= x) {
        return Err(Error::Domain(format!(
            "need x^0.1 <= h <= x, got h = {h}, x = {x}"
        )));
    }
    let hi = (x + h).floor();
    if hi > table.limit() as f64 {
        return Err(Error::OutOfRange {
            value: x + h,
            limit: table.limit(),
        });
    }
    let sum = table.summatory(hi as u64) - table.summatory(x.floor() as u64);
    let ratio = sum as f64 / (h * x.ln().powi(table.k() as i32 - 1));
    Ok(ShiuResult { x, h, sum, ratio })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiuSweep {
    pub samples: Vec<ShiuResult>,
    pub max_ratio: f64,
    pub flagged: bool,
}

/// `count` random checks with `x` uniform in `[x_lo, x_hi]` and
/// `h = x^u`, `u` uniform in `[0.1, 1]`. Requires `2 x_hi` inside the table.
pub fn shiu_sweep(
    table: &DivisorTable,
    count: usize,
    x_lo: f64,
    x_hi: f64,
    seed: u64,
) -> Result<ShiuSweep> {
    if count == 0 {
        return Err(Error::EmptyDomain(
            "shiu_sweep needs at least one sample".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = move || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let samples = (0..count)
        .map(|_| {
            let x = x_lo + (x_hi - x_lo) * unit();
            let u = 0.1 + 0.9 * unit();
            shiu_check(table, x, x.powf(u))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_ratio = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    Ok(ShiuSweep {
        samples,
        max_ratio,
        flagged: max_ratio > SHIU_FLAG_RATIO,
    })
}
