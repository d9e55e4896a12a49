//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so each criterion reports its measured
//! numbers and runtime. The process exits non-zero if any criterion fails.

use std::collections::HashMap;
use std::fs;
use std::time::{Duration, Instant};

use divlab::counting::{
    count_2l_naive, count_2l_tuples, count_quadruples, diagonal_count, CountAlgo,
};
use divlab::main_term::{residue_coeffs, riesz_fit};
use divlab::moments::{
    fit_moment_constant, interval_average, random_windows, short_interval_fourth_moment,
};
use divlab::omega::{estimate_alpha, g2_literal, gk_threshold, scan_extrema};
use divlab::series::{dk_squared_series, mean_square_prefactor, EULER_PRIME_BOUND};
use divlab::summatory::{divisor_summatory, piltz3_summatory};
use divlab::voronoi::truncation_error_profile;
use divlab::{main_term_coeffs, sieve_dk, DeltaEvaluator, DivisorTable};
use divlab_cli::{run_experiment, ExperimentConfig, ExperimentKind, RunOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_611;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn criterion(
    id: u32,
    title: &str,
    budget: Option<Duration>,
    failures: &mut Vec<u32>,
    body: impl FnOnce() -> Verdict,
) {
    let start = Instant::now();
    let v = body();
    let elapsed = start.elapsed();
    let in_time = budget.is_none_or(|b| elapsed <= b);
    let pass = v.pass && in_time;
    let budget_note = match budget {
        Some(b) if !in_time => format!(", over the {:.0} s budget", b.as_secs_f64()),
        Some(b) => format!(", budget {:.0} s", b.as_secs_f64()),
        None => String::new(),
    };
    println!(
        "{} C{id} {title}: {} [{:.1} s{budget_note}]",
        if pass { "PASS" } else { "FAIL" },
        v.detail,
        elapsed.as_secs_f64()
    );
    if !pass {
        failures.push(id);
    }
}

/// `d_k(n)` by recursion over divisors found with trial division.
fn dk_by_enumeration(k: u32, n: u64, memo: &mut HashMap<(u32, u64), u64>) -> u64 {
    if k == 1 || n == 1 {
        return 1;
    }
    if let Some(&v) = memo.get(&(k, n)) {
        return v;
    }
    let mut total = 0;
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            total += dk_by_enumeration(k - 1, n / d, memo);
            if d * d != n {
                total += dk_by_enumeration(k - 1, d, memo);
            }
        }
        d += 1;
    }
    memo.insert((k, n), total);
    total
}

fn evaluator(table: &DivisorTable) -> DeltaEvaluator<'_> {
    DeltaEvaluator::new(table, main_term_coeffs(table.k()).unwrap()).unwrap()
}

fn c1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut mismatches = 0u64;
    for k in [2, 3, 4] {
        let t = sieve_dk(k, 1_000_000).unwrap();
        let mut memo = HashMap::new();
        for n in 1..=10_000 {
            mismatches += (t.get(n) as u64 != dk_by_enumeration(k, n, &mut memo)) as u64;
        }
        for _ in 0..1000 {
            let n = rng.random_range(1..=1_000_000u64);
            mismatches += (t.get(n) as u64 != dk_by_enumeration(k, n, &mut HashMap::new())) as u64;
        }
    }
    let t2 = sieve_dk(2, 1_000_000).unwrap();
    let hyper2 = (1..=1_000_000u64)
        .filter(|&n| divisor_summatory(n) != t2.summatory(n))
        .count();
    let t3 = sieve_dk(3, 100_000).unwrap();
    let hyper3 = (1..=100_000u64)
        .filter(|&n| piltz3_summatory(n) != t3.summatory(n))
        .count();
    verdict(
        mismatches == 0 && hyper2 == 0 && hyper3 == 0,
        format!(
            "sieve vs enumeration mismatches {mismatches} (k=2,3,4; n<=1e4 and 1000 random n<=1e6); \
             hyperbola vs prefix mismatches k=2 {hyper2}/1e6, k=3 {hyper3}/1e5"
        ),
    )
}

fn c2() -> Verdict {
    const BAND: f64 = 8.0;
    const DRIFT: f64 = 0.05;
    let t = sieve_dk(2, 10_000_000).unwrap();
    let ev = evaluator(&t);
    let mut worst = 0.0f64;
    let mut decades = Vec::new();
    for j in 3..7 {
        let (lo, hi) = (10u64.pow(j), 10u64.pow(j + 1));
        let mut s = t.summatory(lo - 1);
        let (mut sq, mut cnt) = (0.0, 0.0);
        for n in lo..hi {
            s += t.get(n) as u64;
            let xn = n as f64;
            for x in [xn, xn + 0.5, xn + 1.0] {
                worst = worst.max(ev.delta_on_piece(s, x).abs() / x.powf(0.25));
            }
            let r = ev.delta_on_piece(s, xn + 0.5) / (xn + 0.5).powf(0.25);
            sq += r * r;
            cnt += 1.0;
        }
        decades.push(((lo as f64 * hi as f64).sqrt(), (sq / cnt).sqrt()));
    }
    let (xs, rms): (Vec<f64>, Vec<f64>) = decades.iter().copied().unzip();
    let drift = divlab::stats::log_log_slope(&xs, &rms).unwrap();

    let residue = residue_coeffs(3);
    let fitted = riesz_fit(&sieve_dk(3, 1 << 20).unwrap(), 3, 100).unwrap();
    let rel = residue
        .iter()
        .zip(&fitted)
        .map(|(a, b)| ((a - b) / a).abs())
        .fold(0.0, f64::max);
    verdict(
        worst < BAND && drift.abs() <= DRIFT && rel < 5e-7,
        format!(
            "k=2 max |Δ|/x^(1/4) on [1e3,1e7] = {worst:.3} (band {BAND}), decade RMS {} slope {drift:+.4} (|·|<={DRIFT}); \
             k=3 residue vs least-squares max rel diff {rel:.2e} (<5e-7)",
            rms.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join("/")
        ),
    )
}

fn c3() -> Verdict {
    let ns = [16, 64, 256, 1024];
    let mut parts = Vec::new();
    let mut ok = true;
    for (k, target, tol) in [(2u32, -0.5, 0.15), (3, -0.33, 0.2)] {
        let t = sieve_dk(k, 200_000).unwrap();
        let ev = evaluator(&t);
        let p = truncation_error_profile(&ev, 1e5, 256, &ns, SEED).unwrap();
        let slope = p.fitted_slope.unwrap();
        ok &= (slope - target).abs() <= tol;
        parts.push(format!(
            "k={k} RMS {} slope {slope:+.3} (target {target}±{tol})",
            p.rows
                .iter()
                .map(|r| format!("{:.3}", r.rms_error))
                .collect::<Vec<_>>()
                .join("/")
        ));
    }
    verdict(ok, parts.join("; "))
}

fn c4() -> Verdict {
    let t = sieve_dk(3, 10_000_000).unwrap();
    let series = dk_squared_series(&t, EULER_PRIME_BOUND).unwrap();
    let target = mean_square_prefactor(3) * series.total;
    let ev = evaluator(&t);
    let fit = fit_moment_constant(&ev, 2, &[1e3, 1e4, 1e5, 1e6]).unwrap();
    let values: Vec<f64> = fit.residual_series[1..].iter().map(|&(_, v)| v).collect();
    let first_gap = (values[0] - target).abs();
    let last_gap = (values[2] - target).abs();
    let rel = last_gap / target;
    verdict(
        rel <= 0.30 && last_gap < first_gap,
        format!(
            "normalised ∫Δ₃²/X^(5/3) at 1e4/1e5/1e6 = {:.2}/{:.2}/{:.2}; series value {target:.2} \
             (partial sum {:.1} + tail {:.1}); final gap {:.1}% (<=30%), gap shrinking {}",
            values[0],
            values[1],
            values[2],
            series.partial_sum,
            series.tail,
            100.0 * rel,
            last_gap < first_gap
        ),
    )
}

fn c5() -> Verdict {
    let t = sieve_dk(2, 10_000_000).unwrap();
    let ev = evaluator(&t);
    let fit = fit_moment_constant(&ev, 4, &[1e4, 1e5, 1e6, 1e7]).unwrap();
    let v: Vec<f64> = fit.residual_series[1..].iter().map(|&(_, v)| v).collect();
    let change = (v[2] - v[1]).abs() / v[1];
    verdict(
        change < 0.25,
        format!(
            "∫Δ⁴/X² at 1e5/1e6/1e7 = {:.4}/{:.4}/{:.4}; last change {:.1}% (<25%)",
            v[0],
            v[1],
            v[2],
            100.0 * change
        ),
    )
}

fn c6() -> Verdict {
    let x = 1e7f64;
    let t = sieve_dk(2, 10_100_000).unwrap();
    let ev = evaluator(&t);
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for h in [1e3, 1e4, 1e5] {
        let r = short_interval_fourth_moment(&ev, x, h).unwrap();
        let bound = 100.0 * x.ln().powi(3) * (h * x + x.powf(1.6) * h.powf(0.2));
        worst = worst.max(r.value / bound);
        parts.push(format!(
            "H={h:.0e}: {:.3e} ({:.2e} of bound)",
            r.value,
            r.value / bound
        ));
    }
    verdict(worst <= 1.0, parts.join(", "))
}

fn c7() -> Verdict {
    let t = sieve_dk(2, 1_001_000).unwrap();
    let ev = evaluator(&t);
    let windows = random_windows(100, 10.0, 1e6, 0.1, 0.5, SEED);
    let mut worst: f64 = 0.0;
    for (x, h) in windows {
        let a = interval_average(&ev, x, h).unwrap();
        worst = worst.max(a.residual.abs() / (h * x.ln()));
    }
    verdict(
        worst <= 10.0,
        format!("max |Δ(X) − average|/(H log X) over 100 windows = {worst:.4} (<=10)"),
    )
}

fn c8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut disagreements = 0;
    let mut tested = 0;
    for i in 0..20 {
        let k = rng.random_range(2..=4u32);
        let n = if i < 4 {
            64
        } else {
            rng.random_range(3..=64u64)
        };
        let delta = 10f64.powf(rng.random_range(-9.0..0.0));
        let a = count_quadruples(k, n, delta, CountAlgo::Naive).unwrap();
        let b = count_quadruples(k, n, delta, CountAlgo::SortedWindow).unwrap();
        disagreements += (a != b) as u32;
        tested += 1;
    }
    let mut worst = 0.0f64;
    for k in [2u32, 3] {
        for n in [64u64, 128, 256] {
            for e in [1, 2, 3] {
                let delta = (n as f64).powi(-e);
                let r = count_quadruples(k, n, delta, CountAlgo::SortedWindow).unwrap();
                worst = worst.max(r.sum_ratio());
            }
        }
    }
    // Square roots have exact non-diagonal ties (6 + 8 = 7 + 7), so the
    // diagonal limit is checked with cube roots.
    let mut limit_ok = true;
    let mut limits = Vec::new();
    for n in [64u64, 128, 256] {
        let r = count_quadruples(3, n, 1e-20, CountAlgo::SortedWindow).unwrap();
        limit_ok &= r.count as u128 == diagonal_count(2, n);
        limits.push(format!("{}", r.count));
    }
    let k2_extra = count_quadruples(2, 256, 1e-20, CountAlgo::SortedWindow)
        .unwrap()
        .count as u128
        - diagonal_count(2, 256);
    verdict(
        disagreements == 0 && worst <= 8.0 && limit_ok,
        format!(
            "naive = sorted on {}/{tested} random (k, N<=64, δ); max count/(N⁴δ+N²) = {worst:.3} (<=8, k=2,3); \
             δ→0 counts k=3 {} = 2N²−N: {limit_ok}; k=2 N=256 has {k2_extra} extra exact-tie pairs",
            tested - disagreements,
            limits.join("/")
        ),
    )
}

fn c9() -> Verdict {
    let mut agree = true;
    let mut parts = Vec::new();
    for (k, delta) in [(2u32, 1e-12), (2, 20f64.powi(-3)), (3, 20f64.powi(-2))] {
        let naive = count_2l_naive(k, 3, 20, delta).unwrap();
        let need = 20 * 21 / 2 * divlab::counting::ENTRY_BYTES;
        let chunked = count_2l_tuples(k, 3, 20, delta, need).unwrap();
        agree &= naive.count == chunked.count;
        parts.push(format!(
            "k={k} δ={delta:.1e}: {}/{}",
            naive.count, chunked.count
        ));
    }
    let r = count_2l_tuples(3, 3, 64, 64f64.powi(-3), 64 << 20).unwrap();
    verdict(
        agree,
        format!(
            "N=20 naive/chunked {}; N=64 k=3 δ=N⁻³ count {} ratio count/(N⁶δ+N³) = {:.3} (reported only)",
            parts.join(", "),
            r.count,
            r.sum_ratio()
        ),
    )
}

fn c10() -> Verdict {
    let t = sieve_dk(2, 1_000_000).unwrap();
    let ev = evaluator(&t);
    let scan = scan_extrema(&ev, 1_000_000, 10).unwrap();
    let best = scan.top_by_power[0];
    let alpha = estimate_alpha(&scan.envelope, 100.0).unwrap();
    let mut gap = 0.0f64;
    let grid = (0..=10_000).map(|i| 16.0 * (1e6f64 / 16.0).powf(i as f64 / 10_000.0));
    let record_xs = scan
        .envelope
        .iter()
        .chain(&scan.top_by_power)
        .map(|r| r.x)
        .filter(|&x| x > 16.0);
    for x in grid.chain(record_xs) {
        let (a, b) = (gk_threshold(2, x).unwrap(), g2_literal(x).unwrap());
        gap = gap.max(((a - b) / b).abs());
    }
    let ok = best.ratio_power > 1.0 && gap <= 1e-12 && (0.2..=0.35).contains(&alpha.alpha);
    verdict(
        ok,
        format!(
            "max |Δ|/x^(1/4) = {:.3} at x = {} (>1); G₂ forms max rel gap {gap:.1e} (<=1e-12); \
             α ≈ {:.4} from {} records (in [0.2, 0.35]; 1/4 = 0.25, 131/416 = {:.4})",
            best.ratio_power, best.x, alpha.alpha, alpha.records_used, alpha.upper_reference
        ),
    )
}

fn c11() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let kinds = [
        ExperimentKind::Sieve,
        ExperimentKind::Delta,
        ExperimentKind::Voronoi,
        ExperimentKind::Moments,
        ExperimentKind::ShortInterval,
        ExperimentKind::Count,
        ExperimentKind::Omega,
        ExperimentKind::Shiu,
    ];
    let mut identical = 0;
    let mut files = 0;
    for kind in kinds {
        let mut outputs = Vec::new();
        for run in ["a", "b"] {
            let mut c = ExperimentConfig::new(kind);
            c.experiment.seed = SEED;
            c.paths.out = dir.path().join(run);
            c.paths.cache_dir = cache.clone();
            let p = &mut c.params;
            p.k = Some(if kind == ExperimentKind::Count { 3 } else { 2 });
            match kind {
                ExperimentKind::Sieve => p.limit = Some(100_000),
                ExperimentKind::Delta => p.x = vec![10.5, 1e3, 12_345.678, 1e5],
                ExperimentKind::Voronoi => {
                    p.x = vec![1e4];
                    p.n = vec![16, 64, 256];
                    p.samples = Some(64);
                }
                ExperimentKind::Moments => {
                    p.m = Some(3);
                    p.x = vec![1e2, 1e3, 1e4, 1e5];
                }
                ExperimentKind::ShortInterval => {
                    p.x = vec![1e5];
                    p.h = vec![1e3, 1e4];
                    p.samples = Some(50);
                }
                ExperimentKind::Count => {
                    p.l = Some(3);
                    p.n = vec![16, 24];
                    p.delta_power = vec![2.0, 3.0];
                    p.budget = Some(8192);
                }
                ExperimentKind::Omega => {
                    p.x = vec![1e5];
                    p.top = Some(10);
                }
                ExperimentKind::Shiu => {
                    p.x = vec![1e3, 1e5];
                    p.samples = Some(200);
                }
            }
            let out = run_experiment(&c, RunOptions::default()).unwrap();
            outputs.push(
                out.csv_paths
                    .iter()
                    .map(|p| fs::read(p).unwrap())
                    .collect::<Vec<_>>(),
            );
        }
        files += outputs[0].len();
        identical += outputs[0]
            .iter()
            .zip(&outputs[1])
            .filter(|(a, b)| a == b)
            .count();
    }
    verdict(
        identical == files,
        format!(
            "{identical}/{files} CSV files byte-identical across two runs of all 8 experiments"
        ),
    )
}

fn main() {
    // `cargo test -- --list` and filters: nothing to enumerate here.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut failures = Vec::new();
    let secs = Duration::from_secs;
    criterion(1, "divisor exactness", Some(secs(30)), &mut failures, c1);
    criterion(2, "main term", None, &mut failures, c2);
    criterion(
        3,
        "Voronoi truncation slope",
        Some(secs(300)),
        &mut failures,
        c3,
    );
    criterion(4, "k=3 mean-square constant", None, &mut failures, c4);
    criterion(5, "fourth-moment normalisation", None, &mut failures, c5);
    criterion(
        6,
        "short-interval fourth moment",
        Some(secs(600)),
        &mut failures,
        c6,
    );
    criterion(7, "interval-average approximation", None, &mut failures, c7);
    criterion(
        8,
        "root-sum quadruple counts",
        Some(secs(120)),
        &mut failures,
        c8,
    );
    criterion(9, "sextuple counts", None, &mut failures, c9);
    criterion(10, "omega scan", None, &mut failures, c10);
    criterion(11, "determinism", None, &mut failures, c11);
    println!("acceptance: {} of 11 criteria passed", 11 - failures.len());
    if !failures.is_empty() {
        println!("failed: {failures:?}");
        std::process::exit(1);
    }
}
