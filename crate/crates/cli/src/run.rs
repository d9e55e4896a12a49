//! Experiment execution and report writing.
//!
//! Every experiment writes one or more CSV tables plus `<kind>.json`. CSV
//! content depends only on the configuration; the wall time and timestamp
//! live in the JSON report alone.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use divlab::counting::{self, bound_report, count_2l_tuples, count_quadruples, CountAlgo};
use divlab::moments::{
    fit_moment_constant_with_order, huxley_bound_check, interval_average, random_windows,
    short_interval_fourth_moment,
};
use divlab::omega::{
    estimate_alpha, g2_literal, gk_domain_start, gk_threshold, scan_extrema, shiu_sweep,
};
use divlab::summatory::floor_index;
use divlab::voronoi::truncation_error_profile;
use divlab::{main_term_coeffs, DeltaEvaluator, DivisorTable};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::cache::{cache_table, TableInfo};
use crate::config::{
    ExperimentConfig, ExperimentKind, ValidationError, DEFAULT_BUDGET, DEFAULT_ORDER,
    DEFAULT_SAMPLES, DEFAULT_SHIU_SAMPLES, DEFAULT_TOP,
};

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

/// `α = 1/4` is the conjectured exponent used for the k = 2 bound check.
const ALPHA_CONJECTURED: f64 = 0.25;
const ALPHA_FIT_FROM: f64 = 100.0;
const LEMMA1_X_MIN: f64 = 10.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Core(#[from] divlab::Error),
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("writing JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for bad input, 3 for resource, I/O and cache failures.
    pub fn exit_code(&self) -> i32 {
        use divlab::Error as E;
        match self {
            CliError::Validation(_) => 2,
            CliError::Core(
                E::Domain(_)
                | E::OutOfRange { .. }
                | E::EmptyDomain(_)
                | E::InsufficientData(_)
                | E::Unsupported(_)
                | E::Validation(_),
            ) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Replace corrupt cached tables instead of failing.
    pub rebuild_cache: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub csv_paths: Vec<PathBuf>,
    pub json_path: PathBuf,
    pub report: Value,
}

struct Output {
    dir: PathBuf,
    csv: Vec<PathBuf>,
}

impl Output {
    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        self.csv.push(path);
        Ok(())
    }
}

/// Validate `config`, run it and write its reports under `paths.out`.
pub fn run_experiment(config: &ExperimentConfig, opts: RunOptions) -> Result<RunOutcome, CliError> {
    config.validate()?;
    let start = Instant::now();
    fs::create_dir_all(&config.paths.out)?;
    let mut out = Output {
        dir: config.paths.out.clone(),
        csv: Vec::new(),
    };

    let table = match config.table_limit() {
        Some(limit) if config.kind() != ExperimentKind::Count => {
            let k = config.params.k.unwrap_or(2);
            Some(cache_table(
                k,
                limit,
                &config.paths.cache_dir,
                opts.rebuild_cache,
            )?)
        }
        _ => None,
    };
    let info: Option<TableInfo> = table.as_ref().map(|t| t.info.clone());
    let table = table.map(|t| t.table);

    let result = match config.kind() {
        ExperimentKind::Sieve => sieve(table.as_ref().unwrap(), &mut out)?,
        ExperimentKind::Delta => delta(config, table.as_ref().unwrap(), &mut out)?,
        ExperimentKind::Voronoi => voronoi(config, table.as_ref().unwrap(), &mut out)?,
        ExperimentKind::Moments => moments(config, table.as_ref().unwrap(), &mut out)?,
        ExperimentKind::ShortInterval => short_interval(config, table.as_ref().unwrap(), &mut out)?,
        ExperimentKind::Count => count(config, &mut out)?,
        ExperimentKind::Omega => omega(config, table.as_ref().unwrap(), &mut out)?,
        ExperimentKind::Shiu => shiu(config, table.as_ref().unwrap(), &mut out)?,
    };

    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let report = json!({
        "experiment": config.kind().name(),
        "library_version": LIBRARY_VERSION,
        "timestamp_unix": timestamp,
        "wall_time_seconds": start.elapsed().as_secs_f64(),
        "config": config,
        "table": info,
        "outputs": out.csv.iter().map(|p| file_name(p)).collect::<Vec<_>>(),
        "result": result,
    });
    let json_path = out.dir.join(format!("{}.json", config.kind().name()));
    fs::write(&json_path, serde_json::to_string_pretty(&report)? + "\n")?;
    Ok(RunOutcome {
        csv_paths: out.csv,
        json_path,
        report,
    })
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn evaluator(table: &DivisorTable) -> Result<DeltaEvaluator<'_>, CliError> {
    Ok(DeltaEvaluator::new(table, main_term_coeffs(table.k())?)?)
}

fn sieve(table: &DivisorTable, out: &mut Output) -> Result<Value, CliError> {
    #[derive(Serialize)]
    struct Row {
        n: u64,
        d_k: u32,
        summatory: u64,
    }
    let mut ns: Vec<u64> = std::iter::successors(Some(1u64), |&n| n.checked_mul(10))
        .take_while(|&n| n <= table.limit())
        .collect();
    if ns.last() != Some(&table.limit()) {
        ns.push(table.limit());
    }
    let rows: Vec<Row> = ns
        .iter()
        .map(|&n| Row {
            n,
            d_k: table.get(n),
            summatory: table.summatory(n),
        })
        .collect();
    out.csv("sieve.csv", &rows)?;
    Ok(json!({
        "k": table.k(),
        "limit": table.limit(),
        "max_value": table.values().iter().skip(1).copied().max(),
        "summatory_at_limit": table.summatory(table.limit()),
    }))
}

fn delta(
    config: &ExperimentConfig,
    table: &DivisorTable,
    out: &mut Output,
) -> Result<Value, CliError> {
    #[derive(Serialize)]
    struct Row {
        x: f64,
        summatory: u64,
        main_term: f64,
        delta: f64,
        normalized: f64,
    }
    let ev = evaluator(table)?;
    let k = table.k();
    let power = (k - 1) as f64 / (2 * k) as f64;
    let rows = config
        .params
        .x
        .iter()
        .map(|&x| {
            let d = ev.delta(x)?;
            Ok(Row {
                x,
                summatory: table.summatory(floor_index(x)),
                main_term: ev.poly().main_term(x),
                delta: d,
                normalized: d / x.powf(power),
            })
        })
        .collect::<Result<Vec<_>, divlab::Error>>()?;
    out.csv("delta.csv", &rows)?;
    Ok(json!({
        "main_term_coefficients": ev.poly().coeffs(),
        "provenance": ev.poly().provenance(),
        "points": rows.len(),
    }))
}

fn voronoi(
    config: &ExperimentConfig,
    table: &DivisorTable,
    out: &mut Output,
) -> Result<Value, CliError> {
    #[derive(Serialize)]
    struct Row {
        k: u32,
        x_base: f64,
        samples: usize,
        n_terms: u64,
        rms_error: f64,
        max_error: f64,
    }
    let ev = evaluator(table)?;
    let p = &config.params;
    let samples = p.samples.unwrap_or(DEFAULT_SAMPLES);
    let profile = truncation_error_profile(&ev, p.x[0], samples, &p.n, config.seed())?;
    let rows: Vec<Row> = profile
        .rows
        .iter()
        .map(|r| Row {
            k: profile.k,
            x_base: profile.x_base,
            samples,
            n_terms: r.n_terms,
            rms_error: r.rms_error,
            max_error: r.max_error,
        })
        .collect();
    out.csv("voronoi.csv", &rows)?;
    Ok(serde_json::to_value(&profile)?)
}

fn moments(
    config: &ExperimentConfig,
    table: &DivisorTable,
    out: &mut Output,
) -> Result<Value, CliError> {
    #[derive(Serialize)]
    struct Row {
        k: u32,
        m: u32,
        x: f64,
        integral: f64,
        normalized: f64,
    }
    let ev = evaluator(table)?;
    let p = &config.params;
    let m = p.m.unwrap();
    let order = p.order.unwrap_or(DEFAULT_ORDER);
    let fit = fit_moment_constant_with_order(&ev, m, &p.x, order)?;
    let rows: Vec<Row> = fit
        .residual_series
        .iter()
        .map(|&(x, norm)| Row {
            k: fit.k,
            m,
            x,
            integral: norm * x.powf(fit.exponent_fixed),
            normalized: norm,
        })
        .collect();
    out.csv("moments.csv", &rows)?;
    Ok(json!({ "fit": fit, "quadrature_order": order }))
}

fn short_interval(
    config: &ExperimentConfig,
    table: &DivisorTable,
    out: &mut Output,
) -> Result<Value, CliError> {
    #[derive(Serialize)]
    struct Row {
        k: u32,
        x: f64,
        h: f64,
        fourth_moment: f64,
        bound_first: f64,
        bound_second: f64,
        ratio_to_bound: f64,
        huxley_ratio: Option<f64>,
        conjectured_ratio: Option<f64>,
    }
    #[derive(Serialize)]
    struct AverageRow {
        x: f64,
        h: f64,
        delta: f64,
        average: f64,
        residual: f64,
        ratio: f64,
    }
    let ev = evaluator(table)?;
    let p = &config.params;
    let mut rows = Vec::new();
    for &x in &p.x {
        for &h in &p.h {
            let r = short_interval_fourth_moment(&ev, x, h)?;
            let hux = (table.k() == 2 && h >= x.sqrt())
                .then(|| huxley_bound_check(&ev, x, h, ALPHA_CONJECTURED))
                .transpose()?;
            rows.push(Row {
                k: r.k,
                x,
                h,
                fourth_moment: r.value,
                bound_first: r.bound_terms.0,
                bound_second: r.bound_terms.1,
                ratio_to_bound: r.value / (r.bound_terms.0 + r.bound_terms.1),
                huxley_ratio: hux.as_ref().map(|h| h.ratio_huxley),
                conjectured_ratio: hux.as_ref().map(|h| h.ratio_est),
            });
        }
    }
    out.csv("short_interval.csv", &rows)?;
    let max_ratio = rows.iter().map(|r| r.ratio_to_bound).fold(0.0, f64::max);

    let mut averages = Value::Null;
    if let Some(samples) = p.samples {
        let x_max = p.x.iter().copied().fold(0.0, f64::max);
        let windows = random_windows(samples, LEMMA1_X_MIN, x_max, 0.1, 0.5, config.seed());
        let lrows = windows
            .into_iter()
            .map(|(x, h)| {
                let a = interval_average(&ev, x, h)?;
                Ok(AverageRow {
                    x,
                    h,
                    delta: a.residual + a.average,
                    average: a.average,
                    residual: a.residual,
                    ratio: a.residual.abs() / (h * x.ln()),
                })
            })
            .collect::<Result<Vec<_>, divlab::Error>>()?;
        out.csv("interval_average.csv", &lrows)?;
        averages = json!({
            "samples": lrows.len(),
            "max_ratio": lrows.iter().map(|r| r.ratio).fold(0.0, f64::max),
        });
    }
    Ok(json!({ "max_ratio_to_bound": max_ratio, "interval_average": averages }))
}

fn count(config: &ExperimentConfig, out: &mut Output) -> Result<Value, CliError> {
    #[derive(Serialize)]
    struct Row {
        k: u32,
        l: u32,
        #[serde(rename = "N")]
        n: u64,
        delta: f64,
        count: u64,
        bound_main: f64,
        bound_diag: f64,
        ratio: f64,
        flagged_boundary_pairs: u64,
    }
    let p = &config.params;
    let k = p.k.unwrap();
    let l = p.l.unwrap_or(2);
    let algo = p.algo.unwrap_or(CountAlgo::SortedWindow);
    let budget = usize::try_from(p.budget.unwrap_or(DEFAULT_BUDGET)).unwrap_or(usize::MAX);
    let mut results = Vec::new();
    for &n in &p.n {
        let deltas = p
            .delta
            .iter()
            .copied()
            .chain(p.delta_power.iter().map(|&e| (n as f64).powf(-e)));
        for delta in deltas {
            let r = match (l, algo) {
                (2, CountAlgo::Naive) => count_quadruples(k, n, delta, CountAlgo::Naive)?,
                (2, _) if p.budget.is_none() => {
                    count_quadruples(k, n, delta, CountAlgo::SortedWindow)?
                }
                _ => count_2l_tuples(k, l, n, delta, budget)?,
            };
            results.push(r);
        }
    }
    let report = bound_report(&results)?;
    let rows: Vec<Row> = report
        .iter()
        .map(|r| Row {
            k: r.k,
            l: r.l,
            n: r.n,
            delta: r.delta,
            count: r.count,
            bound_main: r.bound_main,
            bound_diag: r.bound_diag,
            ratio: r.ratio,
            flagged_boundary_pairs: r.flagged_boundary_pairs,
        })
        .collect();
    out.csv("count.csv", &rows)?;
    let diagonal: Vec<Value> =
        p.n.iter()
            .map(|&n| json!({ "N": n, "ordered_diagonal": counting::diagonal_count(l, n) as u64 }))
            .collect();
    Ok(json!({
        "algorithm": algo,
        "rows": report,
        "diagonal_counts": diagonal,
    }))
}

fn omega(
    config: &ExperimentConfig,
    table: &DivisorTable,
    out: &mut Output,
) -> Result<Value, CliError> {
    #[derive(Serialize)]
    struct Row {
        x: f64,
        delta_value: f64,
        ratio_power: f64,
        #[serde(rename = "ratio_G")]
        ratio_g: Option<f64>,
        sign: i8,
        left_limit: bool,
    }
    let ev = evaluator(table)?;
    let p = &config.params;
    let x_max = p.x[0] as u64;
    let top = p.top.unwrap_or(DEFAULT_TOP);
    let scan = scan_extrema(&ev, x_max, top)?;
    let rows: Vec<Row> = scan
        .envelope
        .iter()
        .map(|r| Row {
            x: r.x,
            delta_value: r.delta_value,
            ratio_power: r.ratio_power,
            ratio_g: r.ratio_g,
            sign: r.sign,
            left_limit: r.left_limit,
        })
        .collect();
    out.csv("omega.csv", &rows)?;

    let alpha = match estimate_alpha(&scan.envelope, ALPHA_FIT_FROM) {
        Ok(a) => serde_json::to_value(a)?,
        Err(e) => json!({ "error": e.to_string() }),
    };
    // Relative gap between the general and literal forms of G_2.
    let g2_gap = (table.k() == 2).then(|| {
        scan.envelope
            .iter()
            .chain(&scan.top_by_power)
            .filter(|r| r.x > gk_domain_start())
            .map(|r| {
                let a = gk_threshold(2, r.x).unwrap();
                let b = g2_literal(r.x).unwrap();
                ((a - b) / b).abs()
            })
            .fold(0.0, f64::max)
    });
    Ok(json!({
        "points": scan.points,
        "zeros": scan.zeros,
        "top_by_power": scan.top_by_power,
        "top_by_g": scan.top_by_g,
        "longest_sign_runs": scan.longest_sign_runs,
        "alpha": alpha,
        "g2_forms_max_relative_gap": g2_gap,
    }))
}

fn shiu(
    config: &ExperimentConfig,
    table: &DivisorTable,
    out: &mut Output,
) -> Result<Value, CliError> {
    let p = &config.params;
    let samples = p.samples.unwrap_or(DEFAULT_SHIU_SAMPLES);
    let sweep = shiu_sweep(table, samples, p.x[0], p.x[1], config.seed())?;
    out.csv("shiu.csv", &sweep.samples)?;
    Ok(json!({
        "samples": sweep.samples.len(),
        "max_ratio": sweep.max_ratio,
        "flagged": sweep.flagged,
    }))
}
