//! Experiment configuration: one TOML file with `[experiment]`, `[params]`
//! and `[paths]` sections.
//!
//! ```toml
//! [experiment]
//! kind = "moments"
//! seed = 7
//!
//! [params]
//! k = 2
//! m = 4
//! x = [1e4, 1e5, 1e6, 1e7]
//!
//! [paths]
//! out = "out"
//! cache_dir = "cache"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use divlab::counting::{self, CountAlgo};
use divlab::moments::{MAX_MOMENT, MAX_ORDER, MIN_ORDER};
use divlab::sieve::{MAX_K, MAX_LIMIT};
use divlab::voronoi::MIN_PROFILE_SAMPLES;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 0x5eed;
pub const DEFAULT_SAMPLES: usize = 256;
pub const DEFAULT_TOP: usize = 10;
pub const DEFAULT_ORDER: usize = divlab::moments::DEFAULT_ORDER;
pub const DEFAULT_BUDGET: u64 = 1 << 30;
pub const DEFAULT_SHIU_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Sieve,
    Delta,
    Voronoi,
    Moments,
    ShortInterval,
    Count,
    Omega,
    Shiu,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sieve => "sieve",
            Self::Delta => "delta",
            Self::Voronoi => "voronoi",
            Self::Moments => "moments",
            Self::ShortInterval => "short-interval",
            Self::Count => "count",
            Self::Omega => "omega",
            Self::Shiu => "shiu",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// Numeric parameters. Which ones are required depends on the experiment;
/// see [`ExperimentConfig::validate`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<u32>,
    /// Evaluation points, moment endpoints, the Voronoï base `X`, the scan
    /// bound, or the `[x_lo, x_hi]` range of the Shiu sweep.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub h: Vec<f64>,
    /// Voronoï truncation lengths, or tuple-count sizes `N`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub delta: Vec<f64>,
    /// Windows given as `δ = N^{-p}`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub delta_power: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algo: Option<CountAlgo>,
    /// Bytes of half-sums kept in memory by the tuple counter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_cache")]
    pub cache_dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_cache() -> PathBuf {
    PathBuf::from("cache")
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            out: default_out(),
            cache_dir: default_cache(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub paths: Paths,
}

/// Every problem found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub violations: Vec<String>,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} configuration problem(s):", self.violations.len())?;
        for v in &self.violations {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationError {}

struct Checker<'a> {
    p: &'a Params,
    out: Vec<String>,
}

impl Checker<'_> {
    fn fail(&mut self, msg: impl Into<String>) {
        self.out.push(msg.into());
    }

    fn k(&mut self, lo: u32, hi: u32) {
        match self.p.k {
            None => self.fail("params.k is required"),
            Some(k) if !(lo..=hi).contains(&k) => {
                self.fail(format!("params.k = {k} must be in {lo}..={hi}"))
            }
            _ => {}
        }
    }

    fn xs(&mut self, min_len: usize, max_len: Option<usize>) {
        let x = &self.p.x;
        if x.len() < min_len {
            self.fail(format!(
                "params.x needs at least {min_len} value(s), got {}",
                x.len()
            ));
        }
        if let Some(max) = max_len {
            if x.len() > max {
                self.fail(format!(
                    "params.x takes at most {max} value(s), got {}",
                    x.len()
                ));
            }
        }
        for &v in x {
            if !(v.is_finite() && v >= 1.0 && v <= MAX_LIMIT as f64) {
                self.fail(format!("params.x value {v} must be in [1, {MAX_LIMIT}]"));
            }
        }
    }

    fn unused(&mut self, name: &str, present: bool) {
        if present {
            self.fail(format!("params.{name} is not used by this experiment"));
        }
    }
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            experiment: ExperimentSection {
                kind,
                seed: DEFAULT_SEED,
            },
            params: Params::default(),
            paths: Paths::default(),
        }
    }

    pub fn kind(&self) -> ExperimentKind {
        self.experiment.kind
    }

    pub fn seed(&self) -> u64 {
        self.experiment.seed
    }

    pub fn from_toml(text: &str) -> Result<Self, ValidationError> {
        toml::from_str(text).map_err(|e| ValidationError {
            violations: vec![format!("cannot parse configuration: {}", e.message())],
        })
    }

    pub fn load(path: &Path) -> Result<Self, ValidationError> {
        let text = std::fs::read_to_string(path).map_err(|e| ValidationError {
            violations: vec![format!("cannot read {}: {e}", path.display())],
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable in TOML")
    }

    /// Check every constraint and report all violations at once.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let p = &self.params;
        let mut c = Checker { p, out: Vec::new() };
        use ExperimentKind::*;
        let kind = self.kind();

        if let Some(limit) = p.limit {
            if !(1..=MAX_LIMIT).contains(&limit) {
                c.fail(format!("params.limit = {limit} must be in 1..={MAX_LIMIT}"));
            }
        }
        if let Some(order) = p.order {
            if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
                c.fail(format!(
                    "params.order = {order} must be in {MIN_ORDER}..={MAX_ORDER}"
                ));
            }
        }
        if kind != Moments {
            c.unused("order", p.order.is_some());
            c.unused("m", p.m.is_some());
        }
        if kind != Count {
            c.unused("l", p.l.is_some());
            c.unused("delta", !p.delta.is_empty());
            c.unused("delta_power", !p.delta_power.is_empty());
            c.unused("algo", p.algo.is_some());
            c.unused("budget", p.budget.is_some());
        }
        if kind != ShortInterval {
            c.unused("h", !p.h.is_empty());
        }
        if !matches!(kind, Voronoi | Count) {
            c.unused("n", !p.n.is_empty());
        }
        if !matches!(kind, Voronoi | ShortInterval | Shiu) {
            c.unused("samples", p.samples.is_some());
        }
        if kind != Omega {
            c.unused("top", p.top.is_some());
        }

        match kind {
            Sieve => {
                c.k(1, MAX_K);
                if p.limit.is_none() {
                    c.fail("params.limit is required");
                }
                c.unused("x", !p.x.is_empty());
            }
            Delta => {
                c.k(2, 4);
                c.xs(1, None);
            }
            Voronoi => {
                c.k(2, 4);
                c.xs(1, Some(1));
                if p.n.is_empty() {
                    c.fail("params.n (truncation lengths) is required");
                }
                if p.n.contains(&0) {
                    c.fail("params.n values must be at least 1");
                }
                if let Some(s) = p.samples {
                    if s < MIN_PROFILE_SAMPLES {
                        c.fail(format!(
                            "params.samples = {s} must be at least {MIN_PROFILE_SAMPLES}"
                        ));
                    }
                }
            }
            Moments => {
                c.k(2, 4);
                match p.m {
                    None => c.fail("params.m is required"),
                    Some(m) if !(1..=MAX_MOMENT).contains(&m) => {
                        c.fail(format!("params.m = {m} must be in 1..={MAX_MOMENT}"))
                    }
                    _ => {}
                }
                c.xs(4, None);
                if p.x.windows(2).any(|w| w[1] <= w[0]) {
                    c.fail("params.x must be strictly increasing");
                }
                if p.x.first().is_some_and(|&v| v <= 1.0) {
                    c.fail("params.x values must exceed 1");
                }
            }
            ShortInterval => {
                c.k(2, 4);
                c.xs(1, None);
                if p.h.is_empty() {
                    c.fail("params.h is required");
                }
                for &x in &p.x {
                    for &h in &p.h {
                        if !(h >= 1.0 && h <= x / 2.0) {
                            c.fail(format!("H = {h} must satisfy 1 <= H <= X/2 for X = {x}"));
                        }
                    }
                }
            }
            Count => {
                match p.k {
                    None => c.fail("params.k is required"),
                    Some(k) if !(1..=MAX_K).contains(&k) => {
                        c.fail(format!("params.k = {k} must be in 1..={MAX_K}"))
                    }
                    _ => {}
                }
                if let Some(l) = p.l {
                    if l != 2 && l != 3 {
                        c.fail(format!("params.l = {l} must be 2 or 3"));
                    }
                }
                if p.n.is_empty() {
                    c.fail("params.n (tuple sizes N) is required");
                }
                for &n in &p.n {
                    if !(3..=counting::MAX_N).contains(&n) {
                        c.fail(format!(
                            "params.n value {n} must be in 3..={}",
                            counting::MAX_N
                        ));
                    }
                }
                if p.delta.is_empty() && p.delta_power.is_empty() {
                    c.fail("params.delta or params.delta_power is required");
                }
                for &d in &p.delta {
                    if !(d > 0.0 && d.is_finite()) {
                        c.fail(format!("params.delta value {d} must be positive"));
                    }
                }
                for &e in &p.delta_power {
                    if !e.is_finite() {
                        c.fail(format!("params.delta_power value {e} must be finite"));
                    }
                }
                if p.algo == Some(CountAlgo::Naive) {
                    if p.l.unwrap_or(2) != 2 {
                        c.fail("the naive algorithm counts quadruples only (l = 2)");
                    }
                    if p.n.iter().any(|&n| n > counting::NAIVE_MAX_N) {
                        c.fail(format!(
                            "the naive algorithm needs N <= {}",
                            counting::NAIVE_MAX_N
                        ));
                    }
                }
            }
            Omega => {
                c.k(2, 4);
                c.xs(1, Some(1));
                if p.x.first().is_some_and(|v| v.fract() != 0.0) {
                    c.fail("params.x (scan bound) must be an integer");
                }
                if p.top == Some(0) {
                    c.fail("params.top must be at least 1");
                }
            }
            Shiu => {
                if let Some(k) = p.k {
                    if !(2..=MAX_K).contains(&k) {
                        c.fail(format!("params.k = {k} must be in 2..={MAX_K}"));
                    }
                }
                c.xs(2, Some(2));
                if p.x.len() == 2 && !(p.x[0] > 1.0 && p.x[0] <= p.x[1]) {
                    c.fail("params.x = [x_lo, x_hi] needs 1 < x_lo <= x_hi");
                }
                if p.samples == Some(0) {
                    c.fail("params.samples must be at least 1");
                }
            }
        }

        if let (Some(limit), Some(need)) = (p.limit, self.required_limit()) {
            if limit < need {
                c.fail(format!(
                    "params.limit = {limit} is below the {need} this experiment needs"
                ));
            }
        }
        if self.required_limit().is_some_and(|n| n > MAX_LIMIT) {
            c.fail(format!("the experiment needs a table beyond {MAX_LIMIT}"));
        }

        if c.out.is_empty() {
            Ok(())
        } else {
            Err(ValidationError { violations: c.out })
        }
    }

    /// Smallest table limit the experiment can run on; `None` when no table
    /// is needed or the parameters are too incomplete to tell.
    pub fn required_limit(&self) -> Option<u64> {
        let p = &self.params;
        let max_x = p.x.iter().copied().fold(f64::NAN, f64::max);
        let ceil = |v: f64| (v.is_finite()).then(|| v.ceil().max(1.0) as u64);
        match self.kind() {
            ExperimentKind::Sieve => p.limit,
            ExperimentKind::Delta | ExperimentKind::Moments | ExperimentKind::Omega => ceil(max_x),
            ExperimentKind::Voronoi => {
                let n_max = p.n.iter().copied().max().unwrap_or(1);
                ceil(2.0 * max_x).map(|v| v.max(n_max))
            }
            ExperimentKind::ShortInterval => {
                // Random averaging windows reach X + √X.
                let h_max = p.h.iter().copied().fold(0.0, f64::max);
                let reach = if p.samples.is_some() {
                    h_max.max(max_x.sqrt())
                } else {
                    h_max
                };
                ceil(max_x + reach)
            }
            ExperimentKind::Shiu => ceil(2.0 * max_x),
            ExperimentKind::Count => None,
        }
    }

    /// Table limit actually used: the explicit `limit` or the requirement.
    pub fn table_limit(&self) -> Option<u64> {
        self.params.limit.or_else(|| self.required_limit())
    }
}
