//! Counting tuples whose signed sums of `k`-th roots nearly cancel.
//!
//! For `n_i` in `(N, 2N]` we count ordered `2l`-tuples with
//!
//! ```text
//! | n_1^{1/k} + … + n_l^{1/k} − n_{l+1}^{1/k} − … − n_{2l}^{1/k} | < δ N^{1/k}.
//! ```
//!
//! Half-tuple sums are formed once per multiset (indices nondecreasing, added
//! in that order) with the number of orderings attached, so the two halves
//! of every ordered tuple map to bit-identical double-double values. The
//! sorted sums are swept once with a window deque. Pairs whose difference
//! lies within [`BOUNDARY_EPS`] of the window edge are counted by the strict
//! inequality as computed but reported in `flagged`.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};
use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Seek, SeekFrom, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::stats::log_log_slope;

pub const BOUNDARY_EPS: f64 = 1e-24;
pub const NAIVE_MAX_N: u64 = 64;
/// Sextuple brute force is `N⁶`; keep it to oracle sizes.
pub const NAIVE_MAX_N_L3: u64 = 24;
pub const MAX_N: u64 = 1 << 16;

/// Size in bytes of one stored half-sum (value plus multiplicity).
pub const ENTRY_BYTES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountAlgo {
    Naive,
    SortedWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub k: u32,
    pub l: u32,
    #[serde(rename = "N")]
    pub n: u64,
    pub delta: f64,
    pub count: u64,
    /// `N^{2l} δ`.
    pub bound_main: f64,
    /// `N^l`.
    pub bound_diag: f64,
    /// `δ N^{1/k}`.
    pub window: f64,
    /// Ordered tuple pairs within [`BOUNDARY_EPS`] of the window edge.
    pub flagged: u64,
}

impl CountResult {
    fn new(k: u32, l: u32, n: u64, delta: f64, count: u128, flagged: u128) -> Result<Self> {
        let to_u64 = |v: u128| {
            u64::try_from(v).map_err(|_| Error::Overflow(format!("tuple count {v} exceeds u64")))
        };
        let nf = n as f64;
        Ok(Self {
            k,
            l,
            n,
            delta,
            count: to_u64(count)?,
            bound_main: nf.powi(2 * l as i32) * delta,
            bound_diag: nf.powi(l as i32),
            window: delta * nf.powf(1.0 / k as f64),
            flagged: to_u64(flagged)?,
        })
    }

    /// `count / max(bound_main, bound_diag)`.
    pub fn ratio(&self) -> f64 {
        self.count as f64 / self.bound_main.max(self.bound_diag)
    }

    /// `count / (bound_main + bound_diag)`.
    pub fn sum_ratio(&self) -> f64 {
        self.count as f64 / (self.bound_main + self.bound_diag)
    }
}

/// Ordered diagonal count: pairs of ordered `l`-tuples that are
/// rearrangements of each other, `Σ_multisets (orderings)²`.
pub fn diagonal_count(l: u32, n: u64) -> u128 {
    let n = n as u128;
    match l {
        2 => 2 * n * n - n,
        3 => {
            let distinct = n * (n - 1) * (n - 2) / 6;
            distinct * 36 + n * (n - 1) * 9 + n
        }
        _ => panic!("diagonal_count: l must be 2 or 3"),
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    sum: DoubleDouble,
    mult: u64,
}

fn validate(k: u32, l: u32, n: u64, delta: f64) -> Result<()> {
    if !(1..=crate::sieve::MAX_K).contains(&k) {
        return Err(Error::Domain(format!(
            "k = {k} outside 1..={}",
            crate::sieve::MAX_K
        )));
    }
    if l != 2 && l != 3 {
        return Err(Error::Domain(format!(
            "half-tuple size l = {l} must be 2 or 3"
        )));
    }
    if n < 3 {
        return Err(Error::Domain(format!("N = {n} must be at least 3")));
    }
    if n > MAX_N {
        return Err(Error::Domain(format!("N = {n} exceeds {MAX_N}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!(
            "δ = {delta} must be positive and finite"
        )));
    }
    Ok(())
}

/// `n^{1/k}` for `n` in `(N, 2N]`, index 0 is `N + 1`.
fn roots(k: u32, n: u64) -> Vec<DoubleDouble> {
    (n + 1..=2 * n)
        .into_par_iter()
        .map(|v| DoubleDouble::from_u64(v).root(k))
        .collect()
}

fn window(k: u32, n: u64, delta: f64) -> DoubleDouble {
    DoubleDouble::from_u64(n).root(k).mul_f64(delta)
}

/// Half-sums whose smallest index is `i`.
fn block(roots: &[DoubleDouble], l: u32, i: usize) -> Vec<Entry> {
    let n = roots.len();
    let mut out = Vec::with_capacity(block_len(n as u64, l, i as u64) as usize);
    match l {
        2 => {
            for j in i..n {
                let mult = if i == j { 1 } else { 2 };
                out.push(Entry {
                    sum: roots[i] + roots[j],
                    mult,
                });
            }
        }
        _ => {
            for j in i..n {
                let pair = roots[i] + roots[j];
                for m in j..n {
                    let mult = match (i == j, j == m) {
                        (true, true) => 1,
                        (false, false) => 6,
                        _ => 3,
                    };
                    out.push(Entry {
                        sum: pair + roots[m],
                        mult,
                    });
                }
            }
        }
    }
    out
}

fn block_len(n: u64, l: u32, i: u64) -> u64 {
    let r = n - i;
    if l == 2 {
        r
    } else {
        r * (r + 1) / 2
    }
}

fn sorted_run(roots: &[DoubleDouble], l: u32, first: usize, last: usize) -> Vec<Entry> {
    let blocks: Vec<Vec<Entry>> = (first..last)
        .into_par_iter()
        .map(|i| block(roots, l, i))
        .collect();
    let mut run: Vec<Entry> = blocks.into_iter().flatten().collect();
    run.par_sort_unstable_by(|a, b| a.sum.total_cmp(&b.sum));
    // Merge bit-identical values.
    let mut out: Vec<Entry> = Vec::with_capacity(run.len());
    for e in run {
        match out.last_mut() {
            Some(last) if last.sum == e.sum => last.mult += e.mult,
            _ => out.push(e),
        }
    }
    out
}

/// Window sweep over sums arriving in ascending order.
struct Sweep {
    window: DoubleDouble,
    deque: VecDeque<Entry>,
    deque_mult: u128,
    count: u128,
    flagged: u128,
}

impl Sweep {
    fn new(window: DoubleDouble) -> Self {
        Self {
            window,
            deque: VecDeque::new(),
            deque_mult: 0,
            count: 0,
            flagged: 0,
        }
    }

    /// `(e − f) − w` as a double: its sign is exact, its magnitude good to
    /// the double-double rounding of the sums.
    #[inline]
    fn excess(&self, e: &Entry, f: &Entry) -> f64 {
        ((e.sum - f.sum) - self.window).to_f64()
    }

    fn push(&mut self, e: Entry) {
        while let Some(f) = self.deque.front() {
            if self.excess(&e, f) >= BOUNDARY_EPS {
                self.deque_mult -= f.mult as u128;
                self.deque.pop_front();
            } else {
                break;
            }
        }
        let me = e.mult as u128;
        let mut inside = self.deque_mult;
        for f in &self.deque {
            let d = self.excess(&e, f);
            if d <= -BOUNDARY_EPS {
                break;
            }
            self.flagged += 2 * me * f.mult as u128;
            if d >= 0.0 {
                inside -= f.mult as u128;
            }
        }
        self.count += 2 * me * inside + me * me;
        self.deque_mult += me;
        self.deque.push_back(e);
    }
}

/// Exact count of ordered quadruples (`l = 2`).
///
/// `Naive` enumerates all `N⁴` quadruples and is limited to `N <= 64`;
/// `SortedWindow` sorts the `N(N+1)/2` pair sums in memory.
pub fn count_quadruples(k: u32, n: u64, delta: f64, algo: CountAlgo) -> Result<CountResult> {
    validate(k, 2, n, delta)?;
    match algo {
        CountAlgo::Naive => count_2l_naive(k, 2, n, delta),
        CountAlgo::SortedWindow => {
            let roots = roots(k, n);
            let mut sweep = Sweep::new(window(k, n, delta));
            for e in sorted_run(&roots, 2, 0, n as usize) {
                sweep.push(e);
            }
            CountResult::new(k, 2, n, delta, sweep.count, sweep.flagged)
        }
    }
}

/// Brute-force oracle over every ordered `2l`-tuple.
pub fn count_2l_naive(k: u32, l: u32, n: u64, delta: f64) -> Result<CountResult> {
    validate(k, l, n, delta)?;
    let cap = if l == 2 { NAIVE_MAX_N } else { NAIVE_MAX_N_L3 };
    if n > cap {
        return Err(Error::Domain(format!(
            "naive enumeration limited to N <= {cap}, got {n}"
        )));
    }
    let roots = roots(k, n);
    let w = window(k, n, delta);
    let nn = n as usize;
    // Every ordered half-tuple, summed in nondecreasing index order.
    let halves: Vec<DoubleDouble> = if l == 2 {
        (0..nn * nn)
            .map(|t| {
                let (mut a, mut b) = (t / nn, t % nn);
                if a > b {
                    std::mem::swap(&mut a, &mut b);
                }
                roots[a] + roots[b]
            })
            .collect()
    } else {
        (0..nn * nn * nn)
            .map(|t| {
                let mut idx = [t / (nn * nn), (t / nn) % nn, t % nn];
                idx.sort_unstable();
                (roots[idx[0]] + roots[idx[1]]) + roots[idx[2]]
            })
            .collect()
    };
    let (count, flagged) = halves
        .par_iter()
        .map(|&p| {
            let mut c = 0u128;
            let mut f = 0u128;
            for &q in &halves {
                let diff = match p.total_cmp(&q) {
                    Ordering::Less => q - p,
                    _ => p - q,
                };
                let d = (diff - w).to_f64();
                if d < 0.0 {
                    c += 1;
                }
                if d.abs() < BOUNDARY_EPS {
                    f += 1;
                }
            }
            (c, f)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    CountResult::new(k, l, n, delta, count, flagged)
}

/// Exact count of ordered `2l`-tuples, `l ∈ {2, 3}`, keeping at most
/// `memory_budget` bytes of half-sums resident.
///
/// Half-sums are produced in blocks sharing their smallest index. Blocks
/// are packed into sorted runs that fit the budget; when more than one run
/// is needed the runs go to anonymous temporary files and are merged.
pub fn count_2l_tuples(
    k: u32,
    l: u32,
    n: u64,
    delta: f64,
    memory_budget: usize,
) -> Result<CountResult> {
    validate(k, l, n, delta)?;
    let min_block = block_len(n, l, 0) as usize * ENTRY_BYTES;
    if memory_budget < min_block {
        return Err(Error::Resource(format!(
            "budget of {memory_budget} bytes is below one block ({min_block} bytes)"
        )));
    }
    let cap = (memory_budget / ENTRY_BYTES) as u64;
    let roots = roots(k, n);
    let mut sweep = Sweep::new(window(k, n, delta));

    let mut ranges = Vec::new();
    let (mut start, mut used) = (0u64, 0u64);
    for i in 0..n {
        let len = block_len(n, l, i);
        if used + len > cap {
            ranges.push((start, i));
            start = i;
            used = 0;
        }
        used += len;
    }
    ranges.push((start, n));

    if ranges.len() == 1 {
        for e in sorted_run(&roots, l, 0, n as usize) {
            sweep.push(e);
        }
    } else {
        let mut runs = Vec::with_capacity(ranges.len());
        for &(a, b) in &ranges {
            let run = sorted_run(&roots, l, a as usize, b as usize);
            runs.push(spill(&run)?);
        }
        merge_runs(runs, |e| sweep.push(e))?;
    }
    CountResult::new(k, l, n, delta, sweep.count, sweep.flagged)
}

fn spill(run: &[Entry]) -> Result<File> {
    let mut file = tempfile::tempfile()?;
    {
        let mut w = BufWriter::new(&mut file);
        for e in run {
            w.write_all(&e.sum.hi.to_le_bytes())?;
            w.write_all(&e.sum.lo.to_le_bytes())?;
            w.write_all(&e.mult.to_le_bytes())?;
        }
        w.flush()?;
    }
    file.seek(SeekFrom::Start(0))?;
    Ok(file)
}

fn read_entry(r: &mut impl Read) -> Result<Option<Entry>> {
    let mut buf = [0u8; ENTRY_BYTES];
    match r.read_exact(&mut buf) {
        Ok(()) => {}
        Err(e) if e.kind() == ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let f = |i: usize| f64::from_le_bytes(buf[i..i + 8].try_into().unwrap());
    Ok(Some(Entry {
        sum: DoubleDouble { hi: f(0), lo: f(8) },
        mult: u64::from_le_bytes(buf[16..24].try_into().unwrap()),
    }))
}

struct Head {
    entry: Entry,
    run: usize,
}

impl PartialEq for Head {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Head {}
impl PartialOrd for Head {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Head {
    fn cmp(&self, other: &Self) -> Ordering {
        self.entry
            .sum
            .total_cmp(&other.entry.sum)
            .then(self.run.cmp(&other.run))
    }
}

fn merge_runs(runs: Vec<File>, mut sink: impl FnMut(Entry)) -> Result<()> {
    let mut readers: Vec<BufReader<File>> = runs.into_iter().map(BufReader::new).collect();
    let mut heap = BinaryHeap::with_capacity(readers.len());
    for (run, r) in readers.iter_mut().enumerate() {
        if let Some(entry) = read_entry(r)? {
            heap.push(Reverse(Head { entry, run }));
        }
    }
    while let Some(Reverse(Head { entry, run })) = heap.pop() {
        sink(entry);
        if let Some(next) = read_entry(&mut readers[run])? {
            heap.push(Reverse(Head { entry: next, run }));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub k: u32,
    pub l: u32,
    #[serde(rename = "N")]
    pub n: u64,
    pub delta: f64,
    pub count: u64,
    pub bound_main: f64,
    pub bound_diag: f64,
    pub ratio: f64,
    pub flagged_boundary_pairs: u64,
    /// Slope of `log ratio` against `log N` over all rows with the same
    /// `(k, l)`; `None` when fewer than two distinct `N` are present.
    pub log_n_trend: Option<f64>,
}

/// Ratios `count / max(N^{2l}δ, N^l)` and their trend in `log N`.
pub fn bound_report(results: &[CountResult]) -> Result<Vec<BoundRow>> {
    if results.is_empty() {
        return Err(Error::EmptyDomain(
            "bound_report needs at least one result".into(),
        ));
    }
    let trend = |k: u32, l: u32| {
        let (ns, rs): (Vec<f64>, Vec<f64>) = results
            .iter()
            .filter(|r| r.k == k && r.l == l)
            .map(|r| (r.n as f64, r.ratio()))
            .unzip();
        let distinct = ns.iter().any(|&v| v != ns[0]);
        if distinct {
            log_log_slope(&ns, &rs)
        } else {
            None
        }
    };
    Ok(results
        .iter()
        .map(|r| BoundRow {
            k: r.k,
            l: r.l,
            n: r.n,
            delta: r.delta,
            count: r.count,
            bound_main: r.bound_main,
            bound_diag: r.bound_diag,
            ratio: r.ratio(),
            flagged_boundary_pairs: r.flagged,
            log_n_trend: trend(r.k, r.l),
        })
        .collect())
}
