//! Compensated accumulation and order-fixed reductions.

use rayon::prelude::*;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Pairwise (binary tree) sum in a fixed order. The tree shape depends only
/// on `values.len()`, so the result is reproducible.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (l, r) = values.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

/// Splits `[lo, hi)` into fixed-size chunks, maps each in parallel and
/// returns the per-chunk results in chunk order. Chunk boundaries never
/// depend on the thread count.
pub fn map_chunks<T, F>(lo: u64, hi: u64, chunk: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync,
{
    if hi <= lo {
        return Vec::new();
    }
    let count = (hi - lo).div_ceil(chunk);
    (0..count)
        .into_par_iter()
        .map(|i| {
            let a = lo + i * chunk;
            let b = (a + chunk).min(hi);
            f(a, b)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_small_terms() {
        let mut acc = CompensatedSum::new();
        acc.add(1e16);
        for _ in 0..1000 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.value(), 1000.0);
    }

    #[test]
    fn pairwise_matches_exact_integer_sum() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500500.0);
    }

    #[test]
    fn chunk_results_come_back_in_order() {
        let parts = map_chunks(3, 20, 5, |a, b| (a, b));
        assert_eq!(parts, vec![(3, 8), (8, 13), (13, 18), (18, 20)]);
    }
}
