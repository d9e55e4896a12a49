//! The error term `Δ_k(x) = D_k(x) − x P_{k-1}(log x)`, right-continuous.

use crate::error::{Error, Result};
use crate::main_term::MainTermPolynomial;
use crate::sieve::DivisorTable;
use crate::summatory::floor_index;

/// Evaluates `Δ_k` from a sieved table and the main-term polynomial.
#[derive(Debug, Clone)]
pub struct DeltaEvaluator<'a> {
    table: &'a DivisorTable,
    poly: MainTermPolynomial,
}

impl<'a> DeltaEvaluator<'a> {
    pub fn new(table: &'a DivisorTable, poly: MainTermPolynomial) -> Result<Self> {
        if table.k() != poly.k() {
            return Err(Error::Domain(format!(
                "table holds d_{} but polynomial is for k = {}",
                table.k(),
                poly.k()
            )));
        }
        Ok(Self { table, poly })
    }

    pub fn k(&self) -> u32 {
        self.table.k()
    }

    pub fn limit(&self) -> u64 {
        self.table.limit()
    }

    pub fn table(&self) -> &'a DivisorTable {
        self.table
    }

    pub fn poly(&self) -> &MainTermPolynomial {
        &self.poly
    }

    pub fn check_range(&self, x: f64) -> Result<()> {
        if x >= 1.0 && x <= self.limit() as f64 {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                value: x,
                limit: self.limit(),
            })
        }
    }

    /// `Δ_k(x)` for `1 <= x <= limit`.
    pub fn delta(&self, x: f64) -> Result<f64> {
        self.check_range(x)?;
        let n = floor_index(x).min(self.limit());
        Ok(self.table.summatory(n) as f64 - self.poly.main_term(x))
    }

    /// `Δ_k` on the piece `[n, n+1)`, given `D_k(n)`.
    #[inline]
    pub fn delta_on_piece(&self, summatory_n: u64, x: f64) -> f64 {
        summatory_n as f64 - self.poly.main_term(x)
    }

    /// `Δ_k(n − 0) = D_k(n − 1) − n P(log n)`.
    pub fn delta_left_limit(&self, n: u64) -> Result<f64> {
        self.check_range(n as f64)?;
        Ok(self.table.summatory(n - 1) as f64 - self.poly.main_term(n as f64))
    }
}

/// `Δ_k(x)`; the evaluator must be built for the same `k`.
pub fn delta_k(k: u32, x: f64, evaluator: &DeltaEvaluator<'_>) -> Result<f64> {
    if evaluator.k() != k {
        return Err(Error::Domain(format!(
            "evaluator is for k = {}, requested k = {k}",
            evaluator.k()
        )));
    }
    evaluator.delta(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::main_term::main_term_coeffs;
    use crate::sieve::sieve_dk;
    use crate::zeta::EULER_GAMMA;

    #[test]
    fn examples_k2() {
        let t = sieve_dk(2, 100).unwrap();
        let ev = DeltaEvaluator::new(&t, main_term_coeffs(2).unwrap()).unwrap();
        let v = delta_k(2, 1.0, &ev).unwrap();
        assert!((v - (2.0 - 2.0 * EULER_GAMMA)).abs() < 1e-15);
        assert!((v - 0.8455687).abs() < 1e-7);
        let v = delta_k(2, 10.0, &ev).unwrap();
        let expect = 27.0 - 10.0 * (10f64.ln() + 2.0 * EULER_GAMMA - 1.0);
        assert!((v - expect).abs() < 1e-12);
        assert!((v - 2.4298358).abs() < 1e-6);
    }

    #[test]
    fn jump_at_integers_is_dk() {
        let t = sieve_dk(3, 2000).unwrap();
        let ev = DeltaEvaluator::new(&t, main_term_coeffs(3).unwrap()).unwrap();
        for n in 2..=2000u64 {
            let jump = ev.delta(n as f64).unwrap() - ev.delta_left_limit(n).unwrap();
            assert!((jump - t.get(n) as f64).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn range_errors() {
        let t = sieve_dk(2, 100).unwrap();
        let ev = DeltaEvaluator::new(&t, main_term_coeffs(2).unwrap()).unwrap();
        assert!(matches!(ev.delta(101.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(ev.delta(0.5), Err(Error::OutOfRange { .. })));
        assert!(delta_k(3, 5.0, &ev).is_err());
        let t3 = sieve_dk(3, 10).unwrap();
        assert!(DeltaEvaluator::new(&t3, main_term_coeffs(2).unwrap()).is_err());
    }
}
