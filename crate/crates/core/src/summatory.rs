//! Exact summatory functions `D_k(x) = Σ_{n<=x} d_k(n)`.

use crate::error::{Error, Result};
use crate::sieve::DivisorTable;

/// Where `D_k` comes from.
#[derive(Debug, Clone, Copy)]
pub enum SummatoryMethod<'a> {
    /// Prefix sums over a sieved table.
    SievePrefix(&'a DivisorTable),
    /// Lattice-point counting under the hyperbola (k = 2) or the
    /// hyperbolic surface `abc <= x` (k = 3).
    Hyperbola,
}

/// `⌊x⌋` for `x >= 0`, snapping to an integer when `x` lies within one ulp
/// of it so that values such as `0.1 * 30` land on 3.
pub fn floor_index(x: f64) -> u64 {
    let r = x.round();
    let ulp = f64::EPSILON * x.abs().max(1.0);
    if (x - r).abs() <= ulp {
        r as u64
    } else {
        x.floor() as u64
    }
}

/// `D_k(⌊x⌋)` exactly.
pub fn summatory_dk(k: u32, x: f64, method: SummatoryMethod<'_>) -> Result<u64> {
    if !(x >= 1.0) {
        return Err(Error::Domain(format!(
            "summatory function needs x >= 1, got {x}"
        )));
    }
    let n = floor_index(x);
    match method {
        SummatoryMethod::SievePrefix(table) => {
            if table.k() != k {
                return Err(Error::Domain(format!(
                    "table holds d_{}, requested d_{k}",
                    table.k()
                )));
            }
            if n > table.limit() {
                return Err(Error::OutOfRange {
                    value: x,
                    limit: table.limit(),
                });
            }
            Ok(table.summatory(n))
        }
        SummatoryMethod::Hyperbola => match k {
            1 => Ok(n),
            2 => Ok(divisor_summatory(n)),
            3 => Ok(piltz3_summatory(n)),
            _ => Err(Error::Unsupported(format!(
                "hyperbola method is implemented for k <= 3, not k = {k}"
            ))),
        },
    }
}

/// `D(x) = 2 Σ_{d<=√x} ⌊x/d⌋ − ⌊√x⌋²`.
pub fn divisor_summatory(x: u64) -> u64 {
    let s = x.isqrt();
    let mut acc = 0u64;
    for d in 1..=s {
        acc += x / d;
    }
    2 * acc - s * s
}

/// Counts ordered triples with `abc <= x` by walking sorted triples
/// `a <= b <= c` with `a <= x^{1/3}` and weighting by their permutations.
pub fn piltz3_summatory(x: u64) -> u64 {
    let mut acc = 0u64;
    let amax = icbrt(x);
    for a in 1..=amax {
        let xa = x / a;
        // b = a: c ranges over a..=x/a²; (a,a,a) once, (a,a,c) three ways.
        acc += 1 + 3 * (xa / a - a);
        let bmax = xa.isqrt();
        for b in a + 1..=bmax {
            // c = b gives (a,b,b): 3 orderings; c > b gives 6.
            acc += 3 + 6 * (xa / b - b);
        }
    }
    acc
}

/// `⌊x^{1/3}⌋`.
pub fn icbrt(x: u64) -> u64 {
    let mut r = (x as f64).cbrt() as u64;
    while r > 0 && r.checked_pow(3).is_none_or(|c| c > x) {
        r -= 1;
    }
    while (r + 1).checked_pow(3).is_some_and(|c| c <= x) {
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::sieve_dk;

    #[test]
    fn examples() {
        let t2 = sieve_dk(2, 100).unwrap();
        assert_eq!(
            summatory_dk(2, 10.0, SummatoryMethod::SievePrefix(&t2)).unwrap(),
            27
        );
        assert_eq!(
            summatory_dk(2, 10.0, SummatoryMethod::Hyperbola).unwrap(),
            27
        );
        assert_eq!(summatory_dk(2, 1.0, SummatoryMethod::Hyperbola).unwrap(), 1);
        assert_eq!(summatory_dk(3, 2.0, SummatoryMethod::Hyperbola).unwrap(), 4);
        assert_eq!(
            summatory_dk(2, 10.7, SummatoryMethod::Hyperbola).unwrap(),
            27
        );
    }

    #[test]
    fn errors() {
        assert!(matches!(
            summatory_dk(2, 0.5, SummatoryMethod::Hyperbola),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            summatory_dk(4, 10.0, SummatoryMethod::Hyperbola),
            Err(Error::Unsupported(_))
        ));
        let t = sieve_dk(2, 10).unwrap();
        assert!(matches!(
            summatory_dk(2, 11.0, SummatoryMethod::SievePrefix(&t)),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn floor_snaps_near_integers() {
        assert_eq!(floor_index(0.1 * 30.0), 3);
        assert_eq!(floor_index(2.9999999999999996), 3);
        assert_eq!(floor_index(2.5), 2);
        assert_eq!(floor_index(7.0), 7);
    }

    #[test]
    fn integer_cube_root() {
        for x in [0u64, 1, 7, 8, 26, 27, 999_999, 1_000_000, u64::MAX] {
            let r = icbrt(x);
            assert!(r.pow(3) <= x);
            assert!((r + 1).checked_pow(3).is_none_or(|c| c > x));
        }
    }

    #[test]
    fn hyperbola_matches_sieve_small() {
        let t2 = sieve_dk(2, 5000).unwrap();
        let t3 = sieve_dk(3, 5000).unwrap();
        for n in 1..=5000 {
            assert_eq!(divisor_summatory(n), t2.summatory(n), "k=2 n={n}");
            assert_eq!(piltz3_summatory(n), t3.summatory(n), "k=3 n={n}");
        }
    }
}
