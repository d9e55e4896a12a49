//! Riemann zeta on a neighbourhood of `s = 1` and contour integration.
//!
//! Only what the residue computations need: ζ(s) for complex `s` with
//! moderate `|s|` via Euler–Maclaurin, and the trapezoidal rule on circles,
//! which converges geometrically for integrands analytic in an annulus.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Euler's constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

// B_{2j} for j = 1..=12
const BERNOULLI_EVEN: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
];

const EM_TERMS: u32 = 20;

/// ζ(s) for complex `s != 1`. Accurate to a few ulps for `|s| <= 4`.
pub fn zeta(s: Complex64) -> Complex64 {
    let n = EM_TERMS as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 1..EM_TERMS {
        acc += (-s * (m as f64).ln()).exp();
    }
    let ln_n = n.ln();
    let n_pow = (-s * ln_n).exp(); // N^{-s}
    acc += n_pow * n / (s - 1.0);
    acc += n_pow * 0.5;
    // Σ B_{2j}/(2j)! · s(s+1)…(s+2j-2) · N^{-s-2j+1}
    let mut rising = s; // s(s+1)…(s+2j-2), starts at j = 1
    let mut fact = 2.0; // (2j)!
    let mut npow = n_pow / n; // N^{-s-1}
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let j = j as f64 + 1.0;
        acc += rising * npow * (b / fact);
        rising *= (s + 2.0 * j - 1.0) * (s + 2.0 * j);
        fact *= (2.0 * j + 1.0) * (2.0 * j + 2.0);
        npow /= n * n;
    }
    acc
}

/// ζ(σ) for real `σ != 1`.
pub fn zeta_real(sigma: f64) -> f64 {
    zeta(Complex64::new(sigma, 0.0)).re
}

/// `(1/2πi) ∮ f(s) ds` over the circle `|s - center| = radius`, by the
/// `points`-node trapezoidal rule.
pub fn contour_integral<F>(center: f64, radius: f64, points: usize, f: F) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..points {
        let theta = 2.0 * PI * (j as f64 + 0.5) / points as f64;
        let dz = Complex64::from_polar(radius, theta);
        acc += f(Complex64::new(center, 0.0) + dz) * dz;
    }
    acc / points as f64
}

/// Product of two truncated power series, keeping `len` terms.
pub(crate) fn series_mul(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    (0..len)
        .map(|j| {
            (0..=j)
                .filter(|&i| i < a.len() && j - i < b.len())
                .map(|i| a[i] * b[j - i])
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_real_values() {
        assert!((zeta_real(2.0) - PI * PI / 6.0).abs() < 1e-15);
        assert!((zeta_real(1.5) - 2.612_375_348_685_488).abs() < 1e-14);
        assert!((zeta_real(3.0) - 1.202_056_903_159_594_2).abs() < 1e-15);
        assert!((zeta_real(0.5) + 1.460_354_508_809_586_8).abs() < 1e-14);
        assert!((zeta_real(0.0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn regular_part_at_one_is_euler_gamma() {
        // ζ(s) - 1/(s-1) → γ as s → 1
        let g = contour_integral(1.0, 0.25, 64, |s| (zeta(s) - 1.0 / (s - 1.0)) / (s - 1.0));
        assert!((g.re - EULER_GAMMA).abs() < 1e-14, "{}", g.re);
        assert!(g.im.abs() < 1e-14);
    }

    #[test]
    fn stieltjes_gamma_1() {
        // ζ(s) = 1/(s-1) + γ - γ_1 (s-1) + …
        let c1 = contour_integral(1.0, 0.25, 64, |s| {
            (zeta(s) - 1.0 / (s - 1.0)) / ((s - 1.0) * (s - 1.0))
        });
        assert!(
            (-c1.re - (-0.072_815_845_483_676_72)).abs() < 1e-13,
            "{}",
            c1.re
        );
    }

    #[test]
    fn contour_of_pole_gives_residue() {
        let r = contour_integral(1.0, 0.3, 16, |s| 3.0 / (s - 1.0));
        assert!((r.re - 3.0).abs() < 1e-14 && r.im.abs() < 1e-14);
    }
}
