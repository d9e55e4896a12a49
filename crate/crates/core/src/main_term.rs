//! The main-term polynomial `P_{k-1}` with `Σ_{n<=x} d_k(n) = x P_{k-1}(log x) + Δ_k(x)`.
//!
//! For k = 2 the coefficients are closed form. For k = 3, 4 they are the
//! residue of `ζ^k(s) x^s / s` at `s = 1`, taken by contour integration, and
//! cross-checked against a least-squares fit of exact Riesz means of the
//! sieved `d_k`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sieve::{sieve_dk, DivisorTable};
use crate::zeta::{contour_integral, series_mul, zeta, EULER_GAMMA};

/// Contour radius around `s = 1`.
pub const RESIDUE_RADIUS: f64 = 0.25;
/// Trapezoid nodes on the contour.
pub const RESIDUE_POINTS: usize = 64;
/// Relative agreement demanded between residue and fit coefficients.
pub const CROSS_CHECK_RTOL: f64 = 1e-6;
/// Table size used for the cross-check fit.
pub const CROSS_CHECK_LIMIT: u64 = 1 << 20;
/// Order of the Riesz means used by the fit.
pub const RIESZ_ORDER: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    ResidueOracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainTermPolynomial {
    k: u32,
    /// `coeffs[j]` multiplies `z^j`.
    coeffs: Vec<f64>,
    provenance: Provenance,
}

impl MainTermPolynomial {
    /// `x (log x + 2γ − 1)`.
    pub fn closed_form_k2() -> Self {
        Self {
            k: 2,
            coeffs: vec![2.0 * EULER_GAMMA - 1.0, 1.0],
            provenance: Provenance::ClosedForm,
        }
    }

    pub fn from_residue(k: u32) -> Result<Self> {
        check_k(k)?;
        Ok(Self {
            k,
            coeffs: residue_coeffs(k),
            provenance: Provenance::ResidueOracle,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// `P_{k-1}(z)`.
    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    /// `x P_{k-1}(log x)`.
    #[inline]
    pub fn main_term(&self, x: f64) -> f64 {
        x * self.eval(x.ln())
    }

    /// Derivative of the main term, `P(log x) + P'(log x)`.
    pub fn main_term_slope(&self, x: f64) -> f64 {
        let z = x.ln();
        let d: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (j, &c)| acc * z + j as f64 * c);
        self.eval(z) + d
    }
}

fn check_k(k: u32) -> Result<()> {
    if (2..=4).contains(&k) {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "main-term coefficients for k = {k}; supported 2..=4"
        )))
    }
}

/// Main-term polynomial for `2 <= k <= 4`. For k >= 3 the residue
/// coefficients must agree with an independent least-squares fit.
pub fn main_term_coeffs(k: u32) -> Result<MainTermPolynomial> {
    check_k(k)?;
    if k == 2 {
        return Ok(MainTermPolynomial::closed_form_k2());
    }
    let poly = MainTermPolynomial::from_residue(k)?;
    let table = sieve_dk(k, CROSS_CHECK_LIMIT)?;
    let fitted = riesz_fit(&table, RIESZ_ORDER, 100)?;
    if let Some(msg) = coefficient_mismatch(poly.coeffs(), &fitted, CROSS_CHECK_RTOL) {
        return Err(Error::Validation(msg));
    }
    Ok(poly)
}

/// Describes the first coefficient outside `rtol`, if any.
pub fn coefficient_mismatch(reference: &[f64], other: &[f64], rtol: f64) -> Option<String> {
    if reference.len() != other.len() {
        return Some(format!(
            "{} vs {} coefficients",
            reference.len(),
            other.len()
        ));
    }
    reference
        .iter()
        .zip(other)
        .enumerate()
        .find(|(_, (a, b))| (*a - *b).abs() > rtol * a.abs())
        .map(|(j, (a, b))| format!("c_{j}: residue {a:.12} vs fit {b:.12}"))
}

/// `c_j = (1/j!) · (1/2πi) ∮ ζ^k(s) (s−1)^j / s ds` around `s = 1`.
pub fn residue_coeffs(k: u32) -> Vec<f64> {
    let mut fact = 1.0;
    (0..k)
        .map(|j| {
            if j > 0 {
                fact *= j as f64;
            }
            let r = contour_integral(1.0, RESIDUE_RADIUS, RESIDUE_POINTS, |s: Complex64| {
                zeta(s).powu(k) * (s - 1.0).powu(j) / s
            });
            r.re / fact
        })
        .collect()
}

/// Exact `ρ! · Σ_{n<=X} d(n) (X − n)^ρ` for integer `X`, from running power
/// moments.
struct RieszMeans<'a> {
    table: &'a DivisorTable,
    rho: u32,
}

impl RieszMeans<'_> {
    fn at(&self, xs: &[u64]) -> Result<Vec<i128>> {
        let rho = self.rho as usize;
        let mut moments = vec![0i128; rho + 1];
        let mut out = Vec::with_capacity(xs.len());
        let mut n = 0u64;
        let overflow = || Error::Overflow("Riesz mean exceeds i128".into());
        for &x in xs {
            while n < x {
                n += 1;
                let d = self.table.get(n) as i128;
                let mut p = d;
                for m in moments.iter_mut() {
                    *m = m.checked_add(p).ok_or_else(overflow)?;
                    p = p.checked_mul(n as i128).ok_or_else(overflow)?;
                }
            }
            // Σ_i C(ρ,i) (−1)^i X^{ρ−i} M_i
            let mut acc = 0i128;
            let mut binom = 1i128;
            for (i, m) in moments.iter().enumerate() {
                let xp = (x as i128)
                    .checked_pow((rho - i) as u32)
                    .ok_or_else(overflow)?;
                let term = binom
                    .checked_mul(xp)
                    .and_then(|t| t.checked_mul(*m))
                    .ok_or_else(overflow)?;
                acc = if i % 2 == 0 { acc + term } else { acc - term };
                binom = binom * (rho - i) as i128 / (i as i128 + 1);
            }
            out.push(acc);
        }
        Ok(out)
    }
}

/// Least-squares estimate of the coefficients of `P_{k-1}` from the exact
/// Riesz means of order `rho` of the table, over a log-spaced grid of
/// integers in `[x_min, limit]`.
///
/// Model for the normalised mean `ρ!^{-1} Σ d(n)(X−n)^ρ / X^{ρ+1}`:
/// `Σ_j c_j B_j(X) + Σ_{i=0..ρ} β_i X^{-(i+1)}`, where `B_j` is the `j`-th
/// derivative in `s` at `s = 1` of `X^{s−1} / ((s+1)…(s+ρ))` and the `β_i`
/// absorb the residues at `s = 0, −1, …, −ρ`. Rows are weighted by the
/// inverse size of the oscillating remainder.
pub fn riesz_fit(table: &DivisorTable, rho: u32, x_min: u64) -> Result<Vec<f64>> {
    let k = table.k();
    let limit = table.limit();
    if x_min < 2 || x_min * 10 > limit {
        return Err(Error::InsufficientData(format!(
            "fit range [{x_min}, {limit}] is too narrow"
        )));
    }
    const GRID: usize = 400;
    let lo = (x_min as f64).ln();
    let hi = (limit as f64).ln();
    let mut xs: Vec<u64> = (0..GRID)
        .map(|i| {
            (lo + (hi - lo) * i as f64 / (GRID - 1) as f64)
                .exp()
                .round() as u64
        })
        .map(|x| x.clamp(x_min, limit))
        .collect();
    xs.dedup();

    let means = RieszMeans { table, rho }.at(&xs)?;
    let kk = k as usize;
    let cols = kk + rho as usize + 1;
    let rho_fact: f64 = (1..=rho).map(|i| i as f64).product();
    // Oscillating part of the normalised mean is about X^{(k-1)/(2k) + ρ(k-1)/k - ρ - 1}.
    let kf = k as f64;
    let rf = rho as f64;
    let weight_exp = rf + 1.0 - (kf - 1.0) / (2.0 * kf) - rf * (kf - 1.0) / kf;

    let mut a = DMatrix::<f64>::zeros(xs.len(), cols);
    let mut b = DVector::<f64>::zeros(xs.len());
    for (row, (&x, &mean)) in xs.iter().zip(&means).enumerate() {
        let xf = x as f64;
        let w = xf.powf(weight_exp);
        let basis = riesz_basis(xf.ln(), rho, kk);
        for (j, v) in basis.iter().enumerate() {
            a[(row, j)] = v * w;
        }
        for i in 0..=rho as usize {
            a[(row, kk + i)] = xf.powi(-(i as i32 + 1)) * w;
        }
        b[row] = mean as f64 / rho_fact / xf.powi(rho as i32 + 1) * w;
    }
    // Column scaling keeps the SVD well conditioned.
    let scales: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    for (j, s) in scales.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = a.svd(true, true);
    let sol = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::Validation(format!("least squares failed: {e}")))?;
    Ok((0..kk).map(|j| sol[j] / scales[j]).collect())
}

/// `B_j(X)/X^{ρ+1}` for `j < k`: `j! [t^j] e^{tL} Π_{i=1..ρ} (i+1+t)^{-1}`.
fn riesz_basis(log_x: f64, rho: u32, k: usize) -> Vec<f64> {
    let mut exp_series = Vec::with_capacity(k);
    let mut term = 1.0;
    for q in 0..k {
        if q > 0 {
            term *= log_x / q as f64;
        }
        exp_series.push(term);
    }
    let mut prod = vec![0.0; k];
    prod[0] = 1.0;
    for i in 1..=rho {
        let a = i as f64 + 1.0;
        // 1/(a+t) = Σ (−1)^q t^q / a^{q+1}
        let inv: Vec<f64> = (0..k)
            .map(|q| if q % 2 == 0 { 1.0 } else { -1.0 } / a.powi(q as i32 + 1))
            .collect();
        prod = series_mul(&prod, &inv, k);
    }
    let full = series_mul(&exp_series, &prod, k);
    let mut fact = 1.0;
    full.iter()
        .enumerate()
        .map(|(j, v)| {
            if j > 0 {
                fact *= j as f64;
            }
            v * fact
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k2_closed_form() {
        let p = main_term_coeffs(2).unwrap();
        assert_eq!(p.coeffs(), &[2.0 * EULER_GAMMA - 1.0, 1.0]);
        assert!((p.coeffs()[0] - 0.1544313).abs() < 1e-7);
        assert!((p.main_term(1.0) - 0.154_431_329_803_065_8).abs() < 1e-15);
        assert_eq!(p.provenance(), Provenance::ClosedForm);
    }

    #[test]
    fn residue_reproduces_k2_closed_form() {
        let c = residue_coeffs(2);
        assert!((c[0] - (2.0 * EULER_GAMMA - 1.0)).abs() < 1e-14, "{c:?}");
        assert!((c[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn k3_residue_matches_stieltjes_expansion() {
        // With ζ(s) = 1/(s-1) + γ − γ_1 (s−1) + …, the residue gives
        // c_2 = 1/2, c_1 = 3γ − 1, c_0 = 3γ² − 3γ + 1 − 3γ_1.
        let g = EULER_GAMMA;
        let g1 = -0.072_815_845_483_676_72;
        let c = residue_coeffs(3);
        assert!((c[2] - 0.5).abs() < 1e-14);
        assert!((c[1] - (3.0 * g - 1.0)).abs() < 1e-13);
        assert!(
            (c[0] - (3.0 * g * g - 3.0 * g + 1.0 - 3.0 * g1)).abs() < 1e-13,
            "{c:?}"
        );
    }

    #[test]
    fn out_of_range_k() {
        assert!(matches!(main_term_coeffs(1), Err(Error::Unsupported(_))));
        assert!(matches!(main_term_coeffs(5), Err(Error::Unsupported(_))));
    }

    #[test]
    fn riesz_fit_recovers_k2() {
        let t = sieve_dk(2, 1 << 18).unwrap();
        let c = riesz_fit(&t, RIESZ_ORDER, 100).unwrap();
        assert!(
            coefficient_mismatch(&[2.0 * EULER_GAMMA - 1.0, 1.0], &c, 1e-6).is_none(),
            "{c:?}"
        );
    }

    #[test]
    fn validated_k3_and_k4() {
        for k in [3, 4] {
            let p = main_term_coeffs(k).unwrap();
            assert_eq!(p.coeffs().len(), k as usize);
            assert!(p.coeffs()[k as usize - 1] != 0.0);
            assert_eq!(p.provenance(), Provenance::ResidueOracle);
        }
    }

    #[test]
    fn slope_matches_finite_difference() {
        let p = MainTermPolynomial::from_residue(3).unwrap();
        let x = 12345.6;
        let h = 1e-3;
        let fd = (p.main_term(x + h) - p.main_term(x - h)) / (2.0 * h);
        assert!((fd - p.main_term_slope(x)).abs() < 1e-6);
    }
}
