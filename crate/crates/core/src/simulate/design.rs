//! Generative design with two uniform covariates.
//!
//! Cases: `M₁ = log(−log U) + (1 − U) Z₁ + (1 − U)² Z₂` with `U ~ Unif(0, 1)`,
//! which is strictly decreasing in `U`, so the conditional `(1 − ρ)`-quantile is
//! `(1, z)ᵀβ₀(ρ)` with `β₀(ρ) = (log(−log ρ), 1 − ρ, (1 − ρ)²)`.
//! Controls: `M₀ ~ N(−1 − 0.5 Z₁ − 0.5 Z₂, 2²)`.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::qreg::check_level;
use crate::sample::{CaseSample, ControlSample, Sample};
use crate::Result;

const U_GUARD: f64 = 1e-12;

/// True case coefficients at sensitivity `rho`.
pub fn true_beta(rho: f64) -> [f64; 3] {
    [(-rho.ln()).ln(), 1.0 - rho, (1.0 - rho).powi(2)]
}

/// Case marker for a given uniform draw and covariates.
pub fn case_marker(u: f64, z1: f64, z2: f64) -> f64 {
    (-u.ln()).ln() + (1.0 - u) * z1 + (1.0 - u).powi(2) * z2
}

pub fn control_mean(z1: f64, z2: f64) -> f64 {
    -1.0 - 0.5 * z1 - 0.5 * z2
}

pub const CONTROL_SD: f64 = 2.0;

fn guarded_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > U_GUARD && u < 1.0 - U_GUARD {
            return u;
        }
    }
}

pub fn gen_cases<R: Rng + ?Sized>(n1: usize, rng: &mut R) -> CaseSample {
    let mut markers = Vec::with_capacity(n1);
    let mut z = Vec::with_capacity(2 * n1);
    for _ in 0..n1 {
        let z1: f64 = rng.random();
        let z2: f64 = rng.random();
        let u = guarded_uniform(rng);
        markers.push(case_marker(u, z1, z2));
        z.push(z1);
        z.push(z2);
    }
    Sample::from_flat(markers, &z, 2).expect("generated values are finite")
}

pub fn gen_controls<R: Rng + ?Sized>(n0: usize, rng: &mut R) -> ControlSample {
    let mut markers = Vec::with_capacity(n0);
    let mut z = Vec::with_capacity(2 * n0);
    for _ in 0..n0 {
        let z1: f64 = rng.random();
        let z2: f64 = rng.random();
        let e: f64 = rng.sample(StandardNormal);
        markers.push(control_mean(z1, z2) + CONTROL_SD * e);
        z.push(z1);
        z.push(z2);
    }
    Sample::from_flat(markers, &z, 2).expect("generated values are finite")
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(order: usize) -> Vec<(f64, f64)> {
    let n = order;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((x + 1.0) / 2.0, w / 2.0));
    }
    out
}

/// Pooled specificity `E[Φ((t(Z) − μ(Z)) / 2)]` with the true thresholds,
/// by tensor Gauss–Legendre quadrature over the unit square.
pub fn true_specificity(rho0: f64) -> Result<f64> {
    check_level(rho0)?;
    let beta = true_beta(rho0);
    let std = Normal::new(0.0, 1.0).expect("valid normal");
    let nodes = gauss_legendre_unit(64);
    let mut total = 0.0;
    for &(z1, w1) in &nodes {
        for &(z2, w2) in &nodes {
            let t = beta[0] + beta[1] * z1 + beta[2] * z2;
            total += w1 * w2 * std.cdf((t - control_mean(z1, z2)) / CONTROL_SD);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn case_marker_at_median_draw() {
        assert!((case_marker(0.5, 0.0, 0.0) - (2.0_f64.ln()).ln()).abs() < 1e-15);
        assert!((case_marker(0.5, 0.0, 0.0) + 0.366_512_920_581_664_3).abs() < 1e-12);
    }

    #[test]
    fn case_quantile_matches_true_coefficients() {
        let mut rng = stream(11, 0);
        let cases = gen_cases(200_000, &mut rng);
        let b = true_beta(0.95);
        let above = (0..cases.len())
            .filter(|&i| cases.marker(i) > cases.fitted(i, &b))
            .count() as f64
            / cases.len() as f64;
        // binomial sd ≈ 4.9e-4
        assert!((above - 0.95).abs() < 2.5e-3, "{above}");
    }

    #[test]
    fn control_moments() {
        let mut rng = stream(12, 0);
        let c = gen_controls(1_000_000, &mut rng);
        let mean = c.markers().iter().sum::<f64>() / c.len() as f64;
        // sd of the mean ≈ sqrt(4 + 1/24) / 1000
        assert!((mean + 1.5).abs() < 0.01, "{mean}");
        let resid_var = (0..c.len())
            .map(|i| {
                let z = c.covariates(i);
                (c.marker(i) - control_mean(z[0], z[1])).powi(2)
            })
            .sum::<f64>()
            / c.len() as f64;
        assert!((resid_var - 4.0).abs() < 0.03, "{resid_var}");
    }

    #[test]
    fn quadrature_integrates_polynomials() {
        let nodes = gauss_legendre_unit(8);
        let s: f64 = nodes.iter().map(|(x, w)| w * x.powi(7)).sum();
        assert!((s - 1.0 / 8.0).abs() < 1e-14);
        let total: f64 = nodes.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn true_specificities_round_to_reported_values() {
        for (rho, phi) in [(0.95, 0.24), (0.90, 0.36), (0.85, 0.45), (0.80, 0.52)] {
            let v = true_specificity(rho).unwrap();
            assert!((v - phi).abs() <= 0.005, "rho {rho}: {v}");
        }
    }
}
