//! Standard errors, confidence intervals and confidence bands for the pooled
//! specificity.
//!
//! The sample-based estimator stacks the case estimating equations and the
//! control counting equation into `G_n(ν)`, `ν = (βᵀ, φ)ᵀ`, factors the
//! estimated covariance of `G_n` as `Σ̂ = C Cᵀ`, and solves `G_n(ν_l) = c_l`
//! for every column of `C`. The spread of the perturbed solutions around
//! `ν̂` estimates the covariance of `ν̂` without any density estimation.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{QrocError, Result};
use crate::monotone::{monotonize_roc, ScanDirection};
use crate::qreg::{
    check_level, default_path_domain, fit_offset, fit_path, fit_quantile, QuantileTracker,
    QuantileSolution,
};
use crate::rng::{stream, StreamRng};
use crate::roc::{adjusted_roc_on_knots, count_negative, specificity_at};
use crate::sample::{BiomarkerDataset, Sample};

/// Redraws allowed per bootstrap replicate when a resample is rank deficient.
const REDRAWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceMethod {
    Sample,
    Bootstrap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    /// `(p + 2) × (p + 2)` covariance of `(β̂ᵀ, φ̂)ᵀ`, row-major rows.
    pub matrix: Vec<Vec<f64>>,
    pub method: VarianceMethod,
    pub se_phi: f64,
    /// `(β̂ᵀ, φ̂)ᵀ` the covariance refers to.
    pub estimate: Vec<f64>,
    /// Set when `Σ̂` was not numerically positive definite and its symmetric
    /// square root replaced the Cholesky factor.
    pub eigen_root: bool,
    /// Bootstrap resamples redrawn because of a rank-deficient design.
    pub redrawn: usize,
}

impl CovarianceEstimate {
    pub fn se(&self) -> Vec<f64> {
        (0..self.matrix.len())
            .map(|k| self.matrix[k][k].max(0.0).sqrt())
            .collect()
    }
}

/// Standard normal quantile for a two-sided interval at coverage `level`.
pub fn z_quantile(level: f64) -> Result<f64> {
    check_level(level)?;
    let std = Normal::new(0.0, 1.0).expect("valid normal");
    Ok(std.inverse_cdf(0.5 + level / 2.0))
}

/// Stacked estimating function `G_n(ν)`.
pub fn gn_eval(nu: &[f64], data: &BiomarkerDataset, rho: f64) -> Result<Vec<f64>> {
    let m = data.cases.ncols();
    if nu.len() != m + 1 {
        return Err(QrocError::Shape(format!(
            "parameter vector has length {}, expected {}",
            nu.len(),
            m + 1
        )));
    }
    let (beta, phi) = nu.split_at(m);
    let mut out = crate::qreg::estimating_residual(&data.cases, beta, rho)?;
    out.push(specificity_at(&data.controls, beta)? - phi[0]);
    Ok(out)
}

/// Block-diagonal estimate of the covariance of `G_n` at the fitted values.
pub fn sigma_hat(data: &BiomarkerDataset, beta_hat: &[f64], phi_hat: f64, rho: f64) -> Result<DMatrix<f64>> {
    let cases = &data.cases;
    let controls = &data.controls;
    let m = cases.ncols();
    if beta_hat.len() != m || controls.ncols() != m {
        return Err(QrocError::Shape("coefficients do not match the covariate schema".into()));
    }
    let mut sigma = DMatrix::<f64>::zeros(m + 1, m + 1);
    let n1 = cases.len() as f64;
    for i in 0..cases.len() {
        let e = if cases.marker(i) > cases.fitted(i, beta_hat) { 1.0 } else { 0.0 } - rho;
        let x = cases.row(i);
        for r in 0..m {
            for c in 0..m {
                sigma[(r, c)] += x[r] * x[c] * e * e;
            }
        }
    }
    for r in 0..m {
        for c in 0..m {
            sigma[(r, c)] /= n1 * n1;
        }
    }
    let n0 = controls.len() as f64;
    let ctrl: f64 = (0..controls.len())
        .map(|j| {
            let e = if controls.marker(j) <= controls.fitted(j, beta_hat) { 1.0 } else { 0.0 } - phi_hat;
            e * e
        })
        .sum();
    sigma[(m, m)] = ctrl / (n0 * n0);
    Ok(sigma)
}

/// Lower-triangular factor `C` with `Σ = C Cᵀ`; falls back to the symmetric
/// square root when a leading minor is not positive at `1e-12` relative.
fn factor(sigma: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let n = sigma.nrows();
    let scale = (0..n).map(|k| sigma[(k, k)].abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return (DMatrix::zeros(n, n), false);
    }
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut ok = true;
    'outer: for j in 0..n {
        let mut d = sigma[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 1e-12 * scale {
            ok = false;
            break 'outer;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = sigma[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    if ok {
        return (l, false);
    }
    let eig = SymmetricEigen::new(sigma.clone());
    let mut root = eig.eigenvectors.clone();
    for c in 0..n {
        let s = eig.eigenvalues[c].max(0.0).sqrt();
        for r in 0..n {
            root[(r, c)] *= s;
        }
    }
    (root, true)
}

/// Sample-based covariance from the perturbed estimating equations.
pub fn sample_variance(data: &BiomarkerDataset, rho: f64) -> Result<CovarianceEstimate> {
    let fit = fit_quantile(&data.cases, rho)?;
    sample_variance_at(data, &fit)
}

/// Same as [`sample_variance`] reusing an existing fit at `fit.rho`.
pub fn sample_variance_at(data: &BiomarkerDataset, fit: &QuantileSolution) -> Result<CovarianceEstimate> {
    let rho = fit.rho;
    let m = data.cases.ncols();
    let phi_hat = specificity_at(&data.controls, &fit.beta)?;
    let sigma = sigma_hat(data, &fit.beta, phi_hat, rho)?;
    let (root, eigen_root) = factor(&sigma);
    let mut nu_hat = fit.beta.clone();
    nu_hat.push(phi_hat);
    let n0 = data.controls.len() as f64;

    let mut cov = vec![vec![0.0; m + 1]; m + 1];
    for l in 0..=m {
        let col: Vec<f64> = (0..=m).map(|r| root[(r, l)]).collect();
        if col.iter().all(|&v| v == 0.0) {
            continue;
        }
        let beta_l = if col[..m].iter().all(|&v| v == 0.0) {
            fit.beta.clone()
        } else {
            fit_offset(&data.cases, rho, &col[..m], fit)
                .map_err(|e| QrocError::Inference(format!("perturbed solve for column {l} failed: {e}")))?
                .beta
        };
        let phi_l = count_negative(&data.controls, &beta_l) as f64 / n0 - col[m];
        let diff: Vec<f64> = beta_l
            .iter()
            .chain(std::iter::once(&phi_l))
            .zip(&nu_hat)
            .map(|(a, b)| a - b)
            .collect();
        for r in 0..=m {
            for c in 0..=m {
                cov[r][c] += diff[r] * diff[c];
            }
        }
    }
    Ok(CovarianceEstimate {
        se_phi: cov[m][m].max(0.0).sqrt(),
        matrix: cov,
        method: VarianceMethod::Sample,
        estimate: nu_hat,
        eigen_root,
        redrawn: 0,
    })
}

fn resample<R: Rng + ?Sized>(s: &Sample, rng: &mut R) -> Sample {
    let n = s.len();
    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    s.select(&idx)
}

/// Arm-wise resample with a case design of full rank; `None` after the redraw cap.
fn resample_dataset(data: &BiomarkerDataset, rng: &mut StreamRng) -> (Option<BiomarkerDataset>, usize) {
    for attempt in 0..REDRAWS {
        let cases = resample(&data.cases, rng);
        let controls = resample(&data.controls, rng);
        if crate::qreg::full_rank(&cases) {
            let d = BiomarkerDataset {
                cases,
                controls,
                covariate_names: data.covariate_names.clone(),
                marker_name: data.marker_name.clone(),
            };
            return (Some(d), attempt);
        }
    }
    (None, REDRAWS)
}

/// Empirical covariance of replicate vectors (denominator `B − 1`).
fn empirical_covariance(reps: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = reps[0].len();
    let b = reps.len() as f64;
    let mean: Vec<f64> = (0..k).map(|c| reps.iter().map(|r| r[c]).sum::<f64>() / b).collect();
    let mut cov = vec![vec![0.0; k]; k];
    for r in reps {
        for i in 0..k {
            for j in 0..k {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    let denom = (b - 1.0).max(1.0);
    cov.iter_mut().flatten().for_each(|v| *v /= denom);
    cov
}

/// Bootstrap covariance with cases and controls resampled separately.
pub fn bootstrap_variance(data: &BiomarkerDataset, rho: f64, replicates: usize, seed: u64) -> Result<CovarianceEstimate> {
    if replicates < 2 {
        return Err(QrocError::Invalid("bootstrap needs at least 2 replicates".into()));
    }
    let fit = fit_quantile(&data.cases, rho)?;
    bootstrap_variance_at(data, &fit, replicates, seed)
}

pub fn bootstrap_variance_at(
    data: &BiomarkerDataset,
    fit: &QuantileSolution,
    replicates: usize,
    seed: u64,
) -> Result<CovarianceEstimate> {
    if replicates < 2 {
        return Err(QrocError::Invalid("bootstrap needs at least 2 replicates".into()));
    }
    let rho = fit.rho;
    let draws: Vec<Result<(Vec<f64>, usize)>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b as u64);
            let (d, redrawn) = resample_dataset(data, &mut rng);
            let d = d.ok_or_else(|| {
                QrocError::Inference(format!("bootstrap replicate {b} stayed rank deficient"))
            })?;
            let tracker = QuantileTracker::new(&d.cases, rho, Some(&fit.beta))?;
            let mut nu = tracker.beta().to_vec();
            nu.push(specificity_at(&d.controls, &nu)?);
            Ok((nu, redrawn))
        })
        .collect();
    let mut reps = Vec::with_capacity(replicates);
    let mut redrawn = 0;
    for d in draws {
        let (nu, r) = d?;
        redrawn += r;
        reps.push(nu);
    }
    let cov = empirical_covariance(&reps);
    let m = fit.beta.len();
    let mut estimate = fit.beta.clone();
    estimate.push(specificity_at(&data.controls, &fit.beta)?);
    Ok(CovarianceEstimate {
        se_phi: cov[m][m].max(0.0).sqrt(),
        matrix: cov,
        method: VarianceMethod::Bootstrap,
        estimate,
        eigen_root: false,
        redrawn,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointwiseCi {
    pub wald: Interval,
    /// `None` when `φ̂ ∈ {0, 1}` and the logit scale is undefined.
    pub logit: Option<Interval>,
}

impl PointwiseCi {
    /// Logit interval, or the Wald interval where the logit one is undefined.
    pub fn logit_or_wald(&self) -> Interval {
        self.logit.unwrap_or(self.wald)
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn expit(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Wald interval clipped to `[0, 1]` and the back-transformed logit interval.
pub fn pointwise_ci(phi_hat: f64, se_phi: f64, level: f64) -> Result<PointwiseCi> {
    if !(0.0..=1.0).contains(&phi_hat) || se_phi < 0.0 || !se_phi.is_finite() {
        return Err(QrocError::Invalid(format!(
            "interval needs φ̂ in [0, 1] and a finite non-negative SE (got {phi_hat}, {se_phi})"
        )));
    }
    let z = z_quantile(level)?;
    let wald = Interval {
        lower: (phi_hat - z * se_phi).max(0.0),
        upper: (phi_hat + z * se_phi).min(1.0),
    };
    let logit = (phi_hat > 0.0 && phi_hat < 1.0).then(|| {
        let center = logit(phi_hat);
        let half = z * se_phi / (phi_hat * (1.0 - phi_hat));
        Interval {
            lower: expit(center - half),
            upper: expit(center + half),
        }
    });
    Ok(PointwiseCi { wald, logit })
}

/// Which curve the band is centred on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandCenter {
    /// Pointwise plug-in estimates at the grid.
    #[default]
    Raw,
    /// ROC-based monotonized curve; bootstrap curves are monotonized the same way.
    RocMonotone(ScanDirection),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandEstimate {
    pub grid: Vec<f64>,
    pub center: Vec<f64>,
    pub se: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub eta: f64,
    pub level: f64,
    /// Grid points with zero bootstrap SE, left out of the sup statistic.
    pub zero_se: Vec<usize>,
}

impl BandEstimate {
    pub fn covers(&self, truth: impl Fn(f64) -> f64) -> bool {
        self.grid
            .iter()
            .enumerate()
            .all(|(k, &r)| {
                let t = truth(r);
                self.lower[k] <= t && t <= self.upper[k]
            })
    }
}

/// Pointwise estimates `φ̂(ρ)` at each grid level, tracking the vertex along
/// the grid.
pub fn curve_on_grid(data: &BiomarkerDataset, grid: &[f64], start: Option<&[f64]>) -> Result<Vec<f64>> {
    let Some(&first) = grid.first() else {
        return Ok(Vec::new());
    };
    let mut tracker = QuantileTracker::new(&data.cases, first, start)?;
    let mut out = Vec::with_capacity(grid.len());
    for &rho in grid {
        let beta = tracker.refit(rho)?;
        out.push(count_negative(&data.controls, beta) as f64 / data.controls.len() as f64);
    }
    Ok(out)
}

fn monotone_curve_on_grid(data: &BiomarkerDataset, grid: &[f64], dir: ScanDirection) -> Result<Vec<f64>> {
    let (lo, hi) = default_path_domain(&data.cases);
    let lo = lo.min(grid[0]);
    let hi = hi.max(*grid.last().expect("non-empty grid"));
    let path = fit_path(&data.cases, lo, hi)?;
    let roc = adjusted_roc_on_knots(&path, &data.controls)?;
    let mono = monotonize_roc(&roc, dir);
    Ok(grid.iter().map(|&r| mono.eval(r)).collect())
}

/// `⌈level · B⌉`-th smallest value.
fn upper_order_statistic(mut v: Vec<f64>, level: f64) -> f64 {
    v.sort_unstable_by(f64::total_cmp);
    let k = ((level * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[k - 1]
}

/// Equal-precision simultaneous band `φ̂(ρ) ± η SE{φ̂(ρ)}` from the bootstrap.
pub fn confidence_band(
    data: &BiomarkerDataset,
    grid: &[f64],
    replicates: usize,
    level: f64,
    seed: u64,
    center: BandCenter,
) -> Result<BandEstimate> {
    check_level(level)?;
    if replicates < 100 {
        return Err(QrocError::Invalid(format!(
            "a confidence band needs at least 100 bootstrap replicates, got {replicates}"
        )));
    }
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(QrocError::Invalid("band grid must be non-empty and strictly increasing".into()));
    }
    let curve = |d: &BiomarkerDataset, start: Option<&[f64]>| -> Result<Vec<f64>> {
        match center {
            BandCenter::Raw => curve_on_grid(d, grid, start),
            BandCenter::RocMonotone(dir) => monotone_curve_on_grid(d, grid, dir),
        }
    };
    let first = fit_quantile(&data.cases, grid[0])?;
    let center_vals = curve(data, Some(&first.beta))?;
    let boot: Vec<Result<Vec<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, b as u64);
            let d = resample_dataset(data, &mut rng).0.ok_or_else(|| {
                QrocError::Inference(format!("bootstrap replicate {b} stayed rank deficient"))
            })?;
            curve(&d, Some(&first.beta))
        })
        .collect();
    let boot: Vec<Vec<f64>> = boot.into_iter().collect::<Result<_>>()?;

    let bf = replicates as f64;
    let g = grid.len();
    let mut se = vec![0.0; g];
    for (k, s) in se.iter_mut().enumerate() {
        let mean = boot.iter().map(|c| c[k]).sum::<f64>() / bf;
        let var = boot.iter().map(|c| (c[k] - mean).powi(2)).sum::<f64>() / (bf - 1.0);
        *s = var.sqrt();
    }
    let zero_se: Vec<usize> = (0..g).filter(|&k| se[k] <= 0.0).collect();
    let sups: Vec<f64> = boot
        .iter()
        .map(|c| {
            (0..g)
                .filter(|&k| se[k] > 0.0)
                .map(|k| (c[k] - center_vals[k]).abs() / se[k])
                .fold(0.0, f64::max)
        })
        .collect();
    let eta = upper_order_statistic(sups, level);
    let lower = (0..g).map(|k| (center_vals[k] - eta * se[k]).max(0.0)).collect();
    let upper = (0..g).map(|k| (center_vals[k] + eta * se[k]).min(1.0)).collect();
    Ok(BandEstimate {
        grid: grid.to_vec(),
        center: center_vals,
        se,
        lower,
        upper,
        eta,
        level,
        zero_se,
    })
}

/// `[0.1, 0.9]` in steps of 0.01, restricted to `[lo, hi]`.
pub fn default_band_grid(lo: f64, hi: f64) -> Vec<f64> {
    (10..=90)
        .map(|k| k as f64 / 100.0)
        .filter(|&r| r >= lo && r <= hi)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tiny() -> BiomarkerDataset {
        BiomarkerDataset::unnamed(
            Sample::markers_only(vec![1.0, 2.0, 3.0]).unwrap(),
            Sample::markers_only(vec![1.5, 2.5]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn gn_hand_count() {
        let d = tiny();
        // β = 2: cases above {3} → (1 − 3·0.5)/3; controls ≤ 2: {1.5} → 1/2 − 0.25
        let g = gn_eval(&[2.0, 0.25], &d, 0.5).unwrap();
        assert_relative_eq!(g[0], -1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(g[1], 0.25, epsilon = 1e-15);
        let shifted = gn_eval(&[2.0, 0.35], &d, 0.5).unwrap();
        assert_relative_eq!(shifted[1], g[1] - 0.1, epsilon = 1e-15);
        assert!(gn_eval(&[2.0], &d, 0.5).is_err());
    }

    #[test]
    fn sigma_case_block_at_median_is_quarter_gram() {
        let z: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 7.0]).collect();
        let cases = Sample::new((0..20).map(|i| (i as f64).sin()).collect(), &z).unwrap();
        let controls = Sample::new(vec![0.0, 1.0], &[vec![0.1], vec![0.2]]).unwrap();
        let d = BiomarkerDataset::unnamed(cases.clone(), controls).unwrap();
        let s = sigma_hat(&d, &[0.1, 0.2], 0.5, 0.5).unwrap();
        let n = 20.0;
        for r in 0..2 {
            for c in 0..2 {
                let gram: f64 = (0..20).map(|i| cases.row(i)[r] * cases.row(i)[c]).sum();
                assert_relative_eq!(s[(r, c)], 0.25 * gram / (n * n), epsilon = 1e-15);
            }
        }
        assert_eq!(s[(0, 2)], 0.0);
    }

    #[test]
    fn degenerate_phi_has_zero_control_block() {
        let d = tiny();
        let s = sigma_hat(&d, &[10.0], 1.0, 0.5).unwrap();
        assert_eq!(s[(1, 1)], 0.0);
    }

    #[test]
    fn factor_handles_singular_sigma() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let (c, eig) = factor(&s);
        assert!(eig);
        let back = &c * c.transpose();
        assert!((back - s).abs().max() < 1e-12);
        let (z, _) = factor(&DMatrix::zeros(3, 3));
        assert_eq!(z, DMatrix::zeros(3, 3));
    }

    #[test]
    fn cholesky_reconstructs() {
        let s = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.0, 2.0, 3.0, 0.0, 0.0, 0.0, 0.5]);
        let (c, eig) = factor(&s);
        assert!(!eig);
        assert!(((&c * c.transpose()) - s).abs().max() < 1e-14);
        assert_eq!(c[(0, 1)], 0.0);
    }

    #[test]
    fn wald_and_logit_intervals() {
        let ci = pointwise_ci(0.5, 0.1, 0.95).unwrap();
        assert_relative_eq!(ci.wald.lower, 0.5 - 0.195_996_398_454, epsilon = 1e-9);
        assert_relative_eq!(ci.wald.upper, 0.5 + 0.195_996_398_454, epsilon = 1e-9);
        let zero = pointwise_ci(0.3, 0.0, 0.95).unwrap();
        assert_eq!(zero.wald, Interval { lower: 0.3, upper: 0.3 });
        let l = zero.logit.unwrap();
        assert_relative_eq!(l.lower, 0.3, epsilon = 1e-15);
        assert_relative_eq!(l.upper, 0.3, epsilon = 1e-15);
        let edge = pointwise_ci(0.0, 0.05, 0.95).unwrap();
        assert!(edge.logit.is_none());
        assert_eq!(edge.wald.lower, 0.0);
    }

    #[test]
    fn logit_interval_round_trip() {
        // implied SE from a reported logit interval, then back again
        let (phi, lo, hi) = (0.196_f64, 0.108_f64, 0.330_f64);
        let z = z_quantile(0.95).unwrap();
        let half = (logit(hi) - logit(lo)) / 2.0;
        let se = half * phi * (1.0 - phi) / z;
        let ci = pointwise_ci(phi, se, 0.95).unwrap().logit.unwrap();
        // the reported centre is rounded, so the bounds agree to rounding
        assert!((ci.lower - lo).abs() < 2e-3, "{}", ci.lower);
        assert!((ci.upper - hi).abs() < 2e-3, "{}", ci.upper);
        let centre = expit((logit(ci.lower) + logit(ci.upper)) / 2.0);
        assert_relative_eq!(centre, phi, epsilon = 1e-12);
    }

    #[test]
    fn z_for_95() {
        assert_relative_eq!(z_quantile(0.95).unwrap(), 1.959_964, epsilon = 1e-6);
    }

    #[test]
    fn order_statistic_convention() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(upper_order_statistic(v.clone(), 0.95), 95.0);
        assert_eq!(upper_order_statistic(v, 0.951), 96.0);
    }

    #[test]
    fn zero_sigma_gives_zero_covariance() {
        // every control far below, every case indicator identical at ρ = 0.5 is
        // impossible, so use degenerate controls only: the φ column vanishes
        let d = BiomarkerDataset::unnamed(
            Sample::markers_only(vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
            Sample::markers_only(vec![-10.0, -11.0]).unwrap(),
        )
        .unwrap();
        let cov = sample_variance(&d, 0.5).unwrap();
        assert_eq!(cov.estimate[1], 1.0);
        // φ moves only through β, which the case column perturbs
        assert!(cov.se_phi >= 0.0);
    }
}
