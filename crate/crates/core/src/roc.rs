//! Pooled specificity at controlled sensitivity and the covariate-adjusted ROC
//! curve.
//!
//! Tie conventions follow the indicators of the estimator: a control counts as
//! test-negative when `M₀ ≤ threshold`, a case as test-positive when
//! `M₁ > threshold`.

use serde::{Deserialize, Serialize};

use crate::error::{QrocError, Result};
use crate::qreg::{CoefficientPath, QuantileSolution};
use crate::sample::{dot, BiomarkerDataset, ControlSample, Sample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecificityEstimate {
    pub rho: f64,
    pub phi: f64,
    pub beta: QuantileSolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveForm {
    Step,
    PiecewiseLinear,
}

/// `ρ ↦ φ̂(ρ)` on an increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub grid: Vec<f64>,
    pub phi: Vec<f64>,
    pub form: CurveForm,
    /// Right end of the last step when every grid point opens a step that
    /// lasts until the next one; `None` for curves sampled at their grid.
    pub segment_end: Option<f64>,
    pub role_swapped: bool,
}

impl RocCurve {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Value at `rho`: right-continuous lookup for step curves, linear
    /// interpolation otherwise. Constant beyond the grid ends.
    pub fn eval(&self, rho: f64) -> f64 {
        let k = self.grid.partition_point(|&g| g <= rho);
        if k == 0 {
            return self.phi[0];
        }
        match self.form {
            CurveForm::Step => self.phi[k - 1],
            CurveForm::PiecewiseLinear => interpolate(&self.grid, &self.phi, rho),
        }
    }
}

/// Linear interpolation on an increasing grid, constant outside it.
pub(crate) fn interpolate(grid: &[f64], values: &[f64], x: f64) -> f64 {
    let k = grid.partition_point(|&g| g <= x);
    if k == 0 {
        return values[0];
    }
    if k == grid.len() {
        return values[k - 1];
    }
    let (x0, x1) = (grid[k - 1], grid[k]);
    let w = (x - x0) / (x1 - x0);
    values[k - 1] + w * (values[k] - values[k - 1])
}

/// Number of controls with `M₀ⱼ ≤ (1, z₀ⱼ)ᵀβ`.
pub fn count_negative(controls: &ControlSample, beta: &[f64]) -> usize {
    controls
        .fitted_all(beta)
        .iter()
        .zip(controls.markers())
        .filter(|(f, m)| m <= f)
        .count()
}

/// Plug-in specificity `n₀⁻¹ Σⱼ I{M₀ⱼ ≤ (1, z₀ⱼ)ᵀβ}`.
pub fn specificity_at(controls: &ControlSample, beta: &[f64]) -> Result<f64> {
    if beta.len() != controls.ncols() {
        return Err(QrocError::Shape(format!(
            "coefficients of length {} for {} control covariates",
            beta.len(),
            controls.ncov()
        )));
    }
    Ok(count_negative(controls, beta) as f64 / controls.len() as f64)
}

pub fn pooled_specificity(
    controls: &ControlSample,
    beta: &QuantileSolution,
) -> Result<SpecificityEstimate> {
    Ok(SpecificityEstimate {
        rho: beta.rho,
        phi: specificity_at(controls, &beta.beta)?,
        beta: beta.clone(),
    })
}

/// Covariate-specific thresholds `(1, z)ᵀβ` for each grid row `z`.
pub fn covariate_thresholds(beta: &[f64], covariate_grid: &[Vec<f64>]) -> Result<Vec<f64>> {
    covariate_grid
        .iter()
        .enumerate()
        .map(|(k, z)| {
            if z.len() + 1 != beta.len() {
                return Err(QrocError::Shape(format!(
                    "grid row {k} has {} covariates, model has {}",
                    z.len(),
                    beta.len() - 1
                )));
            }
            Ok(beta[0] + dot(&beta[1..], z))
        })
        .collect()
}

/// Flags grid rows with a covariate outside the range observed in `reference`.
pub fn extrapolated(reference: &Sample, covariate_grid: &[Vec<f64>]) -> Vec<bool> {
    let ranges = reference.covariate_ranges();
    covariate_grid
        .iter()
        .map(|z| {
            z.iter()
                .zip(&ranges)
                .any(|(v, (lo, hi))| v < lo || v > hi)
        })
        .collect()
}

/// Adjusted ROC curve on the path's own knots, which makes the step curve exact.
pub fn adjusted_roc_on_knots(path: &CoefficientPath, controls: &ControlSample) -> Result<RocCurve> {
    if path.ncols() != controls.ncols() {
        return Err(QrocError::Shape("path and controls disagree on covariates".into()));
    }
    let n0 = controls.len() as f64;
    let phi = path
        .betas
        .iter()
        .map(|b| count_negative(controls, b) as f64 / n0)
        .collect();
    Ok(RocCurve {
        grid: path.knots(),
        phi,
        form: CurveForm::Step,
        segment_end: Some(path.rho_hi),
        role_swapped: false,
    })
}

pub fn adjusted_roc(
    path: &CoefficientPath,
    controls: &ControlSample,
    grid: &[f64],
) -> Result<RocCurve> {
    if path.ncols() != controls.ncols() {
        return Err(QrocError::Shape("path and controls disagree on covariates".into()));
    }
    if let Some(&bad) = grid.iter().find(|&&r| !path.contains(r)) {
        return Err(QrocError::Domain(bad));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(QrocError::Invalid("ROC grid must be strictly increasing".into()));
    }
    let n0 = controls.len() as f64;
    let phi = grid
        .iter()
        .map(|&r| count_negative(controls, path.eval(r)) as f64 / n0)
        .collect();
    Ok(RocCurve {
        grid: grid.to_vec(),
        phi,
        form: CurveForm::Step,
        segment_end: None,
        role_swapped: false,
    })
}

/// Exchanges cases and controls and negates markers, turning specificity at
/// controlled sensitivity into sensitivity at controlled specificity.
pub fn swap_roles(data: &BiomarkerDataset) -> BiomarkerDataset {
    BiomarkerDataset {
        cases: data.controls.map_markers(|m| -m),
        controls: data.cases.map_markers(|m| -m),
        covariate_names: data.covariate_names.clone(),
        marker_name: data.marker_name.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qreg::{fit_path, fit_quantile};

    fn sol(beta: Vec<f64>) -> QuantileSolution {
        let cases = Sample::markers_only(vec![0.0, 1.0, 2.0]).unwrap();
        let mut s = fit_quantile(&cases, 0.5).unwrap();
        s.beta = beta;
        s
    }

    #[test]
    fn counts_controls_at_or_below_threshold() {
        let controls = Sample::markers_only(vec![0.0, 10.0]).unwrap();
        assert_eq!(pooled_specificity(&controls, &sol(vec![5.0])).unwrap().phi, 0.5);
        assert_eq!(pooled_specificity(&controls, &sol(vec![10.0])).unwrap().phi, 1.0);
        assert_eq!(pooled_specificity(&controls, &sol(vec![11.0])).unwrap().phi, 1.0);
        assert_eq!(pooled_specificity(&controls, &sol(vec![-1.0])).unwrap().phi, 0.0);
        let wide = Sample::new(vec![1.0], &[vec![1.0]]).unwrap();
        assert!(pooled_specificity(&wide, &sol(vec![1.0])).is_err());
    }

    #[test]
    fn thresholds_are_affine() {
        let t = covariate_thresholds(&[2.0, 1.0], &[vec![0.0], vec![3.0]]).unwrap();
        assert_eq!(t, vec![2.0, 5.0]);
        assert!(covariate_thresholds(&[2.0, 1.0], &[vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn extrapolation_flags() {
        let s = Sample::new(vec![0.0, 0.0], &[vec![1.0], vec![3.0]]).unwrap();
        assert_eq!(extrapolated(&s, &[vec![2.0], vec![0.5], vec![3.0]]), vec![false, true, false]);
    }

    #[test]
    fn single_point_roc_matches_pooled_specificity() {
        let z: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 * 0.3).sin()]).collect();
        let y: Vec<f64> = (0..40).map(|i| (i as f64 * 1.1).cos() + z[i][0]).collect();
        let cases = Sample::new(y, &z).unwrap();
        let controls = Sample::new(
            (0..30).map(|j| (j as f64 * 0.7).sin() - 1.0).collect(),
            &(0..30).map(|j| vec![(j as f64 * 0.2).cos()]).collect::<Vec<_>>(),
        )
        .unwrap();
        let path = fit_path(&cases, 0.1, 0.9).unwrap();
        let roc = adjusted_roc(&path, &controls, &[0.7]).unwrap();
        let direct = pooled_specificity(&controls, &fit_quantile(&cases, 0.7).unwrap()).unwrap();
        assert_eq!(roc.phi, vec![direct.phi]);
        assert!(adjusted_roc(&path, &controls, &[0.95]).is_err());
    }

    #[test]
    fn swap_is_an_involution() {
        let d = BiomarkerDataset::unnamed(
            Sample::new(vec![1.0, 2.0], &[vec![0.0], vec![1.0]]).unwrap(),
            Sample::new(vec![3.0], &[vec![0.5]]).unwrap(),
        )
        .unwrap();
        let s = swap_roles(&d);
        assert_eq!(s.cases.markers(), &[-3.0]);
        assert_eq!(swap_roles(&s), d);
    }

    #[test]
    fn interpolation_and_step_lookup() {
        let c = RocCurve {
            grid: vec![0.1, 0.2, 0.3],
            phi: vec![0.9, 0.7, 0.5],
            form: CurveForm::Step,
            segment_end: None,
            role_swapped: false,
        };
        assert_eq!(c.eval(0.25), 0.7);
        assert_eq!(c.eval(0.05), 0.9);
        let l = RocCurve { form: CurveForm::PiecewiseLinear, ..c };
        assert!((l.eval(0.25) - 0.6).abs() < 1e-12);
        assert_eq!(l.eval(0.5), 0.5);
    }
}
