//! Monotonicity restoration by breakpoint interpolation.
//!
//! Both variants scan an estimated step process in one direction, keep the
//! points that respect the required ordering relative to the last kept point,
//! and bridge the skipped stretches by linear interpolation between kept
//! neighbours. A step is represented by its upper end in `ρ`, which is its
//! lower end on the case quantile-level scale `1 − ρ`. The regression-based variant works on the coefficient path
//! (ordering checked through the implied thresholds at every observed case
//! covariate row); the ROC-based variant works on the curve itself.

use serde::{Deserialize, Serialize};

use crate::qreg::CoefficientPath;
use crate::roc::{interpolate, CurveForm, RocCurve};
use crate::sample::{dot, CaseSample};

/// Order in which points are visited. The first visited point is always kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanDirection {
    /// From low to high sensitivity.
    AscendingRho,
    /// From high to low sensitivity, i.e. upward in the case quantile level.
    #[default]
    DescendingRho,
}

impl ScanDirection {
    fn order(self, len: usize) -> Box<dyn Iterator<Item = usize>> {
        match self {
            ScanDirection::AscendingRho => Box::new(0..len),
            ScanDirection::DescendingRho => Box::new((0..len).rev()),
        }
    }
}

/// Coefficient process with non-increasing thresholds in `ρ` at every observed
/// case covariate row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonePath {
    /// Kept knots, increasing.
    pub respecting_breakpoints: Vec<f64>,
    /// Raw coefficients at the kept knots.
    pub kept_betas: Vec<Vec<f64>>,
    /// Upper ends of all steps of the source path.
    pub grid: Vec<f64>,
    /// Restored coefficients at every knot of `grid`.
    pub betas: Vec<Vec<f64>>,
    pub rho_lo: f64,
    pub rho_hi: f64,
}

impl MonotonePath {
    /// Restored coefficients at `rho` (linear between kept knots).
    pub fn eval(&self, rho: f64) -> Vec<f64> {
        let ks = &self.respecting_breakpoints;
        let k = ks.partition_point(|&g| g <= rho);
        if k == 0 {
            return self.kept_betas[0].clone();
        }
        if k == ks.len() {
            return self.kept_betas[k - 1].clone();
        }
        let w = (rho - ks[k - 1]) / (ks[k] - ks[k - 1]);
        self.kept_betas[k - 1]
            .iter()
            .zip(&self.kept_betas[k])
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }

    /// The restored process as a step path whose steps end at `grid`.
    pub fn to_path(&self) -> CoefficientPath {
        CoefficientPath {
            rho_lo: self.rho_lo,
            rho_hi: self.rho_hi,
            breakpoints: self.grid[..self.grid.len() - 1].to_vec(),
            betas: self.betas.clone(),
            fallback: false,
        }
    }
}

/// Piecewise-linear ROC curve, non-increasing in `ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneRoc {
    pub grid: Vec<f64>,
    pub phi: Vec<f64>,
    /// Grid points kept by the scan.
    pub kept: Vec<usize>,
}

impl MonotoneRoc {
    pub fn eval(&self, rho: f64) -> f64 {
        interpolate(&self.grid, &self.phi, rho)
    }

    pub fn to_curve(&self, role_swapped: bool) -> RocCurve {
        RocCurve {
            grid: self.grid.clone(),
            phi: self.phi.clone(),
            form: CurveForm::PiecewiseLinear,
            segment_end: None,
            role_swapped,
        }
    }
}

/// Indices kept by a scan in `dir` where `respects(candidate, last_kept)`
/// decides membership; returned in increasing order.
fn scan(len: usize, dir: ScanDirection, mut respects: impl FnMut(usize, usize) -> bool) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for k in dir.order(len) {
        match kept.last() {
            None => kept.push(k),
            Some(&last) => {
                if respects(k, last) {
                    kept.push(k);
                }
            }
        }
    }
    kept.sort_unstable();
    kept
}

/// Sampled values at every grid point by linear interpolation between kept points.
fn bridge<T>(grid: &[f64], kept: &[usize], value: impl Fn(usize) -> T, lerp: impl Fn(&T, &T, f64) -> T) -> Vec<T>
where
    T: Clone,
{
    let mut out = Vec::with_capacity(grid.len());
    let mut pos = 0usize;
    for (k, &g) in grid.iter().enumerate() {
        while pos + 1 < kept.len() && kept[pos + 1] <= k {
            pos += 1;
        }
        let a = kept[pos];
        if k <= a || pos + 1 == kept.len() {
            out.push(value(a));
        } else {
            let b = kept[pos + 1];
            let w = (g - grid[a]) / (grid[b] - grid[a]);
            out.push(lerp(&value(a), &value(b), w));
        }
    }
    out
}

/// Regression-based restoration of the coefficient path.
pub fn monotonize_path(
    path: &CoefficientPath,
    case_covariates: &CaseSample,
    dir: ScanDirection,
) -> MonotonePath {
    let mut grid = path.breakpoints.clone();
    grid.push(path.rho_hi);
    let rows: Vec<&[f64]> = (0..case_covariates.len()).map(|i| case_covariates.row(i)).collect();
    let thresholds: Vec<Vec<f64>> = path
        .betas
        .iter()
        .map(|b| rows.iter().map(|r| dot(r, b)).collect())
        .collect();
    let kept = scan(grid.len(), dir, |k, last| {
        // thresholds must not rise with ρ
        let (lo, hi) = if k > last { (last, k) } else { (k, last) };
        thresholds[hi]
            .iter()
            .zip(&thresholds[lo])
            .all(|(at_hi, at_lo)| at_hi <= at_lo)
    });
    let lerp = |a: &Vec<f64>, b: &Vec<f64>, w: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + w * (y - x)).collect()
    };
    let betas = bridge(&grid, &kept, |k| path.betas[k].clone(), lerp);
    MonotonePath {
        respecting_breakpoints: kept.iter().map(|&k| grid[k]).collect(),
        kept_betas: kept.iter().map(|&k| path.betas[k].clone()).collect(),
        grid,
        betas,
        rho_lo: path.rho_lo,
        rho_hi: path.rho_hi,
    }
}

/// ROC-based restoration of the estimated curve.
pub fn monotonize_roc(roc: &RocCurve, dir: ScanDirection) -> MonotoneRoc {
    let phi = &roc.phi;
    let grid = match roc.segment_end {
        Some(end) => roc.grid[1..].iter().copied().chain(std::iter::once(end)).collect(),
        None => roc.grid.clone(),
    };
    let kept = scan(roc.len(), dir, |k, last| {
        let (lo, hi) = if k > last { (last, k) } else { (k, last) };
        phi[hi] <= phi[lo]
    });
    let values = bridge(&grid, &kept, |k| phi[k], |a, b, w| a + w * (b - a));
    MonotoneRoc {
        grid,
        phi: values,
        kept,
    }
}
