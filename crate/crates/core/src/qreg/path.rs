//! Parametric sweep of the quantile fit over a sensitivity interval.
//!
//! Along the sweep the basic dual weights are affine in `ρ`:
//! `a_h(ρ) = X_h⁻ᵀ (ρ Σ_i x_i − Σ_{upper} x_i)`. The coefficients stay put until
//! one weight reaches 0 or 1; that row then leaves the basis and a single
//! ratio-test pivot brings in the next interpolated case.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::simplex::{Vertex, WEIGHT_TOL};
use super::{check_level, fit_quantile, fit_quantile_warm, lp};
use crate::error::{QrocError, Result};
use crate::sample::CaseSample;

/// Right-continuous step function `ρ ↦ β̂(ρ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientPath {
    pub rho_lo: f64,
    pub rho_hi: f64,
    /// Strictly increasing, inside `(rho_lo, rho_hi)`.
    pub breakpoints: Vec<f64>,
    /// `betas[0]` holds on `[rho_lo, breakpoints[0])`, `betas[k]` from
    /// `breakpoints[k - 1]` on.
    pub betas: Vec<Vec<f64>>,
    /// Set when pivoting cycled and the path was rebuilt from pointwise fits on
    /// a grid; `breakpoints` are then grid points.
    pub fallback: bool,
}

impl CoefficientPath {
    /// Coefficients in force at `rho`.
    pub fn eval(&self, rho: f64) -> &[f64] {
        &self.betas[self.segment(rho)]
    }

    pub fn segment(&self, rho: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= rho)
    }

    /// Left end of every segment: `rho_lo` followed by the breakpoints.
    pub fn knots(&self) -> Vec<f64> {
        std::iter::once(self.rho_lo)
            .chain(self.breakpoints.iter().copied())
            .collect()
    }

    pub fn contains(&self, rho: f64) -> bool {
        rho >= self.rho_lo && rho <= self.rho_hi
    }

    pub fn ncols(&self) -> usize {
        self.betas[0].len()
    }
}

#[derive(Debug, Clone)]
pub struct PathOptions {
    /// Grid size used when the sweep has to be abandoned.
    pub fallback_grid: usize,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self { fallback_grid: 999 }
    }
}

/// `[0.02, 0.98] ∩ [(p + 2)/n, 1 − (p + 2)/n]`.
pub fn default_path_domain(cases: &CaseSample) -> (f64, f64) {
    let edge = (cases.ncov() + 2) as f64 / cases.len() as f64;
    (0.02_f64.max(edge), 0.98_f64.min(1.0 - edge))
}

pub fn fit_path(cases: &CaseSample, rho_lo: f64, rho_hi: f64) -> Result<CoefficientPath> {
    fit_path_with(cases, rho_lo, rho_hi, &PathOptions::default())
}

pub fn fit_path_with(
    cases: &CaseSample,
    rho_lo: f64,
    rho_hi: f64,
    opts: &PathOptions,
) -> Result<CoefficientPath> {
    check_level(rho_lo)?;
    check_level(rho_hi)?;
    if rho_lo >= rho_hi {
        return Err(QrocError::Invalid(format!(
            "empty path domain [{rho_lo}, {rho_hi}]"
        )));
    }
    let start = fit_quantile(cases, rho_lo)?;
    match sweep(cases, rho_lo, rho_hi, &start.basis, &start.upper)? {
        Some(path) => Ok(path),
        None => grid_path(cases, rho_lo, rho_hi, opts.fallback_grid),
    }
}

/// Runs the sweep; `None` when a basis recurs more than `n` times.
fn sweep(
    cases: &CaseSample,
    rho_lo: f64,
    rho_hi: f64,
    basis: &[usize],
    upper: &[bool],
) -> Result<Option<CoefficientPath>> {
    let lp = lp(cases);
    let n = lp.n();
    let m = lp.m;
    let sx = lp.column_sums();
    let mut v = Vertex::warm(&lp, basis.to_vec(), upper)?;
    let mut path = CoefficientPath {
        rho_lo,
        rho_hi,
        breakpoints: Vec::new(),
        betas: vec![v.beta.clone()],
        fallback: false,
    };
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut rho = rho_lo;
    loop {
        let s = v.upper_sum().to_vec();
        let slope = v.solve_transposed(&sx);
        let neg_s: Vec<f64> = s.iter().map(|x| -x).collect();
        let base = v.solve_transposed(&neg_s);

        // next level at which a basic weight reaches a bound
        let mut next: Option<(f64, usize, f64)> = None;
        for j in 0..m {
            let (dv, a) = (slope[j], base[j] + rho * slope[j]);
            let hit = if dv > 1e-14 {
                if a >= 1.0 - WEIGHT_TOL {
                    Some((rho, -1.0))
                } else {
                    Some(((1.0 - base[j]) / dv, -1.0))
                }
            } else if dv < -1e-14 {
                if a <= WEIGHT_TOL {
                    Some((rho, 1.0))
                } else {
                    Some((-base[j] / dv, 1.0))
                }
            } else {
                None
            };
            if let Some((r, sign)) = hit {
                let r = r.max(rho);
                let better = match next {
                    None => true,
                    Some((br, bj, _)) => r < br || (r == br && v.basis[j] < v.basis[bj]),
                };
                if better {
                    next = Some((r, j, sign));
                }
            }
        }
        let Some((r, j, sign)) = next else { break };
        if r >= rho_hi {
            break;
        }
        rho = r;
        let before = v.beta.clone();
        v.pivot(&lp, j, sign, None)?;

        let mut key = v.basis.clone();
        key.sort_unstable();
        let count = seen.entry(key).or_insert(0);
        *count += 1;
        if *count > n {
            return Ok(None);
        }

        if v.beta != before {
            if path.breakpoints.last().is_some_and(|&b| b >= rho) || rho <= rho_lo {
                *path.betas.last_mut().expect("non-empty") = v.beta.clone();
            } else {
                path.breakpoints.push(rho);
                path.betas.push(v.beta.clone());
            }
        }
    }
    Ok(Some(path))
}

/// Pointwise fits on an even grid, warm-started along the grid.
fn grid_path(cases: &CaseSample, rho_lo: f64, rho_hi: f64, points: usize) -> Result<CoefficientPath> {
    let points = points.max(2);
    let step = (rho_hi - rho_lo) / points as f64;
    let first = fit_quantile(cases, rho_lo)?;
    let mut betas = vec![first.beta.clone()];
    let mut breakpoints = Vec::with_capacity(points);
    let mut guess = first.beta;
    for k in 1..points {
        let rho = rho_lo + step * k as f64;
        let fit = fit_quantile_warm(cases, rho, &guess)?;
        breakpoints.push(rho);
        guess.clone_from(&fit.beta);
        betas.push(fit.beta);
    }
    Ok(CoefficientPath {
        rho_lo,
        rho_hi,
        breakpoints,
        betas,
        fallback: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qreg::objective;
    use crate::sample::Sample;

    fn toy(n: usize) -> Sample {
        let z: Vec<Vec<f64>> = (0..n).map(|i| vec![(i as f64 * 0.613).sin().abs()]).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| (i as f64 * 1.37).sin() * (1.0 + z[i][0]) + 2.0 * z[i][0])
            .collect();
        Sample::new(y, &z).unwrap()
    }

    #[test]
    fn intercept_only_path_steps_through_order_statistics() {
        let s = Sample::markers_only(vec![5.0, 1.0, 4.0, 2.0, 3.0, 6.0, 8.0, 7.0, 9.0, 10.0]).unwrap();
        let path = fit_path(&s, 0.15, 0.85).unwrap();
        // (1 − ρ)-quantile steps down one order statistic every 0.1
        for (k, &b) in path.breakpoints.iter().enumerate() {
            assert!((b - (0.2 + 0.1 * k as f64)).abs() < 1e-12, "{b}");
        }
        assert_eq!(path.betas.first().unwrap(), &vec![9.0]);
        assert_eq!(path.betas.last().unwrap(), &vec![2.0]);
    }

    #[test]
    fn path_matches_pointwise_objectives() {
        let s = toy(60);
        let path = fit_path(&s, 0.05, 0.95).unwrap();
        assert!(!path.fallback);
        for k in 1..95 {
            let rho = 0.05 + 0.9 * k as f64 / 95.0;
            let direct = fit_quantile(&s, rho).unwrap().objective;
            let along = objective(&s, path.eval(rho), rho);
            assert!((along - direct).abs() <= 1e-9 * direct.max(1.0), "rho {rho}: {along} vs {direct}");
        }
    }

    #[test]
    fn grid_fallback_is_flagged() {
        let s = toy(30);
        let path = grid_path(&s, 0.2, 0.8, 12).unwrap();
        assert!(path.fallback);
        assert_eq!(path.betas.len(), path.breakpoints.len() + 1);
    }

    #[test]
    fn rejects_bad_domain() {
        let s = toy(30);
        assert!(fit_path(&s, 0.6, 0.4).is_err());
        assert!(fit_path(&s, 0.0, 0.4).is_err());
        let one = Sample::markers_only(vec![1.0]).unwrap();
        assert!(fit_path(&one, 0.2, 0.8).is_err());
    }
}
