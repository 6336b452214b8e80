//! Case-side quantile regression.
//!
//! At sensitivity level `ρ` the covariate-specific threshold is the `(1 − ρ)`-th
//! conditional quantile of the case marker, so every fit here minimizes the
//! pinball loss at `τ = 1 − ρ`. Solutions are always vertices: `p + 1` cases
//! are interpolated exactly.

mod path;
mod simplex;

use serde::{Deserialize, Serialize};

pub use path::{default_path_domain, fit_path, fit_path_with, CoefficientPath, PathOptions};

use crate::error::{QrocError, Result};
use crate::sample::{dot, CaseSample};
use simplex::{choose_basis, design_rank, is_exact_fit, Lp, Vertex};

/// Pinball loss `u (τ − I(u < 0))`.
pub fn check_loss(u: f64, tau: f64) -> Result<f64> {
    check_level(tau)?;
    Ok(check_loss_unchecked(u, tau))
}

pub(crate) fn check_loss_unchecked(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        u * (tau - 1.0)
    } else {
        u * tau
    }
}

/// Rejects levels outside the open unit interval.
pub fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(QrocError::Domain(level))
    }
}

/// `n⁻¹ Σ_i (1, z_i) [I{M_i > (1, z_i)ᵀβ} − ρ]`, evaluated exactly.
pub fn estimating_residual(cases: &CaseSample, beta: &[f64], rho: f64) -> Result<Vec<f64>> {
    if beta.len() != cases.ncols() {
        return Err(QrocError::Shape(format!(
            "coefficient vector has length {}, design has {} columns",
            beta.len(),
            cases.ncols()
        )));
    }
    let n = cases.len();
    let weight: Vec<f64> = cases
        .fitted_all(beta)
        .iter()
        .zip(cases.markers())
        .map(|(f, y)| if y > f { 1.0 - rho } else { -rho })
        .collect();
    let cols = cases.columns();
    Ok((0..cases.ncols())
        .map(|c| dot(&cols[c * n..(c + 1) * n], &weight) / n as f64)
        .collect())
}

/// A vertex solution at one sensitivity level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSolution {
    pub rho: f64,
    /// Intercept first.
    pub beta: Vec<f64>,
    /// Sup-norm of the estimating function at `beta`.
    pub residual_norm: f64,
    /// Indices of the `p + 1` interpolated cases.
    pub basis: Vec<usize>,
    /// Pinball objective at `τ = 1 − ρ`.
    pub objective: f64,
    pub pivots: usize,
    /// Bound status of every case in the final vertex (`true` = above the fit).
    #[serde(skip)]
    pub(crate) upper: Vec<bool>,
}

impl QuantileSolution {
    /// Residual bound `(p + 1) max‖(1, z_i)‖∞ / n` met by every vertex solution.
    pub fn residual_bound(cases: &CaseSample) -> f64 {
        cases.ncols() as f64 * cases.max_row_norm() / cases.len() as f64
    }

    /// Number of cases on the fitted hyperplane (within the exact-fit tolerance).
    pub fn exact_fits(&self, cases: &CaseSample) -> usize {
        (0..cases.len())
            .filter(|&i| is_exact_fit(cases.marker(i) - cases.fitted(i, &self.beta), cases.marker(i)))
            .count()
    }
}

/// Pinball objective `Σ_i ρ_τ(M_i − (1, z_i)ᵀβ)` at `τ = 1 − ρ`.
pub fn objective(cases: &CaseSample, beta: &[f64], rho: f64) -> f64 {
    let tau = 1.0 - rho;
    cases
        .fitted_all(beta)
        .iter()
        .zip(cases.markers())
        .map(|(f, y)| check_loss_unchecked(y - f, tau))
        .sum()
}

fn lp(cases: &CaseSample) -> Lp<'_> {
    Lp {
        y: cases.markers(),
        x: cases.design(),
        cols: cases.columns(),
        m: cases.ncols(),
    }
}

/// Whether the case design has full column rank.
pub(crate) fn full_rank(cases: &CaseSample) -> bool {
    design_rank(&lp(cases)) == cases.ncols()
}

fn validate(cases: &CaseSample, rho: f64) -> Result<()> {
    check_level(rho)?;
    let n = cases.len();
    let m = cases.ncols();
    if n < m + 1 {
        return Err(QrocError::Invalid(format!(
            "{n} cases cannot support {m} coefficients (need at least {})",
            m + 1
        )));
    }
    let nf = n as f64;
    if rho * nf < 1.0 || (1.0 - rho) * nf < 1.0 {
        return Err(QrocError::ExtremeQuantile { rho, n });
    }
    Ok(())
}

/// Empirical `(1 − ρ)`-quantile of the markers with zero slopes: the cold start.
fn marginal_guess(cases: &CaseSample, rho: f64) -> Vec<f64> {
    let mut y = cases.markers().to_vec();
    let k = (((1.0 - rho) * y.len() as f64).ceil() as usize).clamp(1, y.len()) - 1;
    let (_, q, _) = y.select_nth_unstable_by(k, f64::total_cmp);
    let mut g = vec![0.0; cases.ncols()];
    g[0] = *q;
    g
}

fn finish(cases: &CaseSample, rho: f64, v: Vertex) -> QuantileSolution {
    let residual_norm = estimating_residual(cases, &v.beta, rho)
        .expect("shape checked")
        .iter()
        .fold(0.0_f64, |a, r| a.max(r.abs()));
    let mut basis = v.basis.clone();
    basis.sort_unstable();
    QuantileSolution {
        rho,
        objective: objective(cases, &v.beta, rho),
        beta: v.beta,
        residual_norm,
        basis,
        pivots: v.pivots,
        upper: v.upper,
    }
}

fn solve(cases: &CaseSample, rhs: &[f64], guess: &[f64]) -> Result<Vertex> {
    let lp = lp(cases);
    let basis = choose_basis(&lp, guess)?;
    let mut v = Vertex::from_basis(&lp, basis)?;
    v.optimize(&lp, rhs)?;
    Ok(v)
}

fn quantile_rhs(cases: &CaseSample, rho: f64) -> Vec<f64> {
    lp(cases).column_sums().into_iter().map(|s| rho * s).collect()
}

/// Quantile regression of case markers at sensitivity level `rho`.
pub fn fit_quantile(cases: &CaseSample, rho: f64) -> Result<QuantileSolution> {
    validate(cases, rho)?;
    let guess = marginal_guess(cases, rho);
    fit_inner(cases, rho, &guess)
}

/// Same as [`fit_quantile`], starting the simplex near `guess`.
pub fn fit_quantile_warm(cases: &CaseSample, rho: f64, guess: &[f64]) -> Result<QuantileSolution> {
    validate(cases, rho)?;
    if guess.len() != cases.ncols() {
        return Err(QrocError::Shape("warm-start guess has the wrong length".into()));
    }
    fit_inner(cases, rho, guess)
}

fn fit_inner(cases: &CaseSample, rho: f64, guess: &[f64]) -> Result<QuantileSolution> {
    let rhs = quantile_rhs(cases, rho);
    let v = solve(cases, &rhs, guess).map_err(|e| rank_error(cases, e))?;
    Ok(finish(cases, rho, v))
}

fn rank_error(cases: &CaseSample, e: QrocError) -> QrocError {
    match e {
        QrocError::Singular { cols, .. } => QrocError::Singular {
            rank: design_rank(&lp(cases)),
            cols,
        },
        other => other,
    }
}

/// Quantile fit at `rho` warm-started from the vertex of a nearby solution;
/// cheap when `start.rho` is close to `rho`.
pub fn fit_quantile_from(cases: &CaseSample, rho: f64, start: &QuantileSolution) -> Result<QuantileSolution> {
    fit_offset(cases, rho, &vec![0.0; cases.ncols()], start)
}

/// Re-solves the case quantile fit along a sequence of levels, carrying the
/// vertex from one level to the next. Only the coefficients are kept, which
/// makes this the cheap way to trace `β̂(ρ)` on a grid.
pub struct QuantileTracker<'a> {
    cases: &'a CaseSample,
    colsum: Vec<f64>,
    vertex: Vertex,
    rho: f64,
}

impl<'a> QuantileTracker<'a> {
    /// Starts at `rho`, from `guess` when given and the marginal quantile otherwise.
    pub fn new(cases: &'a CaseSample, rho: f64, guess: Option<&[f64]>) -> Result<Self> {
        validate(cases, rho)?;
        let guess = match guess {
            Some(g) if g.len() == cases.ncols() => g.to_vec(),
            Some(_) => return Err(QrocError::Shape("warm-start guess has the wrong length".into())),
            None => marginal_guess(cases, rho),
        };
        let colsum = lp(cases).column_sums();
        let rhs: Vec<f64> = colsum.iter().map(|s| rho * s).collect();
        let vertex = solve(cases, &rhs, &guess).map_err(|e| rank_error(cases, e))?;
        Ok(Self {
            cases,
            colsum,
            vertex,
            rho,
        })
    }

    /// Moves to level `rho` and returns the coefficients there.
    pub fn refit(&mut self, rho: f64) -> Result<&[f64]> {
        validate(self.cases, rho)?;
        let rhs: Vec<f64> = self.colsum.iter().map(|s| rho * s).collect();
        self.vertex.optimize(&lp(self.cases), &rhs)?;
        self.rho = rho;
        Ok(&self.vertex.beta)
    }

    pub fn beta(&self) -> &[f64] {
        &self.vertex.beta
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Full solution record at the current level.
    pub fn solution(&self) -> QuantileSolution {
        finish(self.cases, self.rho, self.vertex.clone())
    }
}

/// Solves the offset estimating equation
/// `n⁻¹ Σ_i (1, z_i)[I{M_i > (1, z_i)ᵀβ} − ρ] = offset`
/// to vertex precision, warm-started from `start`.
pub fn fit_offset(
    cases: &CaseSample,
    rho: f64,
    offset: &[f64],
    start: &QuantileSolution,
) -> Result<QuantileSolution> {
    validate(cases, rho)?;
    if offset.len() != cases.ncols() {
        return Err(QrocError::Shape("offset has the wrong length".into()));
    }
    let n = cases.len() as f64;
    let rhs: Vec<f64> = quantile_rhs(cases, rho)
        .iter()
        .zip(offset)
        .map(|(b, o)| b + n * o)
        .collect();
    let lp = lp(cases);
    let mut v = if start.upper.len() == cases.len() {
        Vertex::warm(&lp, start.basis.clone(), &start.upper)?
    } else {
        Vertex::from_basis(&lp, choose_basis(&lp, &start.beta)?)?
    };
    v.optimize(&lp, &rhs)?;
    Ok(finish(cases, rho, v))
}
