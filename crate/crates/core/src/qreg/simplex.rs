//! Vertex simplex for problems of the form
//!
//! ```text
//!   min_β  bᵀβ + Σ_i (y_i − x_iᵀβ)_+
//! ```
//!
//! which is the primal of the bounded dual `max yᵀa  s.t. Xᵀa = b, 0 ≤ a ≤ 1`.
//! With `b = ρ Σ_i x_i` this is quantile regression at level `τ = 1 − ρ`; other
//! right-hand sides give the offset estimating equations used for variance
//! calibration.
//!
//! A vertex is described by `m = p + 1` interpolated rows (the basis) and a bound
//! status for every other row (`a_i = 1` above the fit, `a_i = 0` below). Rows
//! sitting exactly on the fit outside the basis keep whichever bound they were
//! given, which is how degenerate vertices are represented.
//!
//! The iteration is a dual simplex on the bounded dual with a long-step ratio
//! test: a basic weight outside `[0, 1]` picks the edge, and the line search
//! walks through the residual sign changes along that edge until the directional
//! derivative turns non-negative (the Barrodale–Roberts step).

use nalgebra::DMatrix;

use crate::error::{QrocError, Result};
use crate::sample::{dot, predict_into};

/// Basic weights may leave `[0, 1]` by this much before a pivot is forced.
pub(crate) const WEIGHT_TOL: f64 = 1e-9;
/// Edge coefficients smaller than this are treated as parallel to the fit.
const EDGE_TOL: f64 = 1e-12;
/// Consecutive zero-length pivots before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 32;

/// Exact-fit test for residuals.
pub(crate) fn is_exact_fit(resid: f64, marker: f64) -> bool {
    resid.abs() <= 1e-8 * (1.0 + marker.abs())
}

/// Borrowed view of a design and response.
#[derive(Clone, Copy)]
pub(crate) struct Lp<'a> {
    pub y: &'a [f64],
    /// Row-major design.
    pub x: &'a [f64],
    /// The same design, column-major.
    pub cols: &'a [f64],
    pub m: usize,
}

impl<'a> Lp<'a> {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.x[i * self.m..(i + 1) * self.m]
    }

    pub fn column(&self, c: usize) -> &'a [f64] {
        let n = self.n();
        &self.cols[c * n..(c + 1) * n]
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.m).map(|c| self.column(c).iter().sum()).collect()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Vertex {
    pub basis: Vec<usize>,
    pub beta: Vec<f64>,
    pub resid: Vec<f64>,
    /// Bound status of non-basic rows: `true` means `a_i = 1`.
    pub upper: Vec<bool>,
    pub in_basis: Vec<bool>,
    /// `X_h⁻¹`, row-major.
    inv: Vec<f64>,
    /// Scratch for `X d` along an edge.
    work: Vec<f64>,
    /// Running `Σ_{upper} x_i`.
    usum: Vec<f64>,
    /// Scratch for ratio-test candidates.
    cand: Vec<(f64, usize, f64)>,
    pub pivots: usize,
}

/// Picks `m` linearly independent rows, preferring rows closest to `guess`.
pub(crate) fn choose_basis(lp: &Lp<'_>, guess: &[f64]) -> Result<Vec<usize>> {
    let n = lp.n();
    let m = lp.m;
    let mut order: Vec<(f64, usize)> = (0..n)
        .map(|i| ((lp.y[i] - dot(lp.row(i), guess)).abs(), i))
        .collect();
    let head = (8 * m).max(32).min(n);
    if head < n {
        order.select_nth_unstable_by(head - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    }
    order[..head].sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    // well-conditioned rows from the nearest candidates first, then any rows at all
    for (tol, limit) in [(1e-6, head), (1e-10, n)] {
        if limit == n && head < n {
            order[head..].sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        }
        let picked = independent_rows(lp, order[..limit].iter().map(|&(_, i)| i), tol);
        if picked.len() == m {
            return Ok(picked);
        }
        if limit == n {
            return Err(QrocError::Singular {
                rank: picked.len(),
                cols: m,
            });
        }
    }
    unreachable!()
}

/// Greedy Gram–Schmidt selection of independent rows.
fn independent_rows(lp: &Lp<'_>, candidates: impl Iterator<Item = usize>, tol: f64) -> Vec<usize> {
    let m = lp.m;
    let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut picked = Vec::with_capacity(m);
    for i in candidates {
        let row = lp.row(i);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let mut v: Vec<f64> = row.to_vec();
        for q in &ortho {
            let c = dot(&v, q);
            for (vk, qk) in v.iter_mut().zip(q) {
                *vk -= c * qk;
            }
        }
        let rest = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if rest > tol * norm {
            v.iter_mut().for_each(|x| *x /= rest);
            ortho.push(v);
            picked.push(i);
            if picked.len() == m {
                break;
            }
        }
    }
    picked
}

/// Numerical rank of the design rows.
pub(crate) fn design_rank(lp: &Lp<'_>) -> usize {
    independent_rows(lp, 0..lp.n(), 1e-10).len()
}

impl Vertex {
    /// Vertex interpolating the given rows; bounds follow the residual signs.
    pub fn from_basis(lp: &Lp<'_>, basis: Vec<usize>) -> Result<Self> {
        let n = lp.n();
        let mut v = Self {
            in_basis: vec![false; n],
            upper: vec![false; n],
            resid: vec![0.0; n],
            beta: vec![0.0; lp.m],
            inv: Vec::new(),
            work: vec![0.0; n],
            usum: Vec::new(),
            cand: Vec::new(),
            basis,
            pivots: 0,
        };
        for &h in &v.basis {
            v.in_basis[h] = true;
        }
        v.refresh(lp)?;
        for i in 0..n {
            v.upper[i] = !v.in_basis[i] && v.resid[i] > 0.0;
        }
        v.usum = v.count_upper(lp);
        Ok(v)
    }

    /// Vertex built from a preferred basis, with bound statuses carried over
    /// where the residual signs allow it.
    pub fn warm(lp: &Lp<'_>, basis: Vec<usize>, upper: &[bool]) -> Result<Self> {
        let mut v = Self::from_basis(lp, basis)?;
        for i in 0..lp.n() {
            if !v.in_basis[i] && is_exact_fit(v.resid[i], lp.y[i]) {
                v.upper[i] = upper[i];
            }
        }
        v.usum = v.count_upper(lp);
        Ok(v)
    }

    /// Recomputes `X_h⁻¹`, the coefficients and all residuals from the basis.
    fn refresh(&mut self, lp: &Lp<'_>) -> Result<()> {
        let m = lp.m;
        let mut xh = DMatrix::<f64>::zeros(m, m);
        for (r, &h) in self.basis.iter().enumerate() {
            for (c, &v) in lp.row(h).iter().enumerate() {
                xh[(r, c)] = v;
            }
        }
        let inv = xh.try_inverse().ok_or(QrocError::Singular {
            rank: m.saturating_sub(1),
            cols: m,
        })?;
        self.inv = (0..m * m).map(|k| inv[(k / m, k % m)]).collect();
        for c in 0..m {
            self.beta[c] = (0..m).map(|r| self.inv[c * m + r] * lp.y[self.basis[r]]).sum();
        }
        predict_into(lp.cols, &self.beta, &mut self.resid);
        for (r, y) in self.resid.iter_mut().zip(lp.y) {
            *r = y - *r;
        }
        for &h in &self.basis {
            self.resid[h] = 0.0;
        }
        Ok(())
    }

    /// Sum of design rows whose dual weight sits at the upper bound.
    pub fn upper_sum(&self) -> &[f64] {
        &self.usum
    }

    /// Flips the bound status of row `i`, keeping the running sum in step.
    fn set_upper(&mut self, lp: &Lp<'_>, i: usize, value: bool) {
        if self.upper[i] != value {
            self.upper[i] = value;
            let sign = if value { 1.0 } else { -1.0 };
            for (acc, x) in self.usum.iter_mut().zip(lp.row(i)) {
                *acc += sign * x;
            }
        }
    }

    /// Full recount of the upper sum. Basic rows never carry the upper flag.
    fn count_upper(&self, lp: &Lp<'_>) -> Vec<f64> {
        (0..lp.m)
            .map(|c| {
                lp.column(c)
                    .iter()
                    .zip(&self.upper)
                    .map(|(x, &u)| if u { *x } else { 0.0 })
                    .sum()
            })
            .collect()
    }

    /// `X_h⁻ᵀ v`.
    pub fn solve_transposed(&self, v: &[f64]) -> Vec<f64> {
        let m = v.len();
        (0..m)
            .map(|r| (0..m).map(|c| self.inv[c * m + r] * v[c]).sum())
            .collect()
    }

    /// Basic dual weights `a_h = X_h⁻ᵀ (b − Σ_{upper} x_i)`.
    pub fn weights(&self, b: &[f64]) -> Vec<f64> {
        let rhs: Vec<f64> = b.iter().zip(&self.usum).map(|(bi, si)| bi - si).collect();
        self.solve_transposed(&rhs)
    }

    /// Column `j` of `X_h⁻¹` scaled by `sign`: moving β along it lifts row
    /// `basis[j]` off the fit while keeping the other basic rows exact.
    fn edge(&self, j: usize, sign: f64, m: usize) -> Vec<f64> {
        (0..m).map(|c| sign * self.inv[c * m + j]).collect()
    }

    /// Runs dual simplex pivots until the basic weights are feasible.
    pub fn optimize(&mut self, lp: &Lp<'_>, b: &[f64]) -> Result<()> {
        let cap = 50 * lp.n() + 1000;
        let mut streak = 0usize;
        loop {
            let w = self.weights(b);
            let bland = streak >= DEGENERATE_STREAK;
            let mut leave: Option<(usize, f64)> = None;
            for (j, &a) in w.iter().enumerate() {
                let viol = (-a).max(a - 1.0);
                if viol <= WEIGHT_TOL {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((k, v)) => {
                        if bland {
                            self.basis[j] < self.basis[k]
                        } else {
                            viol > v
                        }
                    }
                };
                if better {
                    leave = Some((j, viol));
                }
            }
            let Some((j, viol)) = leave else {
                return Ok(());
            };
            if self.pivots >= cap {
                return Err(QrocError::NoConvergence(self.pivots));
            }
            let sign = if w[j] < 0.0 { 1.0 } else { -1.0 };
            let step = self.pivot(lp, j, sign, Some(viol))?;
            if step == 0.0 {
                streak += 1;
            } else {
                streak = 0;
            }
        }
    }

    /// Exchanges basic position `j` for the row found by the ratio test.
    ///
    /// With `long_step = Some(v)` the line search starts from slope `−v` and
    /// passes through sign changes while the slope stays negative; with `None`
    /// it stops at the first one. Returns the step length.
    pub fn pivot(&mut self, lp: &Lp<'_>, j: usize, sign: f64, long_step: Option<f64>) -> Result<f64> {
        let m = lp.m;
        let dir = self.edge(j, sign, m);
        predict_into(lp.cols, &dir, &mut self.work);
        // branch-free compaction of the rows whose residual sign flips along the edge
        let n = lp.n();
        let mut cand = std::mem::take(&mut self.cand);
        cand.resize(n, (0.0, 0, 0.0));
        let mut len = 0;
        for i in 0..n {
            let wi = self.work[i];
            let toward = if self.upper[i] { wi } else { -wi };
            cand[len] = ((self.resid[i] / wi).max(0.0), i, wi.abs());
            len += usize::from(toward > EDGE_TOL && !self.in_basis[i]);
        }
        cand.truncate(len);
        let result = self.exchange(lp, j, sign, long_step, &mut cand);
        self.cand = cand;
        result
    }

    fn exchange(
        &mut self,
        lp: &Lp<'_>,
        j: usize,
        sign: f64,
        long_step: Option<f64>,
        cand: &mut [(f64, usize, f64)],
    ) -> Result<f64> {
        if cand.is_empty() {
            return Err(QrocError::Inference(
                "estimating equation has no solution for this right-hand side".into(),
            ));
        }
        let by_step = |a: &(f64, usize, f64), b: &(f64, usize, f64)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        let (step, enter) = match long_step {
            None => {
                let c = cand.iter().min_by(|a, b| by_step(a, b)).expect("non-empty");
                (c.0, c.1)
            }
            Some(viol) => {
                // walk crossings in step order until the slope turns, sorting
                // only as much of the candidate list as the walk reaches
                let mut slope = -viol;
                let mut from = 0;
                let mut chunk = 8;
                let found = 'walk: loop {
                    let rest = &mut cand[from..];
                    if rest.is_empty() {
                        break None;
                    }
                    let take = chunk.min(rest.len());
                    if take < rest.len() {
                        rest.select_nth_unstable_by(take - 1, by_step);
                    }
                    rest[..take].sort_unstable_by(by_step);
                    for k in from..from + take {
                        slope += cand[k].2;
                        if slope >= -1e-12 {
                            break 'walk Some(k);
                        }
                    }
                    from += take;
                    chunk *= 4;
                };
                let pos = found.ok_or_else(|| {
                    QrocError::Inference(
                        "estimating equation has no solution for this right-hand side".into(),
                    )
                })?;
                for k in 0..pos {
                    let row = cand[k].1;
                    self.set_upper(lp, row, !self.upper[row]);
                }
                (cand[pos].0, cand[pos].1)
            }
        };
        let leave = self.basis[j];
        self.in_basis[leave] = false;
        // positive sign pushes the leaving row below the fit
        self.set_upper(lp, leave, sign < 0.0);
        self.set_upper(lp, enter, false);
        self.in_basis[enter] = true;
        self.basis[j] = enter;
        self.pivots += 1;
        if self.pivots.is_multiple_of(64) {
            self.usum = self.count_upper(lp);
        }
        self.refresh(lp)?;
        Ok(step)
    }

}
