//! Marker/covariate samples and the two-arm biomarker dataset.

use crate::error::{QrocError, Result};

/// One study arm: marker values with their covariate rows.
///
/// The covariates are kept in augmented form `(1, z)` row-major, so every row
/// is a design row with the intercept first. A column-major copy serves the
/// solver's vectorized passes.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    markers: Vec<f64>,
    design: Vec<f64>,
    columns: Vec<f64>,
    ncov: usize,
}

/// Diseased arm. Quantile models are fit on this sample.
pub type CaseSample = Sample;
/// Non-diseased arm. Specificity is counted on this sample.
pub type ControlSample = Sample;

impl Sample {
    /// Builds a sample from marker values and covariate rows.
    pub fn new(markers: Vec<f64>, covariates: &[Vec<f64>]) -> Result<Self> {
        if markers.len() != covariates.len() {
            return Err(QrocError::Shape(format!(
                "{} markers but {} covariate rows",
                markers.len(),
                covariates.len()
            )));
        }
        let ncov = covariates.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(markers.len() * ncov);
        for (i, row) in covariates.iter().enumerate() {
            if row.len() != ncov {
                return Err(QrocError::Shape(format!(
                    "covariate row {i} has {} entries, expected {ncov}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(markers, &flat, ncov)
    }

    /// Builds a sample from row-major (non-augmented) covariates.
    pub fn from_flat(markers: Vec<f64>, covariates: &[f64], ncov: usize) -> Result<Self> {
        let n = markers.len();
        if covariates.len() != n * ncov {
            return Err(QrocError::Shape(format!(
                "expected {} covariate values for {n} rows of {ncov}, got {}",
                n * ncov,
                covariates.len()
            )));
        }
        if let Some(i) = markers.iter().position(|m| !m.is_finite()) {
            return Err(QrocError::Invalid(format!("marker {i} is not finite")));
        }
        if let Some(k) = covariates.iter().position(|v| !v.is_finite()) {
            return Err(QrocError::Invalid(format!(
                "covariate ({}, {}) is not finite",
                k / ncov.max(1),
                k % ncov.max(1)
            )));
        }
        let m = ncov + 1;
        let mut design = Vec::with_capacity(n * m);
        for i in 0..n {
            design.push(1.0);
            design.extend_from_slice(&covariates[i * ncov..(i + 1) * ncov]);
        }
        Ok(Self::assemble(markers, design, ncov))
    }

    fn assemble(markers: Vec<f64>, design: Vec<f64>, ncov: usize) -> Self {
        let m = ncov + 1;
        let n = markers.len();
        let mut columns = vec![0.0; n * m];
        for i in 0..n {
            for c in 0..m {
                columns[c * n + i] = design[i * m + c];
            }
        }
        Self {
            markers,
            design,
            columns,
            ncov,
        }
    }

    /// Intercept-only sample.
    pub fn markers_only(markers: Vec<f64>) -> Result<Self> {
        Self::from_flat(markers, &[], 0)
    }

    pub fn len(&self) -> usize {
        self.markers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }

    /// Number of covariates `p` (the design has `p + 1` columns).
    pub fn ncov(&self) -> usize {
        self.ncov
    }

    pub fn ncols(&self) -> usize {
        self.ncov + 1
    }

    pub fn markers(&self) -> &[f64] {
        &self.markers
    }

    pub fn marker(&self, i: usize) -> f64 {
        self.markers[i]
    }

    /// Augmented design row `(1, z_i)`.
    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.ncols();
        &self.design[i * m..(i + 1) * m]
    }

    pub fn covariates(&self, i: usize) -> &[f64] {
        &self.row(i)[1..]
    }

    /// Row-major augmented design, `n × (p + 1)`.
    pub fn design(&self) -> &[f64] {
        &self.design
    }

    /// Column-major augmented design; column `c` is `columns()[c * n..(c + 1) * n]`.
    pub fn columns(&self) -> &[f64] {
        &self.columns
    }

    /// Linear predictor `(1, z_i)ᵀ beta`.
    pub fn fitted(&self, i: usize, beta: &[f64]) -> f64 {
        dot(self.row(i), beta)
    }

    /// All linear predictors `(1, z_i)ᵀ beta`.
    pub fn fitted_all(&self, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        predict_into(&self.columns, beta, &mut out);
        out
    }

    /// Largest sup-norm of an augmented design row.
    pub fn max_row_norm(&self) -> f64 {
        self.design.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Sub-sample with the given row indices (repeats allowed).
    pub fn select(&self, idx: &[usize]) -> Self {
        let m = self.ncols();
        let mut markers = Vec::with_capacity(idx.len());
        let mut design = Vec::with_capacity(idx.len() * m);
        for &i in idx {
            markers.push(self.markers[i]);
            design.extend_from_slice(self.row(i));
        }
        Self::assemble(markers, design, self.ncov)
    }

    /// Applies `f` to every marker.
    pub fn map_markers(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            markers: self.markers.iter().map(|&m| f(m)).collect(),
            ..self.clone()
        }
    }

    /// Per-covariate `(min, max)` over the rows.
    pub fn covariate_ranges(&self) -> Vec<(f64, f64)> {
        (0..self.ncov)
            .map(|k| {
                (0..self.len()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
                    let v = self.covariates(i)[k];
                    (lo.min(v), hi.max(v))
                })
            })
            .collect()
    }
}

/// `out = X beta` for a column-major `X` with `out.len()` rows.
pub(crate) fn predict_into(columns: &[f64], beta: &[f64], out: &mut [f64]) {
    let n = out.len();
    for (o, x) in out.iter_mut().zip(&columns[..n]) {
        *o = beta[0] * x;
    }
    for (c, &b) in beta.iter().enumerate().skip(1) {
        for (o, x) in out.iter_mut().zip(&columns[c * n..(c + 1) * n]) {
            *o += b * x;
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Case and control samples sharing one covariate schema.
#[derive(Debug, Clone, PartialEq)]
pub struct BiomarkerDataset {
    pub cases: CaseSample,
    pub controls: ControlSample,
    pub covariate_names: Vec<String>,
    pub marker_name: String,
}

impl BiomarkerDataset {
    pub fn new(
        cases: CaseSample,
        controls: ControlSample,
        covariate_names: Vec<String>,
        marker_name: impl Into<String>,
    ) -> Result<Self> {
        if cases.ncov() != controls.ncov() {
            return Err(QrocError::Shape(format!(
                "cases have {} covariates, controls have {}",
                cases.ncov(),
                controls.ncov()
            )));
        }
        if covariate_names.len() != cases.ncov() {
            return Err(QrocError::Shape(format!(
                "{} covariate names for {} covariates",
                covariate_names.len(),
                cases.ncov()
            )));
        }
        if cases.is_empty() || controls.is_empty() {
            return Err(QrocError::Invalid(
                "both cases and controls must be non-empty".into(),
            ));
        }
        Ok(Self {
            cases,
            controls,
            covariate_names,
            marker_name: marker_name.into(),
        })
    }

    /// Unnamed dataset, covariates labelled `z1, z2, ...`.
    pub fn unnamed(cases: CaseSample, controls: ControlSample) -> Result<Self> {
        let names = (1..=cases.ncov()).map(|k| format!("z{k}")).collect();
        Self::new(cases, controls, names, "marker")
    }

    pub fn ncov(&self) -> usize {
        self.cases.ncov()
    }

    /// Same dataset with the covariates dropped (unadjusted analysis).
    pub fn without_covariates(&self) -> Self {
        Self {
            cases: Sample::markers_only(self.cases.markers().to_vec())
                .expect("finite markers stay finite"),
            controls: Sample::markers_only(self.controls.markers().to_vec())
                .expect("finite markers stay finite"),
            covariate_names: Vec::new(),
            marker_name: self.marker_name.clone(),
        }
    }
}
