//! Simulation design and Monte-Carlo study runner.

mod design;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use design::{
    case_marker, control_mean, gauss_legendre_unit, gen_cases, gen_controls, true_beta,
    true_specificity, CONTROL_SD,
};

use crate::error::{QrocError, Result};
use crate::inference::{bootstrap_variance_at, pointwise_ci, sample_variance_at, VarianceMethod};
use crate::monotone::{monotonize_path, monotonize_roc, ScanDirection};
use crate::qreg::{default_path_domain, fit_path, fit_quantile, CoefficientPath};
use crate::rng::{derive_seed, stream};
use crate::roc::{adjusted_roc_on_knots, specificity_at};
use crate::sample::BiomarkerDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    Raw,
    RegMonotone,
    RocMonotone,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Raw, Estimator::RegMonotone, Estimator::RocMonotone];

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n1: usize,
    pub n0: usize,
    pub rho0: f64,
    pub reps: usize,
    /// Bootstrap replicates per simulated data set.
    pub bootstrap: usize,
    pub seed: u64,
    pub level: f64,
    pub estimators: Vec<Estimator>,
    pub variance_methods: Vec<VarianceMethod>,
    pub scan: ScanDirection,
}

impl ScenarioConfig {
    pub fn new(n: usize, rho0: f64, reps: usize, seed: u64) -> Self {
        Self {
            n1: n,
            n0: n,
            rho0,
            reps,
            bootstrap: 500,
            seed,
            level: 0.95,
            estimators: vec![Estimator::Raw],
            variance_methods: vec![VarianceMethod::Sample],
            scan: ScanDirection::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(QrocError::Invalid("a scenario needs at least one replicate".into()));
        }
        if self.estimators.is_empty() {
            return Err(QrocError::Invalid("no estimators requested".into()));
        }
        if self.variance_methods.contains(&VarianceMethod::Bootstrap) && self.bootstrap < 2 {
            return Err(QrocError::Invalid("bootstrap variance needs at least 2 replicates".into()));
        }
        crate::qreg::check_level(self.rho0)?;
        crate::qreg::check_level(self.level)
    }
}

/// Data set `index` of a study seeded with `seed`.
pub fn simulate_dataset(n1: usize, n0: usize, seed: u64, index: u64) -> BiomarkerDataset {
    let mut rng = stream(seed, index);
    let cases = gen_cases(n1, &mut rng);
    let controls = gen_controls(n0, &mut rng);
    BiomarkerDataset::new(cases, controls, vec!["z1".into(), "z2".into()], "marker")
        .expect("simulated arms share the schema")
}

/// Coefficient path over the default domain, widened to contain `rho`.
pub fn study_path(data: &BiomarkerDataset, rho: f64) -> Result<CoefficientPath> {
    let (lo, hi) = default_path_domain(&data.cases);
    fit_path(&data.cases, lo.min(rho), hi.max(rho))
}

/// Point estimates of the requested estimators at `rho`, indexed by [`Estimator`].
pub fn point_estimates(
    data: &BiomarkerDataset,
    rho: f64,
    estimators: &[Estimator],
    scan: ScanDirection,
) -> Result<[Option<f64>; 3]> {
    let mut out = [None; 3];
    if estimators.contains(&Estimator::Raw) {
        let fit = fit_quantile(&data.cases, rho)?;
        out[0] = Some(specificity_at(&data.controls, &fit.beta)?);
    }
    let reg = estimators.contains(&Estimator::RegMonotone);
    let roc = estimators.contains(&Estimator::RocMonotone);
    if reg || roc {
        let path = study_path(data, rho)?;
        if reg {
            let mono = monotonize_path(&path, &data.cases, scan);
            out[1] = Some(specificity_at(&data.controls, &mono.eval(rho))?);
        }
        if roc {
            let curve = adjusted_roc_on_knots(&path, &data.controls)?;
            out[2] = Some(monotonize_roc(&curve, scan).eval(rho));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
struct Replicate {
    phi: [Option<f64>; 3],
    /// Standard error of the raw estimate per requested method.
    se: Vec<f64>,
}

fn run_replicate(cfg: &ScenarioConfig, index: usize) -> Result<Replicate> {
    let data = simulate_dataset(cfg.n1, cfg.n0, cfg.seed, index as u64);
    let mut estimators = cfg.estimators.clone();
    if !estimators.contains(&Estimator::Raw) {
        estimators.push(Estimator::Raw);
    }
    let fit = fit_quantile(&data.cases, cfg.rho0)?;
    let mut phi = point_estimates(&data, cfg.rho0, &estimators, cfg.scan)?;
    for e in Estimator::ALL {
        if !cfg.estimators.contains(&e) {
            phi[e.index()] = None;
        }
    }
    let se = cfg
        .variance_methods
        .iter()
        .map(|m| match m {
            VarianceMethod::Sample => sample_variance_at(&data, &fit).map(|c| c.se_phi),
            VarianceMethod::Bootstrap => {
                bootstrap_variance_at(&data, &fit, cfg.bootstrap, derive_seed(cfg.seed, index as u64))
                    .map(|c| c.se_phi)
            }
        })
        .collect::<Result<_>>()?;
    Ok(Replicate { phi, se })
}

/// One table row. Bias, SD and SE are scaled by 10⁴, coverages are percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    pub estimator: Estimator,
    pub method: VarianceMethod,
    pub bias: f64,
    /// Absent with a single replicate.
    pub sd: Option<f64>,
    pub mean_se: f64,
    pub cov: f64,
    pub lcov: f64,
    /// Monte-Carlo standard error of `bias` in the same units.
    pub bias_mcse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: ScenarioConfig,
    pub true_phi: f64,
    pub completed: usize,
    pub failures: usize,
    pub rows: Vec<SimulationRow>,
}

impl SimulationReport {
    pub fn row(&self, estimator: Estimator, method: VarianceMethod) -> Option<&SimulationRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.method == method)
    }
}

/// Runs `cfg.reps` simulated studies. Results depend only on `cfg`, not on the
/// thread count.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SimulationReport> {
    cfg.validate()?;
    let true_phi = true_specificity(cfg.rho0)?;
    let outcomes: Vec<Result<Replicate>> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| run_replicate(cfg, r))
        .collect();
    let failures = outcomes.iter().filter(|o| o.is_err()).count();
    if failures as f64 > 0.01 * cfg.reps as f64 {
        let first = outcomes
            .iter()
            .find_map(|o| o.as_ref().err())
            .map(ToString::to_string)
            .unwrap_or_default();
        return Err(QrocError::Inference(format!(
            "{failures} of {} replicates failed (first: {first})",
            cfg.reps
        )));
    }
    let done: Vec<Replicate> = outcomes.into_iter().filter_map(|o| o.ok()).collect();
    let mut rows = Vec::new();
    for &est in &cfg.estimators {
        for (mi, &method) in cfg.variance_methods.iter().enumerate() {
            rows.push(aggregate(&done, est, mi, method, true_phi, cfg.level)?);
        }
    }
    Ok(SimulationReport {
        config: cfg.clone(),
        true_phi,
        completed: done.len(),
        failures,
        rows,
    })
}

fn aggregate(
    done: &[Replicate],
    est: Estimator,
    mi: usize,
    method: VarianceMethod,
    true_phi: f64,
    level: f64,
) -> Result<SimulationRow> {
    let n = done.len() as f64;
    let (mut sum, mut sum_se, mut hits, mut lhits) = (0.0, 0.0, 0usize, 0usize);
    let mut values = Vec::with_capacity(done.len());
    for r in done {
        let phi = r.phi[est.index()].expect("requested estimator recorded");
        let se = r.se[mi];
        let ci = pointwise_ci(phi, se, level)?;
        hits += usize::from(ci.wald.contains(true_phi));
        lhits += usize::from(ci.logit_or_wald().contains(true_phi));
        sum += phi;
        sum_se += se;
        values.push(phi);
    }
    let mean = sum / n;
    let sd = (done.len() > 1).then(|| {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    });
    Ok(SimulationRow {
        estimator: est,
        method,
        bias: (mean - true_phi) * 1e4,
        sd: sd.map(|s| s * 1e4),
        mean_se: sum_se / n * 1e4,
        cov: hits as f64 / n * 100.0,
        lcov: lhits as f64 / n * 100.0,
        bias_mcse: sd.map(|s| s / n.sqrt() * 1e4),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_replicate_has_no_sd() {
        let cfg = ScenarioConfig::new(60, 0.9, 1, 5);
        let rep = run_scenario(&cfg).unwrap();
        assert_eq!(rep.completed, 1);
        assert!(rep.rows[0].sd.is_none());
        assert!([0.0, 100.0].contains(&rep.rows[0].cov));
    }

    #[test]
    fn zero_replicates_rejected() {
        assert!(run_scenario(&ScenarioConfig::new(60, 0.9, 0, 5)).is_err());
    }

    #[test]
    fn datasets_are_reproducible() {
        assert_eq!(simulate_dataset(20, 30, 9, 4), simulate_dataset(20, 30, 9, 4));
        assert_ne!(simulate_dataset(20, 30, 9, 4), simulate_dataset(20, 30, 9, 5));
    }
}
