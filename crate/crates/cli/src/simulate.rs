//! `qroc simulate`: Monte-Carlo study of the estimators under the built-in
//! two-covariate design.

use std::path::{Path, PathBuf};

use clap::Args;
use qroc_core::inference::VarianceMethod;
use qroc_core::monotone::ScanDirection;
use qroc_core::simulate::{run_scenario, Estimator, ScenarioConfig, SimulationReport};
use serde::{Deserialize, Serialize};

use crate::data::Scan;
use crate::error::{invalid, CliError, CliResult};
use crate::output::{num, opt_num, OutDir, Table};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML file with study settings; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed of the study.
    #[arg(long)]
    pub seed: u64,
    /// Sample sizes per arm, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Controlled sensitivity levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub rho: Option<Vec<f64>>,
    /// Simulated data sets per scenario.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Bootstrap replicates per simulated data set.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Nominal coverage of the intervals.
    #[arg(long)]
    pub level: Option<f64>,
    /// Any of raw, reg-monotone, roc-monotone.
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    /// Any of sample, bootstrap.
    #[arg(long, value_delimiter = ',')]
    pub variance: Option<Vec<String>>,
    /// Scan direction of the monotonized estimators.
    #[arg(long, value_enum)]
    pub scan: Option<Scan>,
    /// Directory for simulation.csv and simulation.json.
    #[arg(long)]
    pub out: PathBuf,
}

/// Study settings as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyConfig {
    pub n: Vec<usize>,
    pub rho0: Vec<f64>,
    pub reps: usize,
    pub bootstrap: usize,
    pub level: f64,
    pub estimators: Vec<Estimator>,
    pub variance_methods: Vec<VarianceMethod>,
    pub scan: ScanDirection,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            n: vec![100],
            rho0: vec![0.95],
            reps: 1000,
            bootstrap: 500,
            level: 0.95,
            estimators: vec![Estimator::Raw],
            variance_methods: vec![VarianceMethod::Sample],
            scan: ScanDirection::default(),
        }
    }
}

fn read_config(path: &Path) -> CliResult<StudyConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn parse_enum<T: for<'de> Deserialize<'de>>(flag: &str, value: &str) -> CliResult<T> {
    T::deserialize(serde::de::value::StrDeserializer::<serde::de::value::Error>::new(value.trim()))
        .map_err(|_| invalid(format!("unknown {flag} '{value}'")))
}

pub fn study_config(args: &SimulateArgs) -> CliResult<StudyConfig> {
    let mut cfg = match &args.config {
        Some(p) => read_config(p)?,
        None => StudyConfig::default(),
    };
    if let Some(n) = &args.n {
        cfg.n.clone_from(n);
    }
    if let Some(r) = &args.rho {
        cfg.rho0.clone_from(r);
    }
    if let Some(r) = args.reps {
        cfg.reps = r;
    }
    if let Some(b) = args.bootstrap {
        cfg.bootstrap = b;
    }
    if let Some(l) = args.level {
        cfg.level = l;
    }
    if let Some(e) = &args.estimators {
        cfg.estimators = e.iter().map(|v| parse_enum("estimator", v)).collect::<CliResult<_>>()?;
    }
    if let Some(v) = &args.variance {
        cfg.variance_methods = v.iter().map(|v| parse_enum("variance method", v)).collect::<CliResult<_>>()?;
    }
    if let Some(s) = args.scan {
        cfg.scan = s.into();
    }
    if cfg.n.is_empty() || cfg.rho0.is_empty() {
        return Err(invalid("at least one sample size and one level are required"));
    }
    if let Some(&n) = cfg.n.iter().find(|&&n| n < 10) {
        return Err(invalid(format!("sample size {n} is too small (minimum 10 per arm)")));
    }
    Ok(cfg)
}

pub fn scenarios(cfg: &StudyConfig, seed: u64) -> Vec<ScenarioConfig> {
    let mut out = Vec::new();
    for &n in &cfg.n {
        for &rho0 in &cfg.rho0 {
            out.push(ScenarioConfig {
                bootstrap: cfg.bootstrap,
                level: cfg.level,
                estimators: cfg.estimators.clone(),
                variance_methods: cfg.variance_methods.clone(),
                scan: cfg.scan,
                ..ScenarioConfig::new(n, rho0, cfg.reps, seed)
            });
        }
    }
    out
}

fn label<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn report_table(reports: &[SimulationReport]) -> Table {
    let mut t = Table::new([
        "n1", "n0", "rho0", "true_phi", "estimator", "method", "Bias", "SD", "SE", "Cov", "LCov", "replicates",
        "failures",
    ]);
    for r in reports {
        for row in &r.rows {
            t.push(vec![
                r.config.n1.to_string(),
                r.config.n0.to_string(),
                num(r.config.rho0),
                num(r.true_phi),
                label(&row.estimator),
                label(&row.method),
                num(row.bias),
                opt_num(row.sd),
                num(row.mean_se),
                num(row.cov),
                num(row.lcov),
                r.completed.to_string(),
                r.failures.to_string(),
            ]);
        }
    }
    t
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let cfg = study_config(args)?;
    let mut reports = Vec::new();
    for sc in scenarios(&cfg, args.seed) {
        eprintln!("scenario n = {}, rho0 = {} ({} replicates)", sc.n1, sc.rho0, sc.reps);
        reports.push(run_scenario(&sc)?);
    }
    println!(
        "{:>5} {:>6} {:<13} {:<10} {:>8} {:>8} {:>8} {:>7} {:>7}",
        "n", "rho0", "estimator", "method", "Bias", "SD", "SE", "Cov", "LCov"
    );
    for r in &reports {
        for row in &r.rows {
            println!(
                "{:>5} {:>6} {:<13} {:<10} {:>8.0} {:>8} {:>8.0} {:>7.2} {:>7.2}",
                r.config.n1,
                r.config.rho0,
                label(&row.estimator),
                label(&row.method),
                row.bias,
                row.sd.map_or("-".into(), |s| format!("{s:.0}")),
                row.mean_se,
                row.cov,
                row.lcov
            );
        }
    }
    let mut out = OutDir::create(&args.out)?;
    out.csv("simulation.csv", &report_table(&reports))?;
    out.json("simulation.json", &reports)?;
    Ok(())
}
