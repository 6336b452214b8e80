//! `qroc fit`: point estimates, standard errors and intervals at one level.

use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::Args;
use qroc_core::inference::{bootstrap_variance_at, pointwise_ci, sample_variance_at, CovarianceEstimate, Interval};
use qroc_core::qreg::{check_level, fit_quantile};
use qroc_core::roc::specificity_at;
use qroc_core::simulate::{point_estimates, Estimator};
use qroc_core::BiomarkerDataset;
use serde::Serialize;

use crate::data::{DataArgs, Direction, Scan};
use crate::error::{invalid, CliResult};
use crate::output::OutDir;

/// Covariate patterns beyond which the report omits the per-pattern thresholds.
const MAX_PATTERNS: usize = 50;

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Controlled level of the other accuracy measure, in (0, 1).
    #[arg(long)]
    pub rho: f64,
    /// Nominal coverage of the intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Bootstrap replicates for bootstrap standard errors (0 disables them).
    #[arg(long, default_value_t = 0)]
    pub bootstrap: usize,
    /// Seed for the bootstrap; required with --bootstrap.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scan direction of the monotonized estimators.
    #[arg(long, value_enum, default_value_t = Scan::Descending)]
    pub scan: Scan,
    /// Directory for report.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Coefficient {
    pub term: String,
    pub estimate: f64,
    pub se_sample: f64,
    pub se_bootstrap: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntervalSet {
    pub se: f64,
    pub wald: Interval,
    /// Absent when the estimate is 0 or 1.
    pub logit: Option<Interval>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateRow {
    pub estimator: &'static str,
    pub value: f64,
    pub sample: IntervalSet,
    pub bootstrap: Option<IntervalSet>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdRow {
    pub covariates: Vec<f64>,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapInfo {
    pub replicates: usize,
    pub seed: u64,
    pub redrawn: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub direction: Direction,
    pub measure: &'static str,
    pub controlled: &'static str,
    pub rho: f64,
    pub level: f64,
    pub marker: String,
    pub covariates: Vec<String>,
    pub n_cases: usize,
    pub n_controls: usize,
    pub dropped_rows: Vec<usize>,
    pub coefficients: Vec<Coefficient>,
    pub estimates: Vec<EstimateRow>,
    /// Thresholds at each observed covariate pattern; empty when there are
    /// more than a handful of patterns.
    pub thresholds: Vec<ThresholdRow>,
    pub bootstrap: Option<BootstrapInfo>,
    /// Set when the sample-based method fell back to a symmetric square root.
    pub eigen_root: bool,
}

fn intervals(phi: f64, cov: &CovarianceEstimate, level: f64) -> CliResult<IntervalSet> {
    let ci = pointwise_ci(phi, cov.se_phi, level)?;
    Ok(IntervalSet {
        se: cov.se_phi,
        wald: ci.wald,
        logit: ci.logit,
    })
}

struct Variances {
    sample: CovarianceEstimate,
    bootstrap: Option<CovarianceEstimate>,
}

fn variances(data: &BiomarkerDataset, rho: f64, boot: Option<(usize, u64)>) -> CliResult<(f64, Vec<f64>, Variances)> {
    let fit = fit_quantile(&data.cases, rho)?;
    let phi = specificity_at(&data.controls, &fit.beta)?;
    let sample = sample_variance_at(data, &fit)?;
    let bootstrap = boot
        .map(|(b, seed)| bootstrap_variance_at(data, &fit, b, seed))
        .transpose()?;
    Ok((phi, fit.beta, Variances { sample, bootstrap }))
}

fn row(name: &'static str, phi: f64, v: &Variances, level: f64) -> CliResult<EstimateRow> {
    Ok(EstimateRow {
        estimator: name,
        value: phi,
        sample: intervals(phi, &v.sample, level)?,
        bootstrap: v.bootstrap.as_ref().map(|c| intervals(phi, c, level)).transpose()?,
    })
}

fn patterns(data: &BiomarkerDataset) -> Option<Vec<Vec<f64>>> {
    let mut set: BTreeSet<Vec<u64>> = BTreeSet::new();
    for arm in [&data.cases, &data.controls] {
        for i in 0..arm.len() {
            set.insert(arm.covariates(i).iter().map(|v| v.to_bits()).collect());
            if set.len() > MAX_PATTERNS {
                return None;
            }
        }
    }
    let mut rows: Vec<Vec<f64>> = set
        .into_iter()
        .map(|r| r.into_iter().map(f64::from_bits).collect())
        .collect();
    rows.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    Some(rows)
}

pub fn build_report(args: &FitArgs) -> CliResult<FitReport> {
    check_level(args.rho)?;
    if args.bootstrap > 0 && args.seed.is_none() {
        return Err(invalid("--bootstrap requires --seed"));
    }
    if args.bootstrap == 1 {
        return Err(invalid("--bootstrap needs at least 2 replicates"));
    }
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(invalid(format!("--level must lie in (0, 1), got {}", args.level)));
    }
    let input = args.data.load()?;
    let data = &input.analysis;
    let boot = (args.bootstrap > 0).then(|| (args.bootstrap, args.seed.expect("checked above")));
    let sign = input.direction.marker_sign();

    let (phi, beta, adjusted) = variances(data, args.rho, boot)?;
    let unadjusted_data = data.without_covariates();
    let (phi_unadj, _, unadjusted) = variances(&unadjusted_data, args.rho, boot)?;
    let [_, reg, roc] = point_estimates(data, args.rho, &Estimator::ALL, args.scan.into())?;

    let se_beta = adjusted.sample.se();
    let se_boot = adjusted.bootstrap.as_ref().map(CovarianceEstimate::se);
    let terms = std::iter::once("(intercept)".to_string()).chain(data.covariate_names.iter().cloned());
    let coefficients = terms
        .zip(&beta)
        .enumerate()
        .map(|(k, (term, b))| Coefficient {
            term,
            estimate: sign * b,
            se_sample: se_beta[k],
            se_bootstrap: se_boot.as_ref().map(|s| s[k]),
        })
        .collect();

    // monotonized estimators borrow the standard errors of the adjusted one
    let estimates = vec![
        row("unadjusted", phi_unadj, &unadjusted, args.level)?,
        row("adjusted", phi, &adjusted, args.level)?,
        row("reg-monotone", reg.expect("requested"), &adjusted, args.level)?,
        row("roc-monotone", roc.expect("requested"), &adjusted, args.level)?,
    ];

    let thresholds = patterns(data)
        .unwrap_or_default()
        .into_iter()
        .map(|z| {
            let t = beta[0] + z.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
            ThresholdRow {
                covariates: z,
                threshold: sign * t,
            }
        })
        .collect();

    Ok(FitReport {
        direction: input.direction,
        measure: input.direction.measure(),
        controlled: input.direction.controlled(),
        rho: args.rho,
        level: args.level,
        marker: data.marker_name.clone(),
        covariates: data.covariate_names.clone(),
        n_cases: input.loaded.dataset.cases.len(),
        n_controls: input.loaded.dataset.controls.len(),
        dropped_rows: input.loaded.dropped_rows.clone(),
        coefficients,
        estimates,
        thresholds,
        bootstrap: boot.map(|(replicates, seed)| BootstrapInfo {
            replicates,
            seed,
            redrawn: adjusted.bootstrap.as_ref().map_or(0, |c| c.redrawn),
        }),
        eigen_root: adjusted.sample.eigen_root,
    })
}

fn fmt_interval(i: &Interval) -> String {
    format!("({:.3}, {:.3})", i.lower, i.upper)
}

pub fn render(report: &FitReport) -> String {
    let mut s = String::new();
    let pct = (report.level * 100.0).round();
    s.push_str(&format!(
        "{} at controlled {} {} ({} cases, {} controls",
        report.measure, report.controlled, report.rho, report.n_cases, report.n_controls
    ));
    if !report.dropped_rows.is_empty() {
        s.push_str(&format!(", {} rows dropped", report.dropped_rows.len()));
    }
    s.push_str(")\n\n");
    s.push_str(&format!("{:<14}{:>10}{:>10}\n", "term", "estimate", "SE"));
    for c in &report.coefficients {
        s.push_str(&format!("{:<14}{:>10.4}{:>10.4}\n", c.term, c.estimate, c.se_sample));
    }
    s.push('\n');
    let boot = report.bootstrap.is_some();
    s.push_str(&format!(
        "{:<14}{:>9}{:>9}{:>18}{:>18}",
        "estimator", "value", "SE", format!("{pct}% Wald"), format!("{pct}% logit")
    ));
    if boot {
        s.push_str(&format!("{:>9}{:>18}", "SE boot", format!("{pct}% logit boot")));
    }
    s.push('\n');
    for e in &report.estimates {
        let logit = e.sample.logit.as_ref().map_or("-".into(), fmt_interval);
        s.push_str(&format!(
            "{:<14}{:>9.4}{:>9.4}{:>18}{:>18}",
            e.estimator,
            e.value,
            e.sample.se,
            fmt_interval(&e.sample.wald),
            logit
        ));
        if let Some(b) = &e.bootstrap {
            let logit = b.logit.as_ref().map_or("-".into(), fmt_interval);
            s.push_str(&format!("{:>9.4}{:>18}", b.se, logit));
        }
        s.push('\n');
    }
    if report.eigen_root {
        s.push_str("\nnote: the sample-based covariance used a symmetric square root\n");
    }
    s
}

pub fn run(args: &FitArgs) -> CliResult<()> {
    let report = build_report(args)?;
    print!("{}", render(&report));
    if let Some(dir) = &args.out {
        let mut out = OutDir::create(dir)?;
        out.json("report.json", &report)?;
    }
    Ok(())
}
