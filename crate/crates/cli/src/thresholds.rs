//! `qroc thresholds`: covariate-specific thresholds along one covariate.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use qroc_core::qreg::{check_level, fit_quantile};
use qroc_core::roc::{covariate_thresholds, extrapolated};

use crate::data::{DataArgs, Input};
use crate::error::{invalid, CliResult};
use crate::output::{num, OutDir, Table};
use crate::svg::{padded_range, Chart, Series, PALETTE};

/// Most distinct values a numeric `--by` covariate may take.
const MAX_BY_LEVELS: usize = 12;

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Controlled level, in (0, 1).
    #[arg(long)]
    pub rho: f64,
    /// Numeric covariate to sweep.
    #[arg(long)]
    pub sweep: String,
    /// Start of the sweep (default: smallest value among the fitted subjects).
    #[arg(long)]
    pub from: Option<f64>,
    /// End of the sweep (default: largest value among the fitted subjects).
    #[arg(long)]
    pub to: Option<f64>,
    /// Number of sweep points.
    #[arg(long, default_value_t = 41)]
    pub steps: usize,
    /// Value of another covariate, as NAME=VALUE (repeatable). Factors take a level.
    #[arg(long = "fix")]
    pub fixed: Vec<String>,
    /// Covariate drawn as one line per level (a factor or a numeric covariate with few values).
    #[arg(long)]
    pub by: Option<String>,
    /// Directory for thresholds.csv and thresholds.svg.
    #[arg(long)]
    pub out: PathBuf,
}

/// One line of the threshold plot.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdLine {
    pub label: Option<String>,
    pub sweep: Vec<f64>,
    pub threshold: Vec<f64>,
    pub extrapolated: Vec<bool>,
}

/// Assignment of a (possibly factor) input covariate to model columns.
fn assign(
    names: &[String],
    factors: &BTreeMap<String, Vec<String>>,
    name: &str,
    value: &str,
    z: &mut [Option<f64>],
) -> CliResult<()> {
    if let Some(levels) = factors.get(name) {
        if !levels.iter().any(|l| l == value) {
            return Err(invalid(format!(
                "'{value}' is not a level of factor '{name}' (levels: {})",
                levels.join(", ")
            )));
        }
        for lv in &levels[1..] {
            let col = names.iter().position(|n| *n == format!("{name}={lv}")).expect("factor column");
            z[col] = Some(if lv == value { 1.0 } else { 0.0 });
        }
        return Ok(());
    }
    let col = names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| invalid(format!("unknown covariate '{name}' (known: {})", names.join(", "))))?;
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| invalid(format!("value '{value}' for '{name}' is not a number")))?;
    z[col] = Some(v);
    Ok(())
}

pub fn compute(args: &ThresholdArgs, input: &Input) -> CliResult<Vec<ThresholdLine>> {
    let data = &input.analysis;
    let names = &data.covariate_names;
    let factors: BTreeMap<String, Vec<String>> = input.loaded.factor_levels.iter().cloned().collect();
    if args.steps < 2 {
        return Err(invalid("--steps must be at least 2"));
    }
    if factors.contains_key(&args.sweep) {
        return Err(invalid(format!("cannot sweep factor '{}'", args.sweep)));
    }
    let sweep_col = names
        .iter()
        .position(|n| *n == args.sweep)
        .ok_or_else(|| invalid(format!("unknown covariate '{}' (known: {})", args.sweep, names.join(", "))))?;

    let mut base: Vec<Option<f64>> = vec![None; names.len()];
    for f in &args.fixed {
        let (name, value) = f
            .split_once('=')
            .ok_or_else(|| invalid(format!("--fix expects NAME=VALUE, got '{f}'")))?;
        if name == args.sweep || args.by.as_deref() == Some(name) {
            return Err(invalid(format!("'{name}' is both fixed and swept")));
        }
        assign(names, &factors, name, value, &mut base)?;
    }

    // lines: (label, partial assignment)
    let lines: Vec<(Option<String>, Vec<Option<f64>>)> = match &args.by {
        None => vec![(None, base.clone())],
        Some(by) if by == &args.sweep => return Err(invalid("--by and --sweep name the same covariate")),
        Some(by) => {
            let levels: Vec<String> = match factors.get(by) {
                Some(lv) => lv.clone(),
                None => {
                    let col = names
                        .iter()
                        .position(|n| n == by)
                        .ok_or_else(|| invalid(format!("unknown covariate '{by}' (known: {})", names.join(", "))))?;
                    let mut vals: Vec<f64> = (0..data.cases.len()).map(|i| data.cases.covariates(i)[col]).collect();
                    vals.sort_by(f64::total_cmp);
                    vals.dedup();
                    if vals.len() > MAX_BY_LEVELS {
                        return Err(invalid(format!(
                            "'{by}' takes {} distinct values; --by allows at most {MAX_BY_LEVELS}",
                            vals.len()
                        )));
                    }
                    vals.into_iter().map(num).collect()
                }
            };
            levels
                .into_iter()
                .map(|lv| {
                    let mut z = base.clone();
                    assign(names, &factors, by, &lv, &mut z)?;
                    Ok((Some(format!("{by}={lv}")), z))
                })
                .collect::<CliResult<_>>()?
        }
    };

    let (obs_lo, obs_hi) = data.cases.covariate_ranges()[sweep_col];
    let (from, to) = (args.from.unwrap_or(obs_lo), args.to.unwrap_or(obs_hi));
    if !(from.is_finite() && to.is_finite() && from <= to) {
        return Err(invalid(format!("bad sweep range [{from}, {to}]")));
    }
    let sweep: Vec<f64> = (0..args.steps)
        .map(|k| from + (to - from) * k as f64 / (args.steps - 1) as f64)
        .collect();

    let fit = fit_quantile(&data.cases, args.rho)?;
    let sign = input.direction.marker_sign();
    lines
        .into_iter()
        .map(|(label, partial)| {
            if let Some(k) = (0..names.len()).find(|&k| k != sweep_col && partial[k].is_none()) {
                return Err(invalid(format!(
                    "covariate '{}' needs a value: pass --fix {}=VALUE",
                    names[k],
                    names[k].split('=').next().unwrap_or(&names[k])
                )));
            }
            let grid: Vec<Vec<f64>> = sweep
                .iter()
                .map(|&s| {
                    let mut z: Vec<f64> = partial.iter().map(|v| v.unwrap_or(0.0)).collect();
                    z[sweep_col] = s;
                    z
                })
                .collect();
            let t = covariate_thresholds(&fit.beta, &grid)?;
            Ok(ThresholdLine {
                label,
                sweep: sweep.clone(),
                threshold: t.into_iter().map(|v| sign * v).collect(),
                extrapolated: extrapolated(&data.cases, &grid),
            })
        })
        .collect()
}

pub fn table(args: &ThresholdArgs, lines: &[ThresholdLine]) -> Table {
    let mut header = Vec::new();
    if let Some(by) = &args.by {
        header.push(by.clone());
    }
    header.extend([args.sweep.clone(), "threshold".into(), "extrapolated".into()]);
    let mut t = Table::new(header);
    for line in lines {
        for k in 0..line.sweep.len() {
            let mut row = Vec::new();
            if let Some(label) = &line.label {
                row.push(label.split_once('=').map_or(label.as_str(), |(_, v)| v).to_string());
            }
            row.push(num(line.sweep[k]));
            row.push(num(line.threshold[k]));
            row.push(line.extrapolated[k].to_string());
            t.push(row);
        }
    }
    t
}

pub fn run(args: &ThresholdArgs) -> CliResult<()> {
    check_level(args.rho)?;
    let input = args.data.load()?;
    let lines = compute(args, &input)?;
    let flagged = lines.iter().flat_map(|l| &l.extrapolated).filter(|&&e| e).count();
    if flagged > 0 {
        eprintln!("warning: {flagged} grid point(s) lie outside the observed covariate range");
    }
    let series = lines
        .iter()
        .enumerate()
        .map(|(k, l)| Series {
            label: l.label.clone().unwrap_or_else(|| "threshold".into()),
            points: l.sweep.iter().copied().zip(l.threshold.iter().copied()).collect(),
            color: PALETTE[k % PALETTE.len()],
            dashed: k >= PALETTE.len(),
        })
        .collect::<Vec<_>>();
    let chart = Chart {
        title: format!(
            "{} threshold at controlled {} {}",
            input.analysis.marker_name,
            input.direction.controlled(),
            args.rho
        ),
        x_label: args.sweep.clone(),
        y_label: format!("{} threshold", input.analysis.marker_name),
        x_range: padded_range(lines.iter().flat_map(|l| l.sweep.iter().copied())),
        y_range: padded_range(lines.iter().flat_map(|l| l.threshold.iter().copied())),
        series,
        ribbons: Vec::new(),
    };
    let mut out = OutDir::create(&args.out)?;
    out.csv("thresholds.csv", &table(args, &lines))?;
    out.write("thresholds.svg", chart.render().as_bytes())?;
    for p in out.written() {
        println!("wrote {}", p.display());
    }
    Ok(())
}
