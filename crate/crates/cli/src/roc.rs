//! `qroc roc`: adjusted and unadjusted ROC curves, monotonized variants and
//! an optional simultaneous confidence band.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use qroc_core::inference::{confidence_band, BandCenter, BandEstimate};
use qroc_core::monotone::{monotonize_path, monotonize_roc, ScanDirection};
use qroc_core::qreg::{default_path_domain, fit_path, CoefficientPath};
use qroc_core::roc::{adjusted_roc_on_knots, specificity_at, RocCurve};
use qroc_core::BiomarkerDataset;

use crate::data::{DataArgs, Direction, Scan};
use crate::error::{invalid, CliResult};
use crate::output::{num, OutDir, Table};
use crate::svg::{Chart, Ribbon, Series, PALETTE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CenterArg {
    Raw,
    RocMonotone,
}

#[derive(Debug, Args)]
pub struct RocArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Lower end of the controlled-level domain (default depends on n and p).
    #[arg(long)]
    pub rho_min: Option<f64>,
    /// Upper end of the controlled-level domain.
    #[arg(long)]
    pub rho_max: Option<f64>,
    /// Scan direction of the monotonized curves.
    #[arg(long, value_enum, default_value_t = Scan::Descending)]
    pub scan: Scan,
    /// Bootstrap replicates for the simultaneous band (at least 100); no band when omitted.
    #[arg(long)]
    pub band_bootstrap: Option<usize>,
    /// Seed for the band bootstrap; required with --band-bootstrap.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simultaneous coverage of the band.
    #[arg(long, default_value_t = 0.95)]
    pub band_level: f64,
    /// Curve the band is centred on.
    #[arg(long, value_enum, default_value_t = CenterArg::Raw)]
    pub band_center: CenterArg,
    /// First grid point of the band.
    #[arg(long, default_value_t = 0.1)]
    pub band_from: f64,
    /// Last grid point of the band.
    #[arg(long, default_value_t = 0.9)]
    pub band_to: f64,
    /// Spacing of the band grid.
    #[arg(long, default_value_t = 0.01)]
    pub band_step: f64,
}

/// Evenly spaced grid from `from` to `to`, rounded to ten decimals so that
/// printed values stay short.
pub fn even_grid(from: f64, to: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(step > 0.0) || !(to >= from) {
        return Err(invalid(format!("bad grid: from {from} to {to} by {step}")));
    }
    let k = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=k)
        .map(|i| ((from + step * i as f64) * 1e10).round() / 1e10)
        .collect())
}

/// Step curve on its knots, closed at the right end of its last step.
fn step_table(curve: &RocCurve, end: f64) -> Table {
    let mut t = Table::new(["rho", "phi"]);
    for (r, p) in curve.grid.iter().zip(&curve.phi) {
        t.push_numbers(&[*r, *p]);
    }
    if let (Some(&last), Some(&p)) = (curve.grid.last(), curve.phi.last()) {
        if end > last {
            t.push_numbers(&[end, p]);
        }
    }
    t
}

fn step_points(curve: &RocCurve, end: f64) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(2 * curve.len());
    for k in 0..curve.len() {
        let next = curve.grid.get(k + 1).copied().unwrap_or(end);
        pts.push((1.0 - curve.grid[k], curve.phi[k]));
        pts.push((1.0 - next, curve.phi[k]));
    }
    pts
}

pub struct RocOutput {
    pub path: CoefficientPath,
    pub adjusted: RocCurve,
    pub unadjusted: RocCurve,
    pub unadjusted_end: f64,
    /// `(ρ, φ̂_reg(ρ))` on the step ends of the path plus an even grid.
    pub mono_reg: Vec<(f64, f64)>,
    pub mono_roc: Vec<(f64, f64)>,
    pub band: Option<BandEstimate>,
}

fn domain(args: &RocArgs, data: &BiomarkerDataset) -> CliResult<(f64, f64)> {
    let (lo, hi) = default_path_domain(&data.cases);
    let (lo, hi) = (args.rho_min.unwrap_or(lo), args.rho_max.unwrap_or(hi));
    if !(lo > 0.0 && hi < 1.0 && lo < hi) {
        return Err(invalid(format!("domain [{lo}, {hi}] must be a non-empty subset of (0, 1)")));
    }
    Ok((lo, hi))
}

pub fn compute(args: &RocArgs, data: &BiomarkerDataset) -> CliResult<RocOutput> {
    if args.band_bootstrap.is_some() && args.seed.is_none() {
        return Err(invalid("--band-bootstrap requires --seed"));
    }
    let (lo, hi) = domain(args, data)?;
    let dir: ScanDirection = args.scan.into();

    let started = Instant::now();
    let path = fit_path(&data.cases, lo, hi)?;
    let adjusted = adjusted_roc_on_knots(&path, &data.controls)?;
    eprintln!(
        "path: {} steps on [{lo}, {hi}] in {:.1} ms",
        path.betas.len(),
        started.elapsed().as_secs_f64() * 1e3
    );

    let plain = data.without_covariates();
    let (ulo, uhi) = default_path_domain(&plain.cases);
    let (ulo, uhi) = (ulo.min(lo), uhi.max(hi));
    let upath = fit_path(&plain.cases, ulo, uhi)?;
    let unadjusted = adjusted_roc_on_knots(&upath, &plain.controls)?;

    let mono = monotonize_path(&path, &data.cases, dir);
    let mut reg_grid: Vec<f64> = (1..200).map(|k| k as f64 / 200.0).filter(|&r| r > lo && r < hi).collect();
    reg_grid.push(lo);
    reg_grid.extend(&mono.grid);
    reg_grid.sort_by(f64::total_cmp);
    reg_grid.dedup();
    let mono_reg = reg_grid
        .iter()
        .map(|&r| Ok((r, specificity_at(&data.controls, &mono.eval(r))?)))
        .collect::<CliResult<Vec<_>>>()?;

    let mroc = monotonize_roc(&adjusted, dir);
    let mut mono_roc = vec![(lo, mroc.eval(lo))];
    mono_roc.extend(mroc.grid.iter().zip(&mroc.phi).map(|(r, p)| (*r, *p)));
    mono_roc.dedup_by(|b, a| a.0 == b.0);

    let band = match args.band_bootstrap {
        Some(b) => {
            let grid = even_grid(args.band_from, args.band_to, args.band_step)?;
            let center = match args.band_center {
                CenterArg::Raw => BandCenter::Raw,
                CenterArg::RocMonotone => BandCenter::RocMonotone(dir),
            };
            let seed = args.seed.expect("checked above");
            Some(confidence_band(data, &grid, b, args.band_level, seed, center)?)
        }
        None => None,
    };

    Ok(RocOutput {
        path,
        adjusted,
        unadjusted,
        unadjusted_end: uhi,
        mono_reg,
        mono_roc,
        band,
    })
}

fn pairs_table(points: &[(f64, f64)]) -> Table {
    let mut t = Table::new(["rho", "phi"]);
    for &(r, p) in points {
        t.push_numbers(&[r, p]);
    }
    t
}

pub fn band_table(band: &BandEstimate) -> Table {
    let mut t = Table::new(["rho", "center", "se", "lower", "upper"]);
    for k in 0..band.grid.len() {
        t.push_numbers(&[band.grid[k], band.center[k], band.se[k], band.lower[k], band.upper[k]]);
    }
    t
}

fn axis_labels(direction: Direction) -> (String, String) {
    (format!("1 - {}", direction.controlled()), direction.measure().to_string())
}

fn roc_chart(res: &RocOutput, direction: Direction) -> Chart {
    let (x_label, y_label) = axis_labels(direction);
    let flip = |pts: &[(f64, f64)]| pts.iter().map(|&(r, p)| (1.0 - r, p)).collect();
    Chart {
        title: format!("ROC curve, {} at controlled {}", direction.measure(), direction.controlled()),
        x_label,
        y_label,
        x_range: (0.0, 1.0),
        y_range: (0.0, 1.0),
        series: vec![
            Series {
                label: "unadjusted".into(),
                points: step_points(&res.unadjusted, res.unadjusted_end),
                color: PALETTE[7],
                dashed: true,
            },
            Series {
                label: "adjusted".into(),
                points: step_points(&res.adjusted, res.path.rho_hi),
                color: PALETTE[0],
                dashed: false,
            },
            Series {
                label: "reg-monotone".into(),
                points: flip(&res.mono_reg),
                color: PALETTE[2],
                dashed: false,
            },
            Series {
                label: "roc-monotone".into(),
                points: flip(&res.mono_roc),
                color: PALETTE[1],
                dashed: false,
            },
        ],
        ribbons: Vec::new(),
    }
}

fn band_chart(band: &BandEstimate, direction: Direction) -> Chart {
    let (x_label, y_label) = axis_labels(direction);
    let pct = (band.level * 100.0).round();
    Chart {
        title: format!("{pct}% equal-precision band (eta = {:.3})", band.eta),
        x_label,
        y_label,
        x_range: (0.0, 1.0),
        y_range: (0.0, 1.0),
        series: vec![Series {
            label: "estimate".into(),
            points: band.grid.iter().zip(&band.center).map(|(r, c)| (1.0 - r, *c)).collect(),
            color: PALETTE[0],
            dashed: false,
        }],
        ribbons: vec![Ribbon {
            label: format!("{pct}% band"),
            points: (0..band.grid.len())
                .map(|k| (1.0 - band.grid[k], band.lower[k], band.upper[k]))
                .collect(),
            color: PALETTE[0],
        }],
    }
}

pub fn run(args: &RocArgs) -> CliResult<()> {
    let input = args.data.load()?;
    let res = compute(args, &input.analysis)?;
    let mut out = OutDir::create(&args.out)?;
    out.csv("roc_unadjusted.csv", &step_table(&res.unadjusted, res.unadjusted_end))?;
    out.csv("roc_step.csv", &step_table(&res.adjusted, res.path.rho_hi))?;
    out.csv("roc_mono_reg.csv", &pairs_table(&res.mono_reg))?;
    out.csv("roc_mono_roc.csv", &pairs_table(&res.mono_roc))?;
    out.write("roc.svg", roc_chart(&res, input.direction).render().as_bytes())?;
    if let Some(band) = &res.band {
        out.csv("band.csv", &band_table(band))?;
        out.write("band.svg", band_chart(band, input.direction).render().as_bytes())?;
        println!("band: eta = {}, {} grid points", num(band.eta), band.grid.len());
        if !band.zero_se.is_empty() {
            eprintln!(
                "note: {} grid point(s) with zero bootstrap SE left out of the sup statistic",
                band.zero_se.len()
            );
        }
    }
    println!(
        "adjusted path: {} steps over [{}, {}]{}",
        res.path.betas.len(),
        num(res.path.rho_lo),
        num(res.path.rho_hi),
        if res.path.fallback { " (grid fallback)" } else { "" }
    );
    for p in out.written() {
        println!("wrote {}", p.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_grid_has_clean_values() {
        let g = even_grid(0.1, 0.9, 0.01).unwrap();
        assert_eq!(g.len(), 81);
        assert_eq!(g[7], 0.17);
        assert_eq!(*g.last().unwrap(), 0.9);
        assert!(even_grid(0.5, 0.1, 0.1).is_err());
    }
}
