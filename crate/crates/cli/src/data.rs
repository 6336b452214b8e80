//! Input options shared by the analysis commands.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use qroc_core::io::{load_csv, CsvSchema, LoadedData};
use qroc_core::monotone::ScanDirection;
use qroc_core::roc::swap_roles;
use qroc_core::BiomarkerDataset;
use serde::Serialize;

use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Specificity at a controlled sensitivity.
    SpecAtSens,
    /// Sensitivity at a controlled specificity.
    SensAtSpec,
}

impl Direction {
    /// Name of the estimated accuracy measure.
    pub fn measure(self) -> &'static str {
        match self {
            Direction::SpecAtSens => "specificity",
            Direction::SensAtSpec => "sensitivity",
        }
    }

    /// Name of the controlled accuracy measure.
    pub fn controlled(self) -> &'static str {
        match self {
            Direction::SpecAtSens => "sensitivity",
            Direction::SensAtSpec => "specificity",
        }
    }

    /// Maps thresholds of the analysed marker back to the input marker scale.
    pub fn marker_sign(self) -> f64 {
        match self {
            Direction::SpecAtSens => 1.0,
            Direction::SensAtSpec => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scan {
    /// Visit knots from high to low controlled level.
    Descending,
    /// Visit knots from low to high controlled level.
    Ascending,
}

impl From<Scan> for ScanDirection {
    fn from(s: Scan) -> Self {
        match s {
            Scan::Descending => ScanDirection::DescendingRho,
            Scan::Ascending => ScanDirection::AscendingRho,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Column holding disease status (1 = case, 0 = control).
    #[arg(long, default_value = "status")]
    pub status_col: String,
    /// Column holding the biomarker.
    #[arg(long, default_value = "marker")]
    pub marker_col: String,
    /// Comma-separated covariate columns; all remaining columns when omitted.
    /// Pass an empty string for an unadjusted analysis.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,
    /// Categorical covariate to expand into 0/1 indicators (repeatable).
    #[arg(long = "factor")]
    pub factors: Vec<String>,
    #[arg(long, value_enum, default_value_t = Direction::SpecAtSens)]
    pub direction: Direction,
}

pub struct Input {
    pub loaded: LoadedData,
    /// Dataset in the orientation of the requested direction.
    pub analysis: BiomarkerDataset,
    pub direction: Direction,
}

impl DataArgs {
    pub fn load(&self) -> CliResult<Input> {
        let schema = CsvSchema {
            status: self.status_col.clone(),
            marker: self.marker_col.clone(),
            covariates: self
                .covariates
                .as_ref()
                .map(|c| c.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()),
            factors: self.factors.clone(),
        };
        let loaded = load_csv(&self.data, &schema)?;
        if !loaded.dropped_rows.is_empty() {
            eprintln!(
                "note: dropped {} row(s) with missing values: {}",
                loaded.dropped_rows.len(),
                summarize_rows(&loaded.dropped_rows)
            );
        }
        let analysis = match self.direction {
            Direction::SpecAtSens => loaded.dataset.clone(),
            Direction::SensAtSpec => swap_roles(&loaded.dataset),
        };
        Ok(Input {
            loaded,
            analysis,
            direction: self.direction,
        })
    }
}

fn summarize_rows(rows: &[usize]) -> String {
    const SHOWN: usize = 20;
    let mut s: Vec<String> = rows.iter().take(SHOWN).map(ToString::to_string).collect();
    if rows.len() > SHOWN {
        s.push(format!("... ({} more)", rows.len() - SHOWN));
    }
    s.join(", ")
}
