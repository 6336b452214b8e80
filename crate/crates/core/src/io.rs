//! CSV ingestion and emission of two-arm biomarker data.
//!
//! Input layout: a header row, a 0/1 status column (1 = case), a marker column
//! and any number of numeric covariate columns. Factor columns may hold
//! arbitrary labels and are expanded into 0/1 indicators against their first
//! level in sorted order. Rows with an empty or `NA` cell in a used column are
//! dropped and reported.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{QrocError, Result};
use crate::sample::{BiomarkerDataset, Sample};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub status: String,
    pub marker: String,
    /// Covariate columns in model order; `None` takes every other column.
    pub covariates: Option<Vec<String>>,
    /// Covariates to one-hot encode.
    pub factors: Vec<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            status: "status".into(),
            marker: "marker".into(),
            covariates: None,
            factors: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedData {
    pub dataset: BiomarkerDataset,
    /// 1-based data row numbers (header excluded) removed for missing values.
    pub dropped_rows: Vec<usize>,
    /// Levels of each factor column in sorted order; the first is the reference.
    pub factor_levels: Vec<(String, Vec<String>)>,
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("na") || c.eq_ignore_ascii_case("nan")
}

fn parse_number(cell: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| QrocError::Parse {
        row,
        column: column.to_string(),
        message: format!("'{}' is not a number", cell.trim()),
    })?;
    if !v.is_finite() {
        return Err(QrocError::Parse {
            row,
            column: column.to_string(),
            message: format!("'{}' is not finite", cell.trim()),
        });
    }
    Ok(v)
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<LoadedData> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<LoadedData> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| QrocError::Invalid(format!("column '{name}' not found in header")))
    };
    let status_col = find(&schema.status)?;
    let marker_col = find(&schema.marker)?;
    let cov_names: Vec<String> = match &schema.covariates {
        Some(c) => c.clone(),
        None => header
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != status_col && k != marker_col)
            .map(|(_, h)| h.clone())
            .collect(),
    };
    if let Some(f) = schema.factors.iter().find(|f| !cov_names.contains(f)) {
        return Err(QrocError::Invalid(format!("factor '{f}' is not a covariate column")));
    }
    let cov_cols: Vec<usize> = cov_names.iter().map(|c| find(c)).collect::<Result<_>>()?;

    let mut records: Vec<(usize, csv::StringRecord)> = Vec::new();
    let mut dropped = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec?;
        let used = std::iter::once(status_col)
            .chain(std::iter::once(marker_col))
            .chain(cov_cols.iter().copied());
        if used.clone().any(|c| rec.get(c).is_none_or(is_missing)) {
            dropped.push(row);
            continue;
        }
        records.push((row, rec));
    }

    // factor levels in sorted order; the first is the reference
    let levels: Vec<Option<Vec<String>>> = cov_names
        .iter()
        .zip(&cov_cols)
        .map(|(name, &c)| {
            schema.factors.contains(name).then(|| {
                let set: BTreeSet<String> = records.iter().map(|(_, r)| r[c].to_string()).collect();
                set.into_iter().collect()
            })
        })
        .collect();
    let mut expanded_names = Vec::new();
    for (name, lv) in cov_names.iter().zip(&levels) {
        match lv {
            Some(lv) => expanded_names.extend(lv.iter().skip(1).map(|l| format!("{name}={l}"))),
            None => expanded_names.push(name.clone()),
        }
    }

    let (mut case_m, mut case_z, mut ctrl_m, mut ctrl_z) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (row, rec) in &records {
        let status = parse_number(&rec[status_col], *row, &schema.status)?;
        let marker = parse_number(&rec[marker_col], *row, &schema.marker)?;
        let mut z = Vec::with_capacity(expanded_names.len());
        for ((name, &c), lv) in cov_names.iter().zip(&cov_cols).zip(&levels) {
            match lv {
                Some(lv) => z.extend(lv.iter().skip(1).map(|l| if &rec[c] == l { 1.0 } else { 0.0 })),
                None => z.push(parse_number(&rec[c], *row, name)?),
            }
        }
        if status == 1.0 {
            case_m.push(marker);
            case_z.extend(z);
        } else if status == 0.0 {
            ctrl_m.push(marker);
            ctrl_z.extend(z);
        } else {
            return Err(QrocError::Invalid(format!(
                "row {row}: status must be 0 or 1, got {}",
                rec[status_col].trim()
            )));
        }
    }
    let p = expanded_names.len();
    let cases = Sample::from_flat(case_m, &case_z, p)?;
    let controls = Sample::from_flat(ctrl_m, &ctrl_z, p)?;
    let dataset = BiomarkerDataset::new(cases, controls, expanded_names, schema.marker.clone())?;
    let factor_levels = cov_names
        .iter()
        .zip(levels)
        .filter_map(|(name, lv)| lv.map(|lv| (name.clone(), lv)))
        .collect();
    Ok(LoadedData {
        dataset,
        dropped_rows: dropped,
        factor_levels,
    })
}

/// Shortest text that parses back to the same `f64`, in exponent form for very
/// large or small magnitudes.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

/// Writes `status,marker,covariates…` with cases first. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(data: &BiomarkerDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["status".to_string(), data.marker_name.clone()];
    header.extend(data.covariate_names.iter().cloned());
    w.write_record(&header)?;
    for (status, arm) in [("1", &data.cases), ("0", &data.controls)] {
        for i in 0..arm.len() {
            let mut rec = vec![status.to_string(), format_f64(arm.marker(i))];
            rec.extend(arm.covariates(i).iter().copied().map(format_f64));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(data: &BiomarkerDataset, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_csv(data, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str, schema: &CsvSchema) -> Result<LoadedData> {
        read_csv(text.as_bytes(), schema)
    }

    #[test]
    fn three_rows_two_cases() {
        let d = load("status,marker,age\n1,2.5,60\n1,3.0,61\n0,1.0,50\n", &CsvSchema::default()).unwrap();
        assert_eq!(d.dataset.cases.len(), 2);
        assert_eq!(d.dataset.controls.len(), 1);
        assert_eq!(d.dataset.covariate_names, vec!["age"]);
        assert!(d.dropped_rows.is_empty());
    }

    #[test]
    fn missing_cell_drops_row() {
        let d = load("status,marker,age\n1,2.5,\n1,3.0,61\n0,1.0,NA\n0,1.5,40\n", &CsvSchema::default()).unwrap();
        assert_eq!(d.dropped_rows, vec![1, 3]);
        assert_eq!(d.dataset.cases.len(), 1);
    }

    #[test]
    fn bad_number_reports_row_and_column() {
        match load("status,marker,age\n1,2.5,60\n0,abc,50\n", &CsvSchema::default()) {
            Err(QrocError::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "marker");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_status_is_a_validation_error() {
        let e = load("status,marker\n1,2\n2,3\n", &CsvSchema::default()).unwrap_err();
        assert!(matches!(e, QrocError::Invalid(_)), "{e}");
    }

    #[test]
    fn factor_is_one_hot_encoded() {
        let schema = CsvSchema {
            factors: vec!["race".into()],
            ..CsvSchema::default()
        };
        let d = load("status,marker,race\n1,1,white\n1,2,aa\n0,0,other\n0,1,aa\n", &schema).unwrap();
        assert_eq!(d.dataset.covariate_names, vec!["race=other", "race=white"]);
        assert_eq!(d.dataset.cases.covariates(0), &[0.0, 1.0]);
        assert_eq!(d.dataset.cases.covariates(1), &[0.0, 0.0]);
        assert_eq!(d.dataset.controls.covariates(0), &[1.0, 0.0]);
        assert_eq!(d.factor_levels, vec![("race".to_string(), vec!["aa".to_string(), "other".into(), "white".into()])]);
    }

    #[test]
    fn formatting_round_trips() {
        for v in [0.1, 1e300, -2.2250738585072014e-308, 123456.789, 0.0, -0.0, 1e-5, 9.999e15] {
            let s = format_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(format_f64(1e300), "1e300");
        assert_eq!(format_f64(0.25), "0.25");
    }

    #[test]
    fn round_trip_is_lossless() {
        let d = load(
            "status,marker,a\n1,0.1,3.3333333333333335\n0,-2.2250738585072014e-308,1e300\n1,7,0\n",
            &CsvSchema::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&d.dataset, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &CsvSchema::default()).unwrap();
        assert_eq!(back.dataset, d.dataset);
    }
}
