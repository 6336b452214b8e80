//! End-to-end tests of the `qroc` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qroc_core::io::save_csv;
use qroc_core::simulate::simulate_dataset;
use qroc_core::{BiomarkerDataset, Sample};
use serde_json::Value;

fn qroc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qroc"))
        .args(args)
        .env_remove("QROC_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = qroc(args);
    assert!(
        out.status.success(),
        "qroc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(args: &[&str]) -> i32 {
    qroc(args).status.code().expect("exit code")
}

fn synthetic(dir: &Path, n1: usize, n0: usize, seed: u64) -> PathBuf {
    let path = dir.join(format!("synth_{n1}_{n0}_{seed}.csv"));
    save_csv(&simulate_dataset(n1, n0, seed, 0), &path).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn read_table(p: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(p).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn estimate(report: &Value, name: &str) -> f64 {
    report["estimates"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["estimator"] == name)
        .unwrap()["value"]
        .as_f64()
        .unwrap()
}

#[test]
fn fit_writes_report_with_all_estimators() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic(dir.path(), 120, 150, 1);
    let out = dir.path().join("fit");
    let stdout = ok(&["fit", "--data", s(&data), "--rho", "0.9", "--bootstrap", "100", "--seed", "5", "--out", s(&out)]);
    let text = String::from_utf8(stdout.stdout).unwrap();
    assert!(text.contains("specificity at controlled sensitivity 0.9"), "{text}");
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["n_cases"], 120);
    assert_eq!(report["coefficients"].as_array().unwrap().len(), 3);
    for e in report["estimates"].as_array().unwrap() {
        let v = e["value"].as_f64().unwrap();
        let w = &e["sample"]["wald"];
        assert!((0.0..=1.0).contains(&v));
        assert!(w["lower"].as_f64().unwrap() <= v && v <= w["upper"].as_f64().unwrap());
        assert!(e["bootstrap"]["se"].as_f64().unwrap() > 0.0);
    }
    assert_eq!(report["bootstrap"]["replicates"], 100);
}

#[test]
fn direction_switch_equals_role_swapped_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = simulate_dataset(80, 90, 3, 0);
    let swapped = BiomarkerDataset::new(
        d.controls.map_markers(|m| -m),
        d.cases.map_markers(|m| -m),
        d.covariate_names.clone(),
        "marker",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    save_csv(&d, &a).unwrap();
    save_csv(&swapped, &b).unwrap();
    let (oa, ob) = (dir.path().join("oa"), dir.path().join("ob"));
    ok(&["fit", "--data", s(&a), "--rho", "0.8", "--direction", "sens-at-spec", "--out", s(&oa)]);
    ok(&["fit", "--data", s(&b), "--rho", "0.8", "--out", s(&ob)]);
    let (ra, rb) = (read_json(&oa.join("report.json")), read_json(&ob.join("report.json")));
    assert_eq!(ra["measure"], "sensitivity");
    assert_eq!(ra["estimates"], rb["estimates"]);
    for (ca, cb) in ra["coefficients"].as_array().unwrap().iter().zip(rb["coefficients"].as_array().unwrap()) {
        assert_eq!(ca["estimate"].as_f64().unwrap(), -cb["estimate"].as_f64().unwrap());
    }
}

#[test]
fn roc_emits_curves_band_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic(dir.path(), 150, 352, 2);
    let out = dir.path().join("roc");
    ok(&["roc", "--data", s(&data), "--out", s(&out), "--band-bootstrap", "100", "--seed", "9"]);
    for f in ["roc_unadjusted.csv", "roc_step.csv", "roc_mono_reg.csv", "roc_mono_roc.csv", "band.csv"] {
        let (header, rows) = read_table(&out.join(f));
        assert!(!rows.is_empty(), "{f}");
        if f == "band.csv" {
            assert_eq!(header, ["rho", "center", "se", "lower", "upper"]);
            for r in &rows {
                let v: Vec<f64> = r.iter().map(|c| c.parse().unwrap()).collect();
                assert!(0.0 <= v[3] && v[3] <= v[1] && v[1] <= v[4] && v[4] <= 1.0, "{r:?}");
            }
        } else {
            assert_eq!(header, ["rho", "phi"]);
        }
    }
    let (_, mono) = read_table(&out.join("roc_mono_roc.csv"));
    let phi: Vec<f64> = mono.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(phi.windows(2).all(|w| w[1] <= w[0]));
    for f in ["roc.svg", "band.svg"] {
        let svg = std::fs::read_to_string(out.join(f)).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("1 - sensitivity"));
    }
}

#[test]
fn perfect_separation_gives_unit_specificity() {
    let dir = tempfile::tempdir().unwrap();
    let cases = Sample::new((0..40).map(|i| 10.0 + i as f64 * 0.1).collect(), &(0..40).map(|i| vec![(i % 7) as f64]).collect::<Vec<_>>()).unwrap();
    let controls = Sample::new((0..40).map(|i| i as f64 * 0.1).collect(), &(0..40).map(|i| vec![(i % 5) as f64]).collect::<Vec<_>>()).unwrap();
    let path = dir.path().join("sep.csv");
    save_csv(&BiomarkerDataset::unnamed(cases, controls).unwrap(), &path).unwrap();
    let out = dir.path().join("o");
    ok(&["roc", "--data", s(&path), "--out", s(&out), "--rho-min", "0.1", "--rho-max", "0.9"]);
    let (_, rows) = read_table(&out.join("roc_step.csv"));
    assert!(rows.iter().all(|r| r[1] == "1"));
}

#[test]
fn band_needs_enough_replicates_and_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic(dir.path(), 60, 60, 4);
    let out = dir.path().join("o");
    assert_eq!(code(&["roc", "--data", s(&data), "--out", s(&out), "--band-bootstrap", "50", "--seed", "1"]), 4);
    assert_eq!(code(&["roc", "--data", s(&data), "--out", s(&out), "--band-bootstrap", "200"]), 4);
}

#[test]
fn thresholds_by_factor_with_extrapolation_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = simulate_dataset(100, 100, 6, 0);
    let path = dir.path().join("f.csv");
    let mut text = String::from("status,marker,age,group\n");
    for (status, arm) in [(1, &d.cases), (0, &d.controls)] {
        for i in 0..arm.len() {
            let group = ["b", "a", "c"][i % 3];
            text.push_str(&format!("{status},{},{},{group}\n", arm.marker(i), 50.0 + 20.0 * arm.covariates(i)[0]));
        }
    }
    std::fs::write(&path, text).unwrap();
    let out = dir.path().join("t");
    ok(&[
        "thresholds", "--data", s(&path), "--factor", "group", "--rho", "0.9", "--sweep", "age", "--from", "40",
        "--to", "80", "--steps", "5", "--by", "group", "--out", s(&out),
    ]);
    let (header, rows) = read_table(&out.join("thresholds.csv"));
    assert_eq!(header, ["group", "age", "threshold", "extrapolated"]);
    assert_eq!(rows.len(), 15);
    assert_eq!(rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>()[..6], ["a", "a", "a", "a", "a", "b"]);
    assert_eq!(rows[0][3], "true");
    assert_eq!(rows[2][3], "false");
    assert!(std::fs::read_to_string(out.join("thresholds.svg")).unwrap().contains("group=c"));

    assert_eq!(code(&["thresholds", "--data", s(&path), "--factor", "group", "--rho", "0.9", "--sweep", "height", "--by", "group", "--out", s(&out)]), 4);
    // group needs a value when not drawn by line
    assert_eq!(code(&["thresholds", "--data", s(&path), "--factor", "group", "--rho", "0.9", "--sweep", "age", "--out", s(&out)]), 4);
    ok(&["thresholds", "--data", s(&path), "--factor", "group", "--rho", "0.9", "--sweep", "age", "--fix", "group=c", "--out", s(&out)]);
}

#[test]
fn zero_slope_covariate_gives_constant_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    // every case marker appears once in each stratum, so both strata share their quantile
    let base: Vec<f64> = (0..25).map(|i| ((i * 7919) % 101) as f64 / 10.0).collect();
    let markers: Vec<f64> = base.iter().chain(&base).copied().collect();
    let z: Vec<Vec<f64>> = (0..50).map(|i| vec![(i / 25) as f64]).collect();
    let controls = Sample::new(vec![0.0, 1.0, 2.0, 3.0], &[vec![0.0], vec![1.0], vec![0.0], vec![1.0]]).unwrap();
    let path = dir.path().join("z.csv");
    save_csv(&BiomarkerDataset::unnamed(Sample::new(markers, &z).unwrap(), controls).unwrap(), &path).unwrap();
    let out = dir.path().join("t");
    ok(&["thresholds", "--data", s(&path), "--rho", "0.9", "--sweep", "z1", "--out", s(&out)]);
    let (_, rows) = read_table(&out.join("thresholds.csv"));
    assert!(rows.iter().all(|r| r[1] == rows[0][1]), "{rows:?}");
}

#[test]
fn simulation_threshold_slope_matches_design() {
    // at rho = 0.5 the true slope in z1 is 1 - rho
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic(dir.path(), 20000, 50, 8);
    let out = dir.path().join("t");
    ok(&[
        "thresholds", "--data", s(&data), "--rho", "0.5", "--sweep", "z1", "--from", "0", "--to", "1", "--steps", "2",
        "--fix", "z2=0", "--out", s(&out),
    ]);
    let (_, rows) = read_table(&out.join("thresholds.csv"));
    let t: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!((t[1] - t[0] - 0.5).abs() < 0.1, "slope {}", t[1] - t[0]);
    assert!((t[0] - (-(0.5f64.ln())).ln()).abs() < 0.1, "intercept {}", t[0]);
}

#[test]
fn simulate_writes_named_columns_and_marks_single_replicates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    ok(&["simulate", "--seed", "3", "--n", "50", "--rho", "0.9", "--reps", "1", "--out", s(&out)]);
    let (header, rows) = read_table(&out.join("simulation.csv"));
    for col in ["Bias", "SD", "SE", "Cov", "LCov"] {
        assert!(header.iter().any(|h| h == col), "{col}");
    }
    let sd = header.iter().position(|h| h == "SD").unwrap();
    assert_eq!(rows[0][sd], "");
    let report = read_json(&out.join("simulation.json"));
    assert!(report[0]["rows"][0]["sd"].is_null());
}

#[test]
fn simulate_reads_config_file_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.toml");
    std::fs::write(
        &cfg,
        "n = [40]\nrho0 = [0.9, 0.8]\nreps = 20\nbootstrap = 30\nestimators = [\"raw\", \"roc-monotone\"]\nvariance_methods = [\"sample\", \"bootstrap\"]\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["simulate", "--config", s(&cfg), "--seed", "11", "--out", s(&a)]);
    ok(&["simulate", "--config", s(&cfg), "--seed", "11", "--out", s(&b)]);
    let (ca, cb) = (std::fs::read(a.join("simulation.csv")).unwrap(), std::fs::read(b.join("simulation.csv")).unwrap());
    assert_eq!(ca, cb);
    assert_eq!(read_table(&a.join("simulation.csv")).1.len(), 8);

    std::fs::write(&cfg, "n = [40]\nunknown = 1\n").unwrap();
    assert_eq!(code(&["simulate", "--config", s(&cfg), "--seed", "1", "--out", s(&a)]), 3);
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let w = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let bad_number = w("n.csv", "status,marker\n1,abc\n0,1\n");
    let bad_status = w("s.csv", "status,marker\n1,1\n2,1\n");
    // a constant covariate duplicates the intercept
    let mut text = String::from("status,marker,z\n");
    for i in 0..20 {
        text.push_str(&format!("{},{},1\n", i % 2, i));
    }
    let singular = w("c.csv", &text);
    assert_eq!(code(&["fit", "--data", s(&bad_number), "--rho", "0.5"]), 3);
    assert_eq!(code(&["fit", "--data", s(&bad_status), "--rho", "0.5"]), 4);
    assert_eq!(code(&["fit", "--data", s(&singular), "--rho", "0.5"]), 5);
    assert_eq!(code(&["fit", "--data", s(&singular), "--rho", "1.5"]), 4);
    assert_eq!(code(&["fit", "--rho", "0.5"]), 2);
    assert_eq!(code(&["simulate", "--n", "50", "--out", "x"]), 2);
    assert_eq!(code(&["fit", "--data", "/nonexistent/file.csv", "--rho", "0.5"]), 1);
}

#[test]
fn missing_rows_are_dropped_and_reported() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("status,marker,z\n");
    for i in 0..40 {
        let z = if i == 3 { "NA".to_string() } else { format!("{}", (i * 37 % 11) as f64 / 10.0) };
        text.push_str(&format!("{},{},{z}\n", i % 2, (i * 53 % 17) as f64 / 3.0));
    }
    let path = dir.path().join("m.csv");
    std::fs::write(&path, text).unwrap();
    let out = dir.path().join("o");
    let o = ok(&["fit", "--data", s(&path), "--rho", "0.7", "--out", s(&out)]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("dropped 1 row"));
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["dropped_rows"], serde_json::json!([4]));
    assert_eq!(report["n_cases"].as_u64().unwrap() + report["n_controls"].as_u64().unwrap(), 39);
    assert!(estimate(&report, "adjusted") >= 0.0);
}
