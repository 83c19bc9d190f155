//! Loads the public datasets when their raw files are present.

use std::path::PathBuf;

use fairsep::data::{load_dataset, DatasetSchema};
use fairsep::Group;

fn data_dir() -> PathBuf {
    std::env::var_os("FAIRSEP_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

fn present(schema: &DatasetSchema) -> bool {
    let ok = schema.files().iter().all(|f| data_dir().join(f).is_file());
    if !ok {
        eprintln!("skipping {}: raw files not in {}", schema.name, data_dir().display());
    }
    ok
}

#[test]
fn adult_provided_split() {
    let schema = DatasetSchema::bundled("adult").unwrap();
    if !present(&schema) {
        return;
    }
    let out = load_dataset(&data_dir(), &schema).unwrap();
    let test = out.test.unwrap();
    assert_eq!(out.train.len(), 32561);
    assert_eq!(test.len(), 16281);
    assert_eq!(out.report.rows_kept + out.report.rows_filtered, out.report.rows_read);
    assert_eq!(out.train.dim(), test.dim());
    assert!(out.train.count(Group::A, 1) > 0 && out.train.count(Group::B, 1) > 0);

    // Training columns are standardized; test columns use training statistics.
    let d = out.train.dim();
    let n = out.train.len() as f64;
    let std_names: Vec<&str> = out.report.standardization.iter().map(|s| s.name.as_str()).collect();
    let mut test_mean_nonzero = false;
    for (j, name) in out.train.feature_names().iter().enumerate().take(d) {
        if !std_names.contains(&name.as_str()) {
            continue;
        }
        let col: Vec<f64> = out.train.features().rows().map(|r| r[j]).collect();
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() <= 1e-9, "{name} mean {mean}");
        assert!((var.sqrt() - 1.0).abs() <= 1e-9, "{name} std {}", var.sqrt());
        let tm = test.features().rows().map(|r| r[j]).sum::<f64>() / test.len() as f64;
        test_mean_nonzero |= tm.abs() > 1e-6;
    }
    assert!(test_mean_nonzero);
    for oh in &out.report.one_hot {
        let cols: Vec<usize> = out
            .train
            .feature_names()
            .iter()
            .enumerate()
            .filter(|(_, f)| f.starts_with(&format!("{}=", oh.column)))
            .map(|(j, _)| j)
            .collect();
        for r in test.features().rows() {
            assert_eq!(cols.iter().map(|&j| r[j]).sum::<f64>(), 1.0);
        }
    }
}

#[test]
fn compas_filtered_rows() {
    let schema = DatasetSchema::bundled("compas").unwrap();
    if !present(&schema) {
        return;
    }
    let out = load_dataset(&data_dir(), &schema).unwrap();
    assert_eq!(out.train.len(), 6172);
    assert_eq!(out.report.raw_feature_count, 10);
    assert_eq!(out.train.count(Group::A, 1) + out.train.count(Group::A, -1), 2103);
}

#[test]
fn drug_bundled_schema() {
    let schema = DatasetSchema::bundled("drug").unwrap();
    if !present(&schema) {
        return;
    }
    let out = load_dataset(&data_dir(), &schema).unwrap();
    // The public file has 1885 rows; published descriptions quote 1889.
    assert!((1885..=1889).contains(&out.train.len()));
    assert_eq!(out.report.raw_feature_count, 11);
}

#[test]
fn arrhythmia_bundled_schema() {
    let schema = DatasetSchema::bundled("arrhythmia").unwrap();
    if !present(&schema) {
        return;
    }
    let out = load_dataset(&data_dir(), &schema).unwrap();
    assert_eq!(out.train.len(), 452);
    assert!(out.report.dropped_features.iter().any(|f| f.reason.starts_with("unknown")));
}
