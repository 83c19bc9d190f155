//! Raw delimited files to standardized, one-hot encoded datasets.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::schema::DatasetSchema;
use crate::dataset::{hex, Features, Group, GroupedDataset};
use crate::error::{Error, Result};

/// Labelled rows holding the raw text of every feature column.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub labels: Vec<i8>,
    pub groups: Vec<Group>,
    pub rows_read: usize,
    pub rows_filtered: usize,
}

impl RawDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows at `indices`; read/filter counts are not carried over.
    pub fn subset(&self, indices: &[usize]) -> RawDataset {
        RawDataset {
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            groups: indices.iter().map(|&i| self.groups[i]).collect(),
            rows_read: indices.len(),
            rows_filtered: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedFeature {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneHot {
    pub column: String,
    pub categories: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub split: String,
    pub rows_read: usize,
    pub rows_kept: usize,
    pub rows_filtered: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub rows_filtered: usize,
    pub splits: Vec<SplitCounts>,
    /// Raw feature columns considered before any were dropped.
    pub raw_feature_count: usize,
    /// Columns of the processed feature matrix.
    pub feature_count: usize,
    pub dropped_features: Vec<DroppedFeature>,
    /// Unknown values replaced per feature in the training split.
    pub imputed_counts: BTreeMap<String, usize>,
    /// Unknown or unseen values replaced per feature outside the training split.
    pub test_imputed_counts: BTreeMap<String, usize>,
    pub standardization: Vec<Standardization>,
    pub one_hot: Vec<OneHot>,
}

impl PreprocessReport {
    fn add_split(&mut self, split: &str, raw: &RawDataset) {
        self.rows_read += raw.rows_read;
        self.rows_kept += raw.len();
        self.rows_filtered += raw.rows_filtered;
        self.splits.push(SplitCounts {
            split: split.to_string(),
            rows_read: raw.rows_read,
            rows_kept: raw.len(),
            rows_filtered: raw.rows_filtered,
        });
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ColumnPlan {
    Dropped,
    Numeric { fill: f64, mean: f64, std: f64 },
    Categorical { categories: Vec<String>, fill: usize },
}

/// Per-column transforms fitted on a training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessor {
    columns: Vec<String>,
    plans: Vec<ColumnPlan>,
    missing_token: String,
}

fn is_missing(v: &str, token: &str) -> bool {
    v.is_empty() || v == token
}

fn parse_numeric(v: &str, column: &str, row: usize) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| {
            Error::input(format!(
                "column {column:?}, row {}: {v:?} is not numeric; list it under categorical_columns",
                row + 1
            ))
        })
}

fn median(sorted: &[f64]) -> f64 {
    let m = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[m]
    } else {
        0.5 * (sorted[m - 1] + sorted[m])
    }
}

impl Preprocessor {
    /// Fits imputation, standardization and one-hot maps on `train`.
    pub fn fit(train: &RawDataset, schema: &DatasetSchema) -> Result<(Preprocessor, PreprocessReport)> {
        if train.is_empty() {
            return Err(Error::input("no rows left to fit preprocessing on"));
        }
        let categorical: BTreeSet<&str> =
            schema.categorical_columns.iter().map(String::as_str).collect();
        let token = schema.missing_token.as_str();
        let n = train.len();
        let mut report = PreprocessReport {
            raw_feature_count: train.columns.len(),
            ..PreprocessReport::default()
        };
        let mut plans = Vec::with_capacity(train.columns.len());
        for (j, name) in train.columns.iter().enumerate() {
            let observed: Vec<(usize, &str)> = train
                .rows
                .iter()
                .enumerate()
                .map(|(i, r)| (i, r[j].as_str()))
                .filter(|(_, v)| !is_missing(v, token))
                .collect();
            let unknown = n - observed.len();
            let frac = unknown as f64 / n as f64;
            let mut drop = |reason: String| {
                report.dropped_features.push(DroppedFeature {
                    name: name.clone(),
                    reason,
                });
                ColumnPlan::Dropped
            };
            if observed.is_empty() {
                plans.push(drop("no known values".into()));
                continue;
            }
            if frac > schema.unknown_drop_threshold {
                plans.push(drop(format!(
                    "unknown fraction {frac:.4} exceeds threshold {}",
                    schema.unknown_drop_threshold
                )));
                continue;
            }
            let plan = if categorical.contains(name.as_str()) {
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                for &(_, v) in &observed {
                    *counts.entry(v).or_default() += 1;
                }
                if counts.len() < 2 {
                    drop("constant".into())
                } else {
                    // BTreeMap iteration is sorted, so ties go to the smallest category.
                    let mut fill = 0;
                    let mut best = 0;
                    for (k, &c) in counts.values().enumerate() {
                        if c > best {
                            best = c;
                            fill = k;
                        }
                    }
                    let categories: Vec<String> = counts.keys().map(|s| s.to_string()).collect();
                    report.one_hot.push(OneHot {
                        column: name.clone(),
                        categories: categories.clone(),
                    });
                    ColumnPlan::Categorical { categories, fill }
                }
            } else {
                let mut vals = Vec::with_capacity(observed.len());
                for &(i, v) in &observed {
                    vals.push(parse_numeric(v, name, i)?);
                }
                let mut sorted = vals.clone();
                sorted.sort_by(f64::total_cmp);
                let fill = median(&sorted);
                let total: f64 = vals.iter().sum::<f64>() + unknown as f64 * fill;
                let mean = total / n as f64;
                let ss: f64 = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                    + unknown as f64 * (fill - mean).powi(2);
                let std = (ss / n as f64).sqrt();
                if std <= 1e-12 * mean.abs().max(1.0) {
                    drop("constant".into())
                } else {
                    report.standardization.push(Standardization {
                        name: name.clone(),
                        mean,
                        std,
                    });
                    ColumnPlan::Numeric { fill, mean, std }
                }
            };
            if unknown > 0 && plan != ColumnPlan::Dropped {
                report.imputed_counts.insert(name.clone(), unknown);
            }
            plans.push(plan);
        }
        let pre = Preprocessor {
            columns: train.columns.clone(),
            plans,
            missing_token: schema.missing_token.clone(),
        };
        report.feature_count = pre.output_names().len();
        Ok((pre, report))
    }

    pub fn output_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, plan) in self.columns.iter().zip(&self.plans) {
            match plan {
                ColumnPlan::Dropped => {}
                ColumnPlan::Numeric { .. } => out.push(name.clone()),
                ColumnPlan::Categorical { categories, .. } => {
                    out.extend(categories.iter().map(|c| format!("{name}={c}")));
                }
            }
        }
        out
    }

    /// Applies the fitted maps. Returns the dataset and, per column, how many
    /// unknown or unseen values were replaced.
    pub fn transform(&self, raw: &RawDataset) -> Result<(GroupedDataset, BTreeMap<String, usize>)> {
        if raw.columns != self.columns {
            return Err(Error::input("raw columns differ from the fitted columns"));
        }
        let names = self.output_names();
        let dim = names.len();
        let mut values = Vec::with_capacity(raw.len() * dim);
        let mut replaced: BTreeMap<String, usize> = BTreeMap::new();
        for (i, row) in raw.rows.iter().enumerate() {
            for (j, plan) in self.plans.iter().enumerate() {
                let v = row[j].as_str();
                let missing = is_missing(v, &self.missing_token);
                match plan {
                    ColumnPlan::Dropped => {}
                    ColumnPlan::Numeric { fill, mean, std } => {
                        let x = if missing {
                            *replaced.entry(self.columns[j].clone()).or_default() += 1;
                            *fill
                        } else {
                            parse_numeric(v, &self.columns[j], i)?
                        };
                        values.push((x - mean) / std);
                    }
                    ColumnPlan::Categorical { categories, fill } => {
                        let k = match categories.binary_search_by(|c| c.as_str().cmp(v)) {
                            Ok(k) if !missing => k,
                            _ => {
                                *replaced.entry(self.columns[j].clone()).or_default() += 1;
                                *fill
                            }
                        };
                        values.extend((0..categories.len()).map(|c| if c == k { 1.0 } else { 0.0 }));
                    }
                }
            }
        }
        if dim == 0 {
            return Err(Error::input("every feature column was dropped"));
        }
        let x = Features::new(values, raw.len(), dim)?;
        let d = GroupedDataset::new(x, raw.labels.clone(), raw.groups.clone(), names)?;
        Ok((d, replaced))
    }
}

/// Header names with repeats suffixed `_2`, `_3`, ...
fn dedup_names(names: Vec<String>) -> Vec<String> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    names
        .into_iter()
        .map(|n| {
            let c = seen.entry(n.clone()).or_default();
            *c += 1;
            if *c == 1 {
                n
            } else {
                format!("{n}_{c}")
            }
        })
        .collect()
}

fn column_index(columns: &[String], name: &str) -> Result<usize> {
    columns
        .iter()
        .position(|c| c == name)
        .ok_or_else(|| Error::input(format!("schema names column {name:?}, which the file lacks")))
}

fn offending(values: BTreeSet<String>) -> String {
    let shown: Vec<String> = values.iter().take(10).map(|v| format!("{v:?}")).collect();
    let more = values.len().saturating_sub(10);
    if more > 0 {
        format!("{} and {more} more", shown.join(", "))
    } else {
        shown.join(", ")
    }
}

/// Parses delimited text and applies the schema's filters and label maps.
pub fn read_raw<R: Read>(mut r: R, schema: &DatasetSchema, extra_skip: usize) -> Result<RawDataset> {
    let mut text = String::new();
    r.read_to_string(&mut text)
        .map_err(|e| Error::io("reading raw dataset", e))?;
    let skip = schema.skip_lines + extra_skip;
    let body = if skip == 0 {
        text.as_str()
    } else {
        let mut rest = text.as_str();
        for _ in 0..skip {
            rest = rest.split_once('\n').map_or("", |(_, tail)| tail);
        }
        rest
    };
    if !schema.delimiter.is_ascii() {
        return Err(Error::input("delimiter must be an ASCII character"));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(schema.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let mut columns: Vec<String> = if schema.has_header {
        dedup_names(rdr.headers()?.iter().map(str::to_string).collect())
    } else {
        schema.columns.clone()
    };
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        records.push(rec);
    }
    if columns.is_empty() {
        let width = records.first().map_or(0, |r| r.len());
        columns = (1..=width).map(|j| format!("col{j}")).collect();
    }
    for (i, rec) in records.iter().enumerate() {
        if rec.len() != columns.len() {
            return Err(Error::input(format!(
                "record {} has {} fields, expected {}",
                i + 1,
                rec.len(),
                columns.len()
            )));
        }
    }

    let t = column_index(&columns, &schema.target.column)?;
    let s = column_index(&columns, &schema.sensitive.column)?;
    let features: Vec<usize> = if schema.feature_columns.is_empty() {
        for d in &schema.drop_columns {
            column_index(&columns, d)?;
        }
        (0..columns.len())
            .filter(|&j| j != t && j != s && !schema.drop_columns.contains(&columns[j]))
            .collect()
    } else {
        schema
            .feature_columns
            .iter()
            .map(|c| column_index(&columns, c))
            .collect::<Result<_>>()?
    };
    let filters: Vec<(usize, &super::schema::RowFilter)> = schema
        .row_filters
        .iter()
        .map(|f| Ok((column_index(&columns, &f.column)?, f)))
        .collect::<Result<_>>()?;

    let rows_read = records.len();
    let mut out = RawDataset {
        columns: features.iter().map(|&j| columns[j].clone()).collect(),
        rows: Vec::new(),
        labels: Vec::new(),
        groups: Vec::new(),
        rows_read,
        rows_filtered: 0,
    };
    let (mut bad_target, mut bad_group) = (BTreeSet::new(), BTreeSet::new());
    for rec in &records {
        if !filters.iter().all(|(j, f)| f.keeps(&rec[*j])) {
            out.rows_filtered += 1;
            continue;
        }
        let tv = &rec[t];
        let label = if schema.target.positive_values.iter().any(|v| v == tv) {
            1
        } else if schema.target.negative_values.is_empty()
            && !is_missing(tv, &schema.missing_token)
            || schema.target.negative_values.iter().any(|v| v == tv)
        {
            -1
        } else {
            bad_target.insert(tv.to_string());
            0
        };
        let sv = &rec[s];
        let group = if schema.sensitive.group_a_values.iter().any(|v| v == sv) {
            Some(Group::A)
        } else if schema.sensitive.group_b_values.is_empty()
            && !is_missing(sv, &schema.missing_token)
            || schema.sensitive.group_b_values.iter().any(|v| v == sv)
        {
            Some(Group::B)
        } else {
            bad_group.insert(sv.to_string());
            None
        };
        if let (Some(g), true) = (group, label != 0) {
            out.labels.push(label);
            out.groups.push(g);
            out.rows.push(features.iter().map(|&j| rec[j].to_string()).collect());
        }
    }
    if !bad_target.is_empty() {
        return Err(Error::input(format!(
            "unmapped values in target column {:?}: {}",
            schema.target.column,
            offending(bad_target)
        )));
    }
    if !bad_group.is_empty() {
        return Err(Error::input(format!(
            "unmapped values in sensitive column {:?}: {}",
            schema.sensitive.column,
            offending(bad_group)
        )));
    }
    Ok(out)
}

pub fn read_raw_file(path: &Path, schema: &DatasetSchema, extra_skip: usize) -> Result<RawDataset> {
    let f = std::fs::File::open(path)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    read_raw(std::io::BufReader::new(f), schema, extra_skip)
}

/// Loads one file, fitting every statistic on all of its rows.
pub fn load_csv(path: &Path, schema: &DatasetSchema) -> Result<(GroupedDataset, PreprocessReport)> {
    let raw = read_raw_file(path, schema, 0)?;
    let (pre, mut report) = Preprocessor::fit(&raw, schema)?;
    report.add_split("all", &raw);
    let (d, _) = pre.transform(&raw)?;
    Ok((d, report))
}

#[derive(Debug, Clone)]
pub struct LoadedData {
    pub train: GroupedDataset,
    pub test: Option<GroupedDataset>,
    pub report: PreprocessReport,
}

/// Preprocesses `train`, then applies the training statistics to `test`.
pub fn preprocess_split(
    train: &RawDataset,
    test: &RawDataset,
    schema: &DatasetSchema,
) -> Result<LoadedData> {
    let (pre, mut report) = Preprocessor::fit(train, schema)?;
    report.add_split("train", train);
    report.add_split("test", test);
    let (train, _) = pre.transform(train)?;
    let (test, replaced) = pre.transform(test)?;
    report.test_imputed_counts = replaced;
    Ok(LoadedData {
        train,
        test: Some(test),
        report,
    })
}

/// SHA-256 of a file as lowercase hex.
pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = std::fs::File::open(path)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let k = f
            .read(&mut buf)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if k == 0 {
            break;
        }
        h.update(&buf[..k]);
    }
    Ok(hex(&h.finalize()))
}

/// Checks that every file the schema reads exists in `dir` and matches its pinned hash.
pub fn verify_sources(dir: &Path, schema: &DatasetSchema) -> Result<()> {
    for file in schema.files() {
        let path = dir.join(file);
        let source = schema.sources.iter().find(|s| s.file == file);
        if !path.is_file() {
            let hint = source.map_or(String::new(), |s| format!("; download it from {}", s.url));
            return Err(Error::input(format!(
                "{} not found{hint} and place it in {}",
                path.display(),
                dir.display()
            )));
        }
        if let Some(expected) = source.and_then(|s| s.sha256.as_deref()) {
            let actual = sha256_file(&path)?;
            if !actual.eq_ignore_ascii_case(expected) {
                let url = source.map_or("", |s| s.url.as_str());
                return Err(Error::DataIntegrity(format!(
                    "{} has sha256 {actual}, expected {expected}; re-download it from {url}",
                    path.display()
                )));
            }
        }
    }
    Ok(())
}

/// Verifies sources, then loads either the provided split or the single file.
pub fn load_dataset(dir: &Path, schema: &DatasetSchema) -> Result<LoadedData> {
    verify_sources(dir, schema)?;
    match (&schema.file, &schema.train_test) {
        (Some(f), _) => {
            let (train, report) = load_csv(&dir.join(f), schema)?;
            Ok(LoadedData {
                train,
                test: None,
                report,
            })
        }
        (None, Some(tt)) => {
            let train = read_raw_file(&dir.join(&tt.train), schema, 0)?;
            let test = read_raw_file(&dir.join(&tt.test), schema, tt.test_skip_lines)?;
            preprocess_split(&train, &test, schema)
        }
        (None, None) => Err(Error::input("schema names no data file")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(extra: &str) -> DatasetSchema {
        DatasetSchema::from_toml_str(&format!(
            r#"
            name = "toy"
            file = "toy.csv"
            categorical_columns = ["colour"]
            {extra}
            [target]
            column = "y"
            positive_values = ["yes"]
            negative_values = ["no"]
            [sensitive]
            column = "s"
            group_a_values = ["m"]
            "#
        ))
        .unwrap()
    }

    const TOY: &str = "x,colour,k,y,s\n1,red,5,yes,m\n2,blue,5,no,f\n3,red,5,no,m\n";

    #[test]
    fn standardizes_and_encodes() {
        let raw = read_raw(TOY.as_bytes(), &schema(""), 0).unwrap();
        let (pre, report) = Preprocessor::fit(&raw, &schema("")).unwrap();
        let (d, _) = pre.transform(&raw).unwrap();
        assert_eq!(d.feature_names(), ["x", "colour=blue", "colour=red"]);
        let col: Vec<f64> = (0..3).map(|i| d.features().row(i)[0]).collect();
        let expect = [-1.224744871391589, 0.0, 1.224744871391589];
        for (a, b) in col.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(d.labels(), [1, -1, -1]);
        assert_eq!(d.groups(), [Group::A, Group::B, Group::A]);
        assert_eq!(report.dropped_features[0].name, "k");
        assert_eq!(report.dropped_features[0].reason, "constant");
        for i in 0..3 {
            let r = d.features().row(i);
            assert_eq!(r[1] + r[2], 1.0);
        }
    }

    #[test]
    fn unmapped_target_lists_values() {
        let text = "x,colour,y,s\n1,red,maybe,m\n2,red,yes,f\n3,red,perhaps,f\n";
        let err = read_raw(text.as_bytes(), &schema(""), 0).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Input(_)));
        assert!(msg.contains("\"maybe\"") && msg.contains("\"perhaps\""), "{msg}");
    }

    #[test]
    fn unknowns_dropped_or_imputed() {
        let text = "a,b,colour,y,s\n?,1,red,yes,m\n?,?,red,no,f\n1,3,?,no,m\n2,4,blue,yes,f\n";
        let sch = schema("unknown_drop_threshold = 0.3");
        let raw = read_raw(text.as_bytes(), &sch, 0).unwrap();
        let (pre, report) = Preprocessor::fit(&raw, &sch).unwrap();
        assert_eq!(report.dropped_features.len(), 1);
        assert_eq!(report.dropped_features[0].name, "a");
        assert_eq!(report.imputed_counts["b"], 1);
        assert_eq!(report.imputed_counts["colour"], 1);
        let (d, _) = pre.transform(&raw).unwrap();
        // b imputed with median 3 -> column [1,3,3,4]
        let b: Vec<f64> = (0..4).map(|i| d.features().row(i)[0]).collect();
        let mean: f64 = 11.0 / 4.0;
        let std = ((1.0 - mean).powi(2) + 2.0 * (3.0 - mean).powi(2) + (4.0 - mean).powi(2)) / 4.0;
        assert!((b[1] - (3.0 - mean) / std.sqrt()).abs() < 1e-12);
        // colour mode is red
        assert_eq!(d.features().row(2)[1..], [0.0, 1.0]);
    }

    #[test]
    fn test_split_uses_training_statistics() {
        let sch = schema("");
        let train = read_raw(TOY.as_bytes(), &sch, 0).unwrap();
        let test = read_raw("x,colour,k,y,s\n10,green,5,no,f\n".as_bytes(), &sch, 0).unwrap();
        let out = preprocess_split(&train, &test, &sch).unwrap();
        let t = out.test.unwrap();
        let std = (2.0f64 / 3.0).sqrt();
        assert!((t.features().row(0)[0] - (10.0 - 2.0) / std).abs() < 1e-12);
        assert_eq!(t.features().row(0)[1..], [0.0, 1.0]);
        assert_eq!(out.report.test_imputed_counts["colour"], 1);
        assert_eq!(out.report.rows_kept, 4);
    }

    #[test]
    fn filters_and_header_duplicates() {
        let sch = DatasetSchema::from_toml_str(
            r#"
            name = "f"
            file = "f.csv"
            feature_columns = ["v_2"]
            [target]
            column = "y"
            positive_values = ["1"]
            [sensitive]
            column = "s"
            group_a_values = ["m"]
            [[row_filters]]
            column = "v"
            op = "le"
            value = 2
            "#,
        )
        .unwrap();
        let text = "v,v,y,s\n1,10,1,m\n3,20,0,f\n2,30,0,f\n";
        let raw = read_raw(text.as_bytes(), &sch, 0).unwrap();
        assert_eq!(raw.rows_read, 3);
        assert_eq!(raw.rows_filtered, 1);
        assert_eq!(raw.rows, [vec!["10".to_string()], vec!["30".to_string()]]);
    }

    #[test]
    fn headerless_with_skipped_banner() {
        let sch = DatasetSchema::from_toml_str(
            r#"
            name = "h"
            file = "h.csv"
            has_header = false
            [target]
            column = "col3"
            positive_values = [">50K."]
            [sensitive]
            column = "col2"
            group_a_values = ["Male"]
            "#,
        )
        .unwrap();
        let text = "|banner\n 1, Male, >50K.\n 2, Female, <=50K.\n\n";
        let raw = read_raw(text.as_bytes(), &sch, 1).unwrap();
        assert_eq!(raw.columns, ["col1"]);
        assert_eq!(raw.labels, [1, -1]);
        assert_eq!(raw.groups, [Group::A, Group::B]);
    }

    #[test]
    fn checksum_mismatch_is_integrity_failure() {
        let dir = std::env::temp_dir().join(format!("fairsep-sum-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("toy.csv"), TOY).unwrap();
        let mut sch = schema("");
        sch.sources.push(super::super::schema::SourceFile {
            file: "toy.csv".into(),
            url: "https://example.org/toy.csv".into(),
            sha256: Some("00".repeat(32)),
        });
        let err = verify_sources(&dir, &sch).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        sch.sources[0].sha256 = Some(sha256_file(&dir.join("toy.csv")).unwrap());
        assert!(load_dataset(&dir, &sch).is_ok());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
