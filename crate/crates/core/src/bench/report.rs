//! Aggregated result rows and their CSV, JSON and Markdown forms.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::experiment::RunRecord;
use super::grid::TraceRow;
use super::ModelKind;
use crate::error::{Error, Result};
use crate::fairsvm::Orientation;
use crate::metrics::EvalReport;

/// Mean and sample standard deviation over runs with a defined value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stat {
    pub mean: Option<f64>,
    /// Absent with fewer than two defined values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
}

impl Stat {
    pub fn from_values(values: impl IntoIterator<Item = Option<f64>>) -> Stat {
        let v: Vec<f64> = values.into_iter().flatten().collect();
        if v.is_empty() {
            return Stat::default();
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = (v.len() > 1)
            .then(|| (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
        Stat { mean: Some(mean), std }
    }
}

/// One model on one dataset, aggregated over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub model: ModelKind,
    pub runs: usize,
    pub seeds: Vec<u64>,
    /// Selected hyperparameters, one entry per run.
    pub c: Vec<f64>,
    pub gamma: Vec<Option<f64>>,
    pub rho: Vec<Option<f64>>,
    pub orientation: Vec<Option<Orientation>>,
    pub epsilon: Option<f64>,
    pub precision: Stat,
    pub dfpr: Stat,
    pub deo: Stat,
    pub accuracy: Stat,
    pub solve_seconds: Stat,
    pub gram_seconds: Stat,
}

impl ResultRow {
    /// Copy with timing fields cleared, for reproducibility comparisons.
    pub fn without_timing(&self) -> ResultRow {
        ResultRow {
            solve_seconds: Stat::default(),
            gram_seconds: Stat::default(),
            ..self.clone()
        }
    }
}

pub const RESULT_FIELDS: [&str; 21] = [
    "dataset", "model", "runs", "seeds", "c", "gamma", "rho", "orientation", "epsilon",
    "precision_mean", "precision_std", "dfpr_mean", "dfpr_std", "deo_mean", "deo_std",
    "accuracy_mean", "accuracy_std", "solve_seconds_mean", "solve_seconds_std",
    "gram_seconds_mean", "gram_seconds_std",
];

/// Columns that hold wall-clock measurements.
pub const TIMING_FIELDS: [&str; 4] = [
    "solve_seconds_mean", "solve_seconds_std", "gram_seconds_mean", "gram_seconds_std",
];

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), num)
}

fn list<T>(v: &[T], f: impl Fn(&T) -> String) -> String {
    v.iter().map(f).collect::<Vec<_>>().join(";")
}

fn opt_item(v: &Option<f64>) -> String {
    v.map_or("none".into(), num)
}

fn orient_item(v: &Option<Orientation>) -> String {
    v.map_or("none", Orientation::as_str).to_string()
}

fn orient(v: Option<Orientation>) -> String {
    v.map_or(String::new(), |o| o.as_str().to_string())
}

fn parse_f64(s: &str, field: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::input(format!("results csv: bad number {s:?} in {field}")))
}

fn parse_opt(s: &str, field: &str) -> Result<Option<f64>> {
    if s.is_empty() || s == "none" {
        Ok(None)
    } else {
        parse_f64(s, field).map(Some)
    }
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(f).collect()
}

fn sorted(rows: &[ResultRow]) -> Vec<&ResultRow> {
    let mut v: Vec<&ResultRow> = rows.iter().collect();
    v.sort_by(|a, b| (&a.dataset, a.model).cmp(&(&b.dataset, b.model)));
    v
}

fn record(r: &ResultRow) -> Vec<String> {
    let mut out = vec![
        r.dataset.clone(),
        r.model.as_str().to_string(),
        r.runs.to_string(),
        list(&r.seeds, |s| s.to_string()),
        list(&r.c, |c| num(*c)),
        list(&r.gamma, opt_item),
        list(&r.rho, opt_item),
        list(&r.orientation, orient_item),
        opt(r.epsilon),
    ];
    for s in [r.precision, r.dfpr, r.deo, r.accuracy, r.solve_seconds, r.gram_seconds] {
        out.push(opt(s.mean));
        out.push(opt(s.std));
    }
    out
}

fn csv_text(header: &[&str], records: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in records {
        w.write_record(&r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io("writing csv", e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::input(format!("csv is not utf-8: {e}")))
}

/// Full-precision CSV ordered by (dataset, model).
pub fn results_csv(rows: &[ResultRow]) -> Result<String> {
    csv_text(&RESULT_FIELDS, sorted(rows).into_iter().map(record))
}

pub fn results_json(rows: &[ResultRow]) -> Result<String> {
    let rows: Vec<&ResultRow> = sorted(rows);
    Ok(serde_json::to_string_pretty(&rows)? + "\n")
}

pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != RESULT_FIELDS {
        return Err(Error::input("results csv: unexpected header"));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let f = |i: usize| &rec[i];
        let stat = |i: usize| -> Result<Stat> {
            Ok(Stat {
                mean: parse_opt(f(i), RESULT_FIELDS[i])?,
                std: parse_opt(f(i + 1), RESULT_FIELDS[i + 1])?,
            })
        };
        rows.push(ResultRow {
            dataset: f(0).to_string(),
            model: ModelKind::from_str(f(1))?,
            runs: f(2).parse().map_err(|_| Error::input("results csv: bad runs"))?,
            seeds: parse_list(f(3), |s| {
                s.parse().map_err(|_| Error::input(format!("results csv: bad seed {s:?}")))
            })?,
            c: parse_list(f(4), |s| parse_f64(s, "c"))?,
            gamma: parse_list(f(5), |s| parse_opt(s, "gamma"))?,
            rho: parse_list(f(6), |s| parse_opt(s, "rho"))?,
            orientation: parse_list(f(7), |s| match s {
                "none" => Ok(None),
                s => Orientation::from_str(s).map(Some),
            })?,
            epsilon: parse_opt(f(8), "epsilon")?,
            precision: stat(9)?,
            dfpr: stat(11)?,
            deo: stat(13)?,
            accuracy: stat(15)?,
            solve_seconds: stat(17)?,
            gram_seconds: stat(19)?,
        });
    }
    Ok(rows)
}

fn fmt3(s: Stat) -> String {
    match (s.mean, s.std) {
        (Some(m), Some(sd)) => format!("{m:.3} ± {sd:.3}"),
        (Some(m), None) => format!("{m:.3}"),
        _ => "undefined".into(),
    }
}

fn distinct(values: Vec<String>) -> String {
    let mut v = values;
    v.dedup();
    if v.len() == 1 {
        v.pop().unwrap()
    } else {
        v.join(", ")
    }
}

/// Markdown table with 3 decimals; per dataset the lowest mean DFPR is bold
/// and the second lowest italic.
pub fn results_markdown(rows: &[ResultRow]) -> String {
    let rows = sorted(rows);
    let mut rank: BTreeMap<(&str, ModelKind), usize> = BTreeMap::new();
    let mut by_dataset: BTreeMap<&str, Vec<&ResultRow>> = BTreeMap::new();
    for r in &rows {
        by_dataset.entry(r.dataset.as_str()).or_default().push(r);
    }
    for (ds, rs) in by_dataset {
        let mut means: Vec<f64> = rs.iter().filter_map(|r| r.dfpr.mean).collect();
        means.sort_by(f64::total_cmp);
        means.dedup();
        for r in rs {
            if let Some(k) = r.dfpr.mean.and_then(|m| means.iter().position(|&x| x == m)) {
                rank.insert((ds, r.model), k);
            }
        }
    }
    let mut out = String::new();
    out.push_str("| Dataset | Model | C | gamma | rho | Precision | DFPR | DEO | Accuracy | Solver time (s) | Gram time (s) |\n");
    out.push_str("|---|---|---|---|---|---|---|---|---|---|---|\n");
    for r in rows {
        let dfpr = fmt3(r.dfpr);
        let dfpr = match rank.get(&(r.dataset.as_str(), r.model)) {
            Some(0) => format!("**{dfpr}**"),
            Some(1) => format!("*{dfpr}*"),
            _ => dfpr,
        };
        let show = |v: &Option<f64>| v.map_or("-".to_string(), |x| x.to_string());
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            r.dataset,
            r.model.display_name(),
            distinct(r.c.iter().map(|c| c.to_string()).collect()),
            distinct(r.gamma.iter().map(show).collect()),
            distinct(r.rho.iter().map(show).collect()),
            fmt3(r.precision),
            dfpr,
            fmt3(r.deo),
            fmt3(r.accuracy),
            fmt3(r.solve_seconds),
            fmt3(r.gram_seconds),
        );
    }
    out
}

/// Per-run records: selected cell, test metrics and timings.
pub fn runs_csv(runs: &[RunRecord]) -> Result<String> {
    let mut header = vec![
        "dataset", "model", "seed", "c", "gamma", "rho", "orientation", "epsilon", "n_train",
        "n_test",
    ];
    header.extend(EvalReport::CSV_FIELDS.iter().skip(1));
    header.extend(["solve_seconds", "gram_seconds", "search_seconds"]);
    let records = runs.iter().map(|r| {
        let mut v = vec![
            r.dataset.clone(),
            r.model.as_str().to_string(),
            r.seed.to_string(),
            num(r.params.c),
            opt(r.params.gamma),
            opt(r.params.rho),
            orient(r.params.orientation),
            opt(r.params.epsilon),
            r.n_train.to_string(),
            r.n_test.to_string(),
        ];
        v.extend(r.report.fields().iter().skip(1).map(|f| f.to_string()));
        v.extend([num(r.solve_seconds), num(r.gram_seconds), num(r.search_seconds)]);
        v
    });
    csv_text(&header, records)
}

/// Every (cell, fold) fit of a grid search in trace order.
pub fn trace_csv(trace: &[TraceRow]) -> Result<String> {
    let header = [
        "model", "rho", "orientation", "c", "gamma", "epsilon", "fold", "status", "dfpr", "deo", "precision",
        "accuracy", "solve_seconds",
    ];
    let records = trace.iter().map(|t| {
        vec![
            t.model.as_str().to_string(),
            opt(t.params.rho),
            orient(t.params.orientation),
            num(t.params.c),
            opt(t.params.gamma),
            opt(t.params.epsilon),
            t.fold.to_string(),
            t.status.clone(),
            opt(t.dfpr),
            opt(t.deo),
            opt(t.precision),
            opt(t.accuracy),
            num(t.solve_seconds),
        ]
    });
    csv_text(&header, records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
    MarkdownTable,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "markdown" | "markdown_table" | "md" => Ok(ReportFormat::MarkdownTable),
            other => Err(Error::input(format!("unknown report format {other:?}"))),
        }
    }
}

/// Writes `rows` to `path` in `format`.
pub fn emit_report(rows: &[ResultRow], format: ReportFormat, path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::input("no result rows to report"));
    }
    let text = match format {
        ReportFormat::Csv => results_csv(rows)?,
        ReportFormat::Json => results_json(rows)?,
        ReportFormat::MarkdownTable => results_markdown(rows),
    };
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(dataset: &str, model: ModelKind, dfpr: Vec<f64>) -> ResultRow {
        let n = dfpr.len();
        ResultRow {
            dataset: dataset.into(),
            model,
            runs: n,
            seeds: (0..n as u64).collect(),
            c: vec![1.0 / 3.0; n],
            gamma: vec![Some(0.1); n],
            rho: vec![model.uses_rho().then_some(0.1); n],
            orientation: vec![model.uses_rho().then_some(Orientation::AMinusB); n],
            epsilon: None,
            precision: Stat::from_values(dfpr.iter().map(|d| Some(0.7 - d))),
            dfpr: Stat::from_values(dfpr.iter().copied().map(Some)),
            deo: Stat::from_values([None]),
            accuracy: Stat::from_values([Some(0.8)]),
            solve_seconds: Stat::from_values([Some(1.25)]),
            gram_seconds: Stat::from_values([Some(0.5)]),
        }
    }

    #[test]
    fn sample_std() {
        let s = Stat::from_values([Some(1.0), Some(2.0), None, Some(3.0)]);
        assert_eq!(s.mean, Some(2.0));
        assert_eq!(s.std, Some(1.0));
        assert_eq!(Stat::from_values([Some(4.0)]).std, None);
    }

    #[test]
    fn one_row_one_line() {
        let csv = results_csv(&[row("d", ModelKind::Svm, vec![0.1])]).unwrap();
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn csv_json_round_trip() {
        let rows = vec![
            row("drug", ModelKind::Svm, vec![0.1, 0.2, 0.35]),
            row("drug", ModelKind::SvmMt, vec![0.1 + 0.2]),
        ];
        let from_csv = parse_results_csv(&results_csv(&rows).unwrap()).unwrap();
        let from_json: Vec<ResultRow> = serde_json::from_str(&results_json(&rows).unwrap()).unwrap();
        assert_eq!(from_csv, rows);
        assert_eq!(from_json, rows);
    }

    #[test]
    fn markdown_marks_best_and_second() {
        let rows = vec![
            row("x", ModelKind::Ferm, vec![0.069]),
            row("x", ModelKind::Svm, vec![0.098]),
            row("x", ModelKind::SvmMt, vec![0.033]),
        ];
        let md = results_markdown(&rows);
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[2].contains("| SVM |") && lines[2].contains("| 0.098 |"));
        assert!(lines[3].contains("SVM-MT") && lines[3].contains("**0.033**"));
        assert!(lines[4].contains("FERM") && lines[4].contains("*0.069*"));
    }

    #[test]
    fn ordering_is_by_dataset_then_model() {
        let rows = vec![
            row("b", ModelKind::Svm, vec![0.1]),
            row("a", ModelKind::Ferm, vec![0.1]),
            row("a", ModelKind::Svm, vec![0.1]),
        ];
        let csv = results_csv(&rows).unwrap();
        let firsts: Vec<&str> = csv.lines().skip(1).map(|l| &l[..l.find(',').unwrap() + 4]).collect();
        assert_eq!(firsts, ["a,svm", "a,fer", "b,svm"]);
    }
}
