//! Per-group confusion counts, fairness gaps and the finite-class bound.
//!
//! The positive class is `+1`. Rates whose denominator is empty are `None`
//! and propagate as `None` into the gaps that depend on them.
//!
//! Flat record fields, in CSV column order: `n`, `tp_a`, `fp_a`, `tn_a`,
//! `fn_a`, `tp_b`, `fp_b`, `tn_b`, `fn_b`, `tpr_a`, `tpr_b`, `fpr_a`,
//! `fpr_b`, `dfpr`, `deo`, `precision`, `accuracy`. Undefined values are
//! written as `undefined` in CSV and `null` in JSON.

use serde::{Deserialize, Serialize};

use crate::dataset::{Group, GroupedDataset};
use crate::error::{Error, Result};

/// Confusion counts for one group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn tpr(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn fpr(&self) -> Option<f64> {
        ratio(self.fp, self.fp + self.tn)
    }

    fn add(&mut self, truth: i8, pred: i8) {
        match (truth > 0, pred > 0) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroupConfusion {
    pub a: Confusion,
    pub b: Confusion,
}

impl GroupConfusion {
    pub fn get(&self, g: Group) -> &Confusion {
        match g {
            Group::A => &self.a,
            Group::B => &self.b,
        }
    }

    pub fn pooled(&self) -> Confusion {
        Confusion {
            tp: self.a.tp + self.b.tp,
            fp: self.a.fp + self.b.fp,
            tn: self.a.tn + self.b.tn,
            fn_: self.a.fn_ + self.b.fn_,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub group_confusion: GroupConfusion,
    pub tpr_a: Option<f64>,
    pub tpr_b: Option<f64>,
    pub fpr_a: Option<f64>,
    pub fpr_b: Option<f64>,
    /// `|fpr_a - fpr_b|`
    pub dfpr: Option<f64>,
    /// `|tpr_a - tpr_b|`
    pub deo: Option<f64>,
    /// Pooled over both groups.
    pub precision: Option<f64>,
    pub accuracy: Option<f64>,
}

fn gap(x: Option<f64>, y: Option<f64>) -> Option<f64> {
    Some((x? - y?).abs())
}

pub fn evaluate(predictions: &[i8], truth: &GroupedDataset) -> Result<EvalReport> {
    if predictions.len() != truth.len() {
        return Err(Error::input(format!(
            "{} predictions for {} samples",
            predictions.len(),
            truth.len()
        )));
    }
    let mut gc = GroupConfusion::default();
    for ((&p, &y), &g) in predictions.iter().zip(truth.labels()).zip(truth.groups()) {
        match g {
            Group::A => gc.a.add(y, p),
            Group::B => gc.b.add(y, p),
        }
    }
    Ok(EvalReport::from_confusion(gc))
}

impl EvalReport {
    pub fn from_confusion(gc: GroupConfusion) -> EvalReport {
        let (tpr_a, tpr_b) = (gc.a.tpr(), gc.b.tpr());
        let (fpr_a, fpr_b) = (gc.a.fpr(), gc.b.fpr());
        let pooled = gc.pooled();
        let dfpr = gap(fpr_a, fpr_b);
        let deo = gap(tpr_a, tpr_b);
        if dfpr.is_none() {
            log::warn!("false positive rate undefined for a group; DFPR is undefined");
        }
        if deo.is_none() {
            log::warn!("true positive rate undefined for a group; DEO is undefined");
        }
        EvalReport {
            group_confusion: gc,
            tpr_a,
            tpr_b,
            fpr_a,
            fpr_b,
            dfpr,
            deo,
            precision: ratio(pooled.tp, pooled.tp + pooled.fp),
            accuracy: ratio(pooled.tp + pooled.tn, pooled.total()),
        }
    }

    pub const CSV_FIELDS: [&'static str; 17] = [
        "n", "tp_a", "fp_a", "tn_a", "fn_a", "tp_b", "fp_b", "tn_b", "fn_b", "tpr_a", "tpr_b",
        "fpr_a", "fpr_b", "dfpr", "deo", "precision", "accuracy",
    ];

    /// Values in [`Self::CSV_FIELDS`] order.
    pub fn fields(&self) -> [Field; 17] {
        let gc = &self.group_confusion;
        [
            Field::Count(gc.a.total() + gc.b.total()),
            Field::Count(gc.a.tp),
            Field::Count(gc.a.fp),
            Field::Count(gc.a.tn),
            Field::Count(gc.a.fn_),
            Field::Count(gc.b.tp),
            Field::Count(gc.b.fp),
            Field::Count(gc.b.tn),
            Field::Count(gc.b.fn_),
            Field::Rate(self.tpr_a),
            Field::Rate(self.tpr_b),
            Field::Rate(self.fpr_a),
            Field::Rate(self.fpr_b),
            Field::Rate(self.dfpr),
            Field::Rate(self.deo),
            Field::Rate(self.precision),
            Field::Rate(self.accuracy),
        ]
    }

    pub fn csv_header() -> String {
        Self::CSV_FIELDS.join(",")
    }

    pub fn csv_row(&self) -> String {
        self.fields().iter().map(Field::to_string).collect::<Vec<_>>().join(",")
    }

    /// Flat JSON object keyed by the CSV field names.
    pub fn to_json(&self) -> serde_json::Value {
        let map = Self::CSV_FIELDS
            .iter()
            .zip(self.fields())
            .map(|(k, f)| {
                let v = match f {
                    Field::Count(c) => serde_json::Value::from(c),
                    Field::Rate(r) => r.map_or(serde_json::Value::Null, serde_json::Value::from),
                };
                ((*k).to_string(), v)
            })
            .collect();
        serde_json::Value::Object(map)
    }
}

/// One cell of the flat record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Field {
    Count(usize),
    Rate(Option<f64>),
}

impl std::fmt::Display for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Field::Count(c) => write!(f, "{c}"),
            Field::Rate(Some(r)) => write!(f, "{r:?}"),
            Field::Rate(None) => f.write_str("undefined"),
        }
    }
}

/// Change between two consecutive reports of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeStep {
    /// Index of the later report.
    pub index: usize,
    pub d_tpr_a: Option<f64>,
    pub d_tpr_b: Option<f64>,
    pub d_fpr_a: Option<f64>,
    pub d_fpr_b: Option<f64>,
    /// TPR moved in opposite directions, each by more than [`PROBE_THRESHOLD`].
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MistreatmentDiagnostic {
    pub steps: Vec<ProbeStep>,
}

impl MistreatmentDiagnostic {
    pub fn any_flagged(&self) -> bool {
        self.steps.iter().any(|s| s.flagged)
    }
}

pub const PROBE_THRESHOLD: f64 = 0.01;

fn delta(x: Option<f64>, y: Option<f64>) -> Option<f64> {
    Some(y? - x?)
}

/// Walks reports ordered by increasing constraint strength and marks steps
/// where one group's TPR gain is matched by the other's loss.
pub fn disparate_mistreatment_probe(reports: &[EvalReport]) -> MistreatmentDiagnostic {
    let steps = reports
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let (p, q) = (&w[0], &w[1]);
            let d_tpr_a = delta(p.tpr_a, q.tpr_a);
            let d_tpr_b = delta(p.tpr_b, q.tpr_b);
            let flagged = match (d_tpr_a, d_tpr_b) {
                (Some(da), Some(db)) => {
                    da.abs() > PROBE_THRESHOLD && db.abs() > PROBE_THRESHOLD && da.signum() == -db.signum()
                }
                _ => false,
            };
            ProbeStep {
                index: k + 1,
                d_tpr_a,
                d_tpr_b,
                d_fpr_a: delta(p.fpr_a, q.fpr_a),
                d_fpr_b: delta(p.fpr_b, q.fpr_b),
                flagged,
            }
        })
        .collect();
    MistreatmentDiagnostic { steps }
}

/// `sqrt((ln |F| + ln(1/delta)) / (2 n))`.
pub fn uniform_bound(card_f: f64, delta: f64, n: usize) -> Result<f64> {
    if !(card_f >= 1.0) || !card_f.is_finite() {
        return Err(Error::input(format!("|F| must be a finite value >= 1, got {card_f}")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::input(format!("delta must lie in (0, 1], got {delta}")));
    }
    if n == 0 {
        return Err(Error::input("n must be positive"));
    }
    Ok(((card_f.ln() - delta.ln()) / (2.0 * n as f64)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cells(a: Confusion, b: Confusion) -> (Vec<i8>, GroupedDataset) {
        let mut y = Vec::new();
        let mut p = Vec::new();
        let mut s = Vec::new();
        for (g, c) in [(Group::A, a), (Group::B, b)] {
            for (n, t, q) in [(c.tp, 1, 1), (c.fp, -1, 1), (c.tn, -1, -1), (c.fn_, 1, -1)] {
                for _ in 0..n {
                    y.push(t);
                    p.push(q);
                    s.push(g);
                }
            }
        }
        let rows = vec![vec![0.0]; y.len()];
        (p, GroupedDataset::from_rows(&rows, y, s).unwrap())
    }

    #[test]
    fn fpr_gap_from_counts() {
        let a = Confusion { fp: 10, tn: 90, ..Default::default() };
        let b = Confusion { fp: 30, tn: 70, ..Default::default() };
        let (p, d) = cells(a, b);
        let r = evaluate(&p, &d).unwrap();
        assert_eq!(r.fpr_a, Some(0.1));
        assert_eq!(r.fpr_b, Some(0.3));
        assert!((r.dfpr.unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(r.tpr_a, None);
        assert_eq!(r.deo, None);
        assert_eq!(r.precision, Some(0.0));
    }

    #[test]
    fn identical_rates_have_no_gap() {
        let c = Confusion { tp: 3, fp: 1, tn: 5, fn_: 2 };
        let (p, d) = cells(c, c);
        let r = evaluate(&p, &d).unwrap();
        assert_eq!((r.dfpr, r.deo), (Some(0.0), Some(0.0)));
    }

    #[test]
    fn perfect_classifier() {
        let (p, d) = cells(Confusion { tp: 4, tn: 3, ..Default::default() }, Confusion { tp: 2, tn: 6, ..Default::default() });
        let r = evaluate(&p, &d).unwrap();
        assert_eq!((r.dfpr, r.deo, r.precision, r.accuracy), (Some(0.0), Some(0.0), Some(1.0), Some(1.0)));
    }

    #[test]
    fn group_swap_keeps_gaps() {
        let (p, d) = cells(Confusion { tp: 4, fp: 2, tn: 3, fn_: 1 }, Confusion { tp: 2, fp: 5, tn: 6, fn_: 3 });
        let r = evaluate(&p, &d).unwrap();
        let s = evaluate(&p, &d.swap_groups()).unwrap();
        assert_eq!((r.dfpr, r.deo), (s.dfpr, s.deo));
        assert_eq!(r.fpr_a, s.fpr_b);
    }

    #[test]
    fn length_mismatch() {
        let (_, d) = cells(Confusion { tp: 1, ..Default::default() }, Confusion::default());
        assert!(matches!(evaluate(&[1, 1], &d), Err(Error::Input(_))));
    }

    #[test]
    fn record_fields() {
        let (p, d) = cells(Confusion { fp: 1, tn: 3, ..Default::default() }, Confusion { tp: 1, fp: 1, ..Default::default() });
        let r = evaluate(&p, &d).unwrap();
        let row = r.csv_row();
        assert_eq!(row.split(',').count(), EvalReport::CSV_FIELDS.len());
        assert!(row.contains("undefined"));
        let j = r.to_json();
        assert_eq!(j["n"], 6);
        assert_eq!(j["fp_b"], 1);
        assert!(j["tpr_a"].is_null());
        assert_eq!(j["fpr_a"], 0.25);
    }

    fn report(tpr_a: f64, tpr_b: f64) -> EvalReport {
        let mut r = EvalReport::from_confusion(GroupConfusion::default());
        r.tpr_a = Some(tpr_a);
        r.tpr_b = Some(tpr_b);
        r
    }

    #[test]
    fn probe_flags_trade_off() {
        let d = disparate_mistreatment_probe(&[report(0.9, 0.6), report(0.9, 0.6)]);
        assert!(!d.any_flagged());
        let d = disparate_mistreatment_probe(&[report(0.9, 0.6), report(0.8, 0.7)]);
        assert!(d.steps[0].flagged);
        let d = disparate_mistreatment_probe(&[report(0.9, 0.6), report(0.8, 0.595)]);
        assert!(!d.any_flagged());
        assert!(disparate_mistreatment_probe(&[report(0.5, 0.5)]).steps.is_empty());
    }

    #[test]
    fn bound_values() {
        for n in [1, 7, 1000] {
            assert_eq!(uniform_bound(1.0, 1.0, n).unwrap(), 0.0);
        }
        let e = std::f64::consts::E;
        assert!((uniform_bound(e, 1.0 / e, 1).unwrap() - 1.0).abs() < 1e-15);
        let a = uniform_bound(50.0, 0.05, 300).unwrap();
        let b = uniform_bound(50.0, 0.05, 600).unwrap();
        assert!((a / b - 2f64.sqrt()).abs() < 1e-12);
        assert!(uniform_bound(50.0, 0.05, 1_000_000).unwrap() < uniform_bound(50.0, 0.05, 100).unwrap());
        assert!(uniform_bound(1.0, 0.0, 10).is_err());
        assert!(uniform_bound(1.0, 1.5, 10).is_err());
        assert!(uniform_bound(0.5, 0.5, 10).is_err());
        assert!(uniform_bound(2.0, 0.5, 0).is_err());
    }
}
