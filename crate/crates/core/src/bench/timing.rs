//! Optimization timing and fairness-strength sweeps.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::report::Stat;
use super::ModelKind;
use crate::dataset::GroupedDataset;
use crate::error::{Error, Result};
use crate::fairsvm::{predict, train_with_gram, FairnessSpec, TrainConfig};
use crate::kernels;
use crate::metrics::{disparate_mistreatment_probe, evaluate, EvalReport, MistreatmentDiagnostic};

#[derive(Debug, Clone, PartialEq)]
pub struct TimingConfig {
    pub train: TrainConfig,
    pub models: Vec<ModelKind>,
    pub rho: f64,
    pub epsilon: f64,
    pub repeats: usize,
}

/// Wall times for one model. Solver time excludes Gram construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub model: ModelKind,
    pub n: usize,
    pub repeats: usize,
    pub gram_seconds: Stat,
    pub solve_seconds: Stat,
    /// "ok" or the training error.
    pub status: String,
}

/// Trains each model `repeats` times on `d`, timing the Gram build and the
/// dual solve separately.
pub fn timing_benchmark(d: &GroupedDataset, cfg: &TimingConfig) -> Result<Vec<TimingRow>> {
    if cfg.repeats == 0 {
        return Err(Error::input("timing needs at least one repeat"));
    }
    cfg.train.validate()?;
    let mut rows = Vec::new();
    for &model in &cfg.models {
        let spec = model.fairness(Some(cfg.rho), cfg.epsilon);
        let mut gram = Vec::new();
        let mut solve = Vec::new();
        let mut status = "ok".to_string();
        for _ in 0..cfg.repeats {
            let started = Instant::now();
            let k = kernels::self_gram(&cfg.train.kernel, d)?;
            gram.push(Some(started.elapsed().as_secs_f64()));
            match train_with_gram(d, &k, &cfg.train, &spec) {
                Ok(m) => solve.push(Some(m.solve_seconds)),
                Err(e) => {
                    status = e.to_string();
                    break;
                }
            }
        }
        log::info!("timing {model}: {} solves, status {status}", solve.len());
        rows.push(TimingRow {
            model,
            n: d.len(),
            repeats: solve.len(),
            gram_seconds: Stat::from_values(gram),
            solve_seconds: Stat::from_values(solve),
            status,
        });
    }
    Ok(rows)
}

pub fn timing_csv(rows: &[TimingRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "model", "n", "repeats", "gram_seconds_mean", "gram_seconds_std", "solve_seconds_mean",
        "solve_seconds_std", "status",
    ])?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
    for r in rows {
        w.write_record([
            r.model.as_str().to_string(),
            r.n.to_string(),
            r.repeats.to_string(),
            opt(r.gram_seconds.mean),
            opt(r.gram_seconds.std),
            opt(r.solve_seconds.mean),
            opt(r.solve_seconds.std),
            r.status.clone(),
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io("writing csv", e.into_error()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// One model of an equal-opportunity sweep; `epsilon` is `None` for the
/// unconstrained model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub epsilon: Option<f64>,
    pub report: EvalReport,
}

/// Trains the unconstrained model and then equal-opportunity models with
/// `epsilons` in decreasing order (increasing strength), evaluates each on
/// `test` and runs the mistreatment probe over the sequence.
pub fn mistreatment_sweep(
    train: &GroupedDataset,
    test: &GroupedDataset,
    cfg: &TrainConfig,
    epsilons: &[f64],
) -> Result<(Vec<SweepPoint>, MistreatmentDiagnostic)> {
    if epsilons.is_empty() {
        return Err(Error::input("sweep needs at least one epsilon"));
    }
    let k = kernels::self_gram(&cfg.kernel, train)?;
    let mut eps = epsilons.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    let mut points = Vec::with_capacity(eps.len() + 1);
    for e in std::iter::once(None).chain(eps.into_iter().map(Some)) {
        let spec = match e {
            Some(e) => FairnessSpec::eo(e),
            None => FairnessSpec::none(),
        };
        let m = train_with_gram(train, &k, cfg, &spec)?;
        let report = evaluate(&predict(&m, test)?.labels, test)?;
        points.push(SweepPoint { epsilon: e, report });
    }
    let reports: Vec<EvalReport> = points.iter().map(|p| p.report).collect();
    let diag = disparate_mistreatment_probe(&reports);
    Ok((points, diag))
}
