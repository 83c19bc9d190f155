//! Cross-validated search over (rho, orientation, C, gamma).

use std::cmp::Ordering;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HyperParams, ModelKind, SelectionRule};
use crate::data::make_folds;
use crate::dataset::GroupedDataset;
use crate::error::{Error, Result};
use crate::fairsvm::{train_with_gram, Orientation, TrainConfig, TrainedModel};
use crate::kernels::{self, GramMatrix, KernelFamily, KernelSpec};
use crate::metrics::evaluate;
use crate::qpsolve::SolverTolerances;

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub model: ModelKind,
    pub kernel: KernelFamily,
    pub degree: u32,
    pub coef0: f64,
    pub c_grid: Vec<f64>,
    /// Ignored unless the kernel is RBF.
    pub gamma_grid: Vec<f64>,
    /// Ignored unless the model has a minimum-separation constraint.
    pub rho_sweep: Vec<f64>,
    /// EO band for models with an EO constraint.
    pub eo_epsilon: f64,
    pub folds: usize,
    pub seed: u64,
    pub selection: SelectionRule,
    pub tolerances: SolverTolerances,
    /// Constraint signs tried as a grid dimension; ignored without a
    /// minimum-separation constraint.
    pub orientations: Vec<Orientation>,
}

impl GridConfig {
    /// Default grids: C in {0.01, ..., 1000}, gamma in {0.001, ..., 10}, rho in {0.1, ..., 0.5}.
    pub fn new(model: ModelKind, seed: u64) -> GridConfig {
        GridConfig {
            model,
            kernel: KernelFamily::Rbf,
            degree: 2,
            coef0: 1.0,
            c_grid: vec![0.01, 0.1, 1.0, 10.0, 100.0, 1000.0],
            gamma_grid: vec![0.001, 0.01, 0.1, 1.0, 10.0],
            rho_sweep: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            eo_epsilon: 0.0,
            folds: 5,
            seed,
            selection: SelectionRule::default(),
            tolerances: SolverTolerances::default(),
            orientations: vec![Orientation::Auto],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c_grid.is_empty() {
            return Err(Error::input("C grid is empty"));
        }
        if self.kernel == KernelFamily::Rbf && self.gamma_grid.is_empty() {
            return Err(Error::input("gamma grid is empty"));
        }
        if self.model.uses_rho() && self.rho_sweep.is_empty() {
            return Err(Error::input("rho sweep is empty"));
        }
        if self.model.uses_rho() && self.orientations.is_empty() {
            return Err(Error::input("no constraint orientation given"));
        }
        if self.folds < 2 {
            return Err(Error::input("grid search needs at least 2 folds"));
        }
        Ok(())
    }

    pub fn gamma_values(&self) -> Vec<Option<f64>> {
        match self.kernel {
            KernelFamily::Rbf => self.gamma_grid.iter().map(|&g| Some(g)).collect(),
            _ => vec![None],
        }
    }

    pub fn rho_values(&self) -> Vec<Option<f64>> {
        if self.model.uses_rho() {
            self.rho_sweep.iter().map(|&r| Some(r)).collect()
        } else {
            vec![None]
        }
    }

    pub fn orientation_values(&self) -> Vec<Option<Orientation>> {
        if self.model.uses_rho() {
            let mut o = self.orientations.clone();
            o.sort();
            o.dedup();
            o.into_iter().map(Some).collect()
        } else {
            vec![None]
        }
    }

    pub fn kernel_spec(&self, gamma: Option<f64>) -> Result<KernelSpec> {
        match self.kernel {
            KernelFamily::Linear => Ok(KernelSpec::linear()),
            KernelFamily::Rbf => KernelSpec::rbf(gamma.ok_or_else(|| Error::input("RBF kernel needs gamma"))?),
            KernelFamily::Polynomial => KernelSpec::polynomial(self.degree, self.coef0),
        }
    }

    pub fn train_config(&self, params: &HyperParams) -> Result<TrainConfig> {
        Ok(TrainConfig::new(params.c, self.kernel_spec(params.gamma)?)
            .with_tolerances(self.tolerances)
            .with_orientation(params.orientation.unwrap_or_default()))
    }

    fn epsilon(&self) -> Option<f64> {
        self.model.uses_epsilon().then_some(self.eo_epsilon)
    }
}

/// Outcome of one (cell, fold) fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub model: ModelKind,
    pub params: HyperParams,
    pub fold: usize,
    /// `"ok"` or the training error.
    pub status: String,
    pub dfpr: Option<f64>,
    pub deo: Option<f64>,
    pub precision: Option<f64>,
    pub accuracy: Option<f64>,
    pub solve_seconds: f64,
}

impl TraceRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Fold-averaged metrics of one grid cell; undefined fold values are skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub params: HyperParams,
    pub folds_ok: usize,
    pub failures: usize,
    pub dfpr: Option<f64>,
    pub deo: Option<f64>,
    pub precision: Option<f64>,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub model: ModelKind,
    pub best: HyperParams,
    pub cells: Vec<CellSummary>,
    pub trace: Vec<TraceRow>,
    pub gram_seconds: f64,
}

impl GridResult {
    pub fn best_cell(&self) -> &CellSummary {
        self.cells
            .iter()
            .find(|c| c.params == self.best)
            .expect("best params come from a cell")
    }
}

/// `f` on evaluation points from a block of kernel values against the training rows.
pub(crate) fn decision_from_block(m: &TrainedModel, block: &GramMatrix) -> Vec<f64> {
    (0..block.n_rows())
        .map(|i| {
            let row = block.row(i);
            m.bias
                + m.support_indices
                    .iter()
                    .map(|&k| m.coefficients[k] * row[k])
                    .sum::<f64>()
        })
        .collect()
}

pub(crate) fn labels_from_decision(f: &[f64]) -> Vec<i8> {
    f.iter().map(|&v| if v >= 0.0 { 1 } else { -1 }).collect()
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (mut sum, mut k) = (0.0, 0usize);
    for v in values.flatten() {
        sum += v;
        k += 1;
    }
    (k > 0).then(|| sum / k as f64)
}

fn cmp_opt_desc(a: Option<f64>, b: Option<f64>) -> Ordering {
    b.unwrap_or(f64::NEG_INFINITY).total_cmp(&a.unwrap_or(f64::NEG_INFINITY))
}

fn cmp_opt_asc(a: Option<f64>, b: Option<f64>) -> Ordering {
    a.unwrap_or(f64::INFINITY).total_cmp(&b.unwrap_or(f64::INFINITY))
}

/// Canonical tie-break: smaller C, then smaller gamma, then smaller rho,
/// then orientation in declaration order.
fn cmp_params(a: &HyperParams, b: &HyperParams) -> Ordering {
    a.c.total_cmp(&b.c)
        .then(cmp_opt_asc(a.gamma, b.gamma))
        .then(cmp_opt_asc(a.rho, b.rho))
        .then(a.orientation.cmp(&b.orientation))
}

fn select(cells: &[CellSummary], rule: SelectionRule) -> Option<HyperParams> {
    let eligible: Vec<&CellSummary> = cells
        .iter()
        .filter(|c| {
            let ok = c.failures == 0 && c.dfpr.is_some() && c.precision.is_some();
            if !ok {
                log::warn!(
                    "grid cell C={} gamma={:?} rho={:?} excluded: {} failed folds, dfpr {:?}, precision {:?}",
                    c.params.c, c.params.gamma, c.params.rho, c.failures, c.dfpr, c.precision
                );
            }
            ok
        })
        .collect();
    let by_dfpr = |a: &&CellSummary, b: &&CellSummary| {
        cmp_opt_asc(a.dfpr, b.dfpr)
            .then(cmp_opt_desc(a.precision, b.precision))
            .then(cmp_params(&a.params, &b.params))
    };
    match rule {
        SelectionRule::MinDfpr { precision_slack, accuracy_slack } => {
            // Accuracy first, so a trivial classifier cannot set the precision bar.
            let best_acc = eligible.iter().filter_map(|c| c.accuracy).fold(f64::NEG_INFINITY, f64::max);
            let sane: Vec<&CellSummary> = eligible
                .into_iter()
                .filter(|c| {
                    accuracy_slack.is_none_or(|s| c.accuracy.is_some_and(|a| a >= best_acc - s))
                })
                .collect();
            let best_prec = sane.iter().filter_map(|c| c.precision).fold(f64::NEG_INFINITY, f64::max);
            sane.into_iter()
                .filter(|c| precision_slack.is_none_or(|s| c.precision.unwrap() >= best_prec - s))
                .min_by(by_dfpr)
                .map(|c| c.params)
        }
        SelectionRule::AccuracyThenDfpr => {
            let mut rhos: Vec<Option<f64>> = eligible.iter().map(|c| c.params.rho).collect();
            rhos.sort_by(|a, b| cmp_opt_asc(*a, *b));
            rhos.dedup();
            rhos.into_iter()
                .filter_map(|rho| {
                    eligible
                        .iter()
                        .filter(|c| c.params.rho == rho)
                        .min_by(|a, b| {
                            cmp_opt_desc(a.accuracy, b.accuracy).then(cmp_params(&a.params, &b.params))
                        })
                        .copied()
                })
                .collect::<Vec<_>>()
                .into_iter()
                .min_by(by_dfpr)
                .map(|c| c.params)
        }
    }
}

/// Cross-validates every (rho, C, gamma) cell on `d` and selects one.
///
/// Cells run in parallel; the trace is ordered by gamma, rho, orientation, C and fold
/// regardless of scheduling.
pub fn grid_search(d: &GroupedDataset, cfg: &GridConfig) -> Result<GridResult> {
    cfg.validate()?;
    let folds = make_folds(d, cfg.folds, cfg.seed)?;
    let subsets: Vec<(GroupedDataset, GroupedDataset)> = folds
        .iter()
        .map(|f| (d.subset(&f.train), d.subset(&f.validation)))
        .collect();
    let epsilon = cfg.epsilon();
    let mut trace = Vec::new();
    let mut gram_seconds = 0.0;
    for gamma in cfg.gamma_values() {
        let kernel = cfg.kernel_spec(gamma)?;
        let started = Instant::now();
        let k = kernels::self_gram(&kernel, d)?;
        let blocks: Vec<(GramMatrix, GramMatrix)> = folds
            .par_iter()
            .map(|f| (k.select(&f.train, &f.train), k.select(&f.validation, &f.train)))
            .collect();
        drop(k);
        gram_seconds += started.elapsed().as_secs_f64();

        let mut jobs = Vec::new();
        for rho in cfg.rho_values() {
            for orientation in cfg.orientation_values() {
                for &c in &cfg.c_grid {
                    for fold in 0..folds.len() {
                        jobs.push((HyperParams { c, gamma, rho, orientation, epsilon }, fold));
                    }
                }
            }
        }
        let rows: Vec<TraceRow> = jobs
            .par_iter()
            .map(|&(params, fold)| {
                let (train, val) = &subsets[fold];
                let (tt, vt) = &blocks[fold];
                let spec = cfg.model.fairness(params.rho, cfg.eo_epsilon);
                let fitted = cfg
                    .train_config(&params)
                    .and_then(|tc| train_with_gram(train, tt, &tc, &spec))
                    .and_then(|m| {
                        let preds = labels_from_decision(&decision_from_block(&m, vt));
                        Ok((evaluate(&preds, val)?, m.solve_seconds))
                    });
                match fitted {
                    Ok((r, secs)) => TraceRow {
                        model: cfg.model,
                        params,
                        fold,
                        status: "ok".into(),
                        dfpr: r.dfpr,
                        deo: r.deo,
                        precision: r.precision,
                        accuracy: r.accuracy,
                        solve_seconds: secs,
                    },
                    Err(e) => TraceRow {
                        model: cfg.model,
                        params,
                        fold,
                        status: e.to_string(),
                        dfpr: None,
                        deo: None,
                        precision: None,
                        accuracy: None,
                        solve_seconds: 0.0,
                    },
                }
            })
            .collect();
        trace.extend(rows);
    }

    let cells: Vec<CellSummary> = trace
        .chunks(folds.len())
        .map(|rows| {
            let ok = || rows.iter().filter(|r| r.is_ok());
            CellSummary {
                params: rows[0].params,
                folds_ok: ok().count(),
                failures: rows.len() - ok().count(),
                dfpr: mean_defined(ok().map(|r| r.dfpr)),
                deo: mean_defined(ok().map(|r| r.deo)),
                precision: mean_defined(ok().map(|r| r.precision)),
                accuracy: mean_defined(ok().map(|r| r.accuracy)),
            }
        })
        .collect();
    for r in trace.iter().filter(|r| !r.is_ok()) {
        log::warn!("{} C={} gamma={:?} rho={:?} fold {}: {}", r.model, r.params.c, r.params.gamma, r.params.rho, r.fold, r.status);
    }
    let best = select(&cells, cfg.selection).ok_or_else(|| {
        Error::input(format!("no {} grid cell trained on every fold with defined metrics", cfg.model))
    })?;
    Ok(GridResult {
        model: cfg.model,
        best,
        cells,
        trace,
        gram_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(c: f64, dfpr: f64, precision: f64, accuracy: f64, rho: Option<f64>) -> CellSummary {
        CellSummary {
            params: HyperParams { c, gamma: None, rho, orientation: None, epsilon: None },
            folds_ok: 5,
            failures: 0,
            dfpr: Some(dfpr),
            deo: Some(0.0),
            precision: Some(precision),
            accuracy: Some(accuracy),
        }
    }

    #[test]
    fn single_cell_selected() {
        let cells = [cell(1.0, 0.3, 0.5, 0.5, None)];
        assert_eq!(select(&cells, SelectionRule::default()).unwrap().c, 1.0);
    }

    #[test]
    fn dominant_dfpr_wins() {
        let cells = [cell(1.0, 0.3, 0.8, 0.8, None), cell(10.0, 0.1, 0.8, 0.8, None)];
        assert_eq!(select(&cells, SelectionRule::default()).unwrap().c, 10.0);
    }

    #[test]
    fn ties_prefer_precision_then_small_c() {
        let cells = [
            cell(10.0, 0.1, 0.7, 0.8, None),
            cell(1.0, 0.1, 0.7, 0.8, None),
            cell(100.0, 0.1, 0.72, 0.8, None),
        ];
        assert_eq!(select(&cells, SelectionRule::default()).unwrap().c, 100.0);
        let cells = [cell(10.0, 0.1, 0.7, 0.8, None), cell(1.0, 0.1, 0.7, 0.8, None)];
        assert_eq!(select(&cells, SelectionRule::default()).unwrap().c, 1.0);
    }

    #[test]
    fn precision_guard_and_failures() {
        let mut failed = cell(0.1, 0.0, 0.9, 0.9, None);
        failed.failures = 1;
        let cells = [cell(1.0, 0.01, 0.4, 0.6, None), cell(10.0, 0.2, 0.8, 0.8, None), failed];
        assert_eq!(select(&cells, SelectionRule::default()).unwrap().c, 10.0);
        let pure = SelectionRule::MinDfpr { precision_slack: None, accuracy_slack: None };
        assert_eq!(select(&cells, pure).unwrap().c, 1.0);
    }

    #[test]
    fn accuracy_guard_skips_trivial_classifier() {
        let cells = [cell(0.001, 0.0, 1.0, 0.57, None), cell(1.0, 0.1, 0.88, 0.88, None)];
        assert_eq!(select(&cells, SelectionRule::default()).unwrap().c, 1.0);
    }

    #[test]
    fn accuracy_then_dfpr() {
        let cells = [
            cell(1.0, 0.05, 0.8, 0.70, Some(0.1)),
            cell(10.0, 0.20, 0.8, 0.80, Some(0.1)),
            cell(1.0, 0.10, 0.8, 0.85, Some(0.2)),
            cell(10.0, 0.01, 0.8, 0.60, Some(0.2)),
        ];
        let p = select(&cells, SelectionRule::AccuracyThenDfpr).unwrap();
        assert_eq!((p.c, p.rho), (1.0, Some(0.2)));
    }
}
