//! Hyperparameter search, experiment runs, timing and report emission.

mod experiment;
mod grid;
mod report;
mod timing;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairsvm::{FairnessSpec, Orientation};

pub use experiment::{
    load_experiment_data, run_experiment, DatasetSource, EvalMode, ExperimentConfig,
    ExperimentData, ExperimentOutput, RunRecord,
};
pub use grid::{grid_search, CellSummary, GridConfig, GridResult, TraceRow};
pub use report::{
    emit_report, parse_results_csv, results_csv, results_json, results_markdown, runs_csv,
    trace_csv, ReportFormat, ResultRow, Stat, RESULT_FIELDS, TIMING_FIELDS,
};
pub use timing::{
    mistreatment_sweep, timing_benchmark, timing_csv, SweepPoint, TimingConfig, TimingRow,
};

/// The classifiers compared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Soft-margin SVM without fairness constraints.
    Svm,
    /// Minimum-separation constraint on negative-label barycenters.
    SvmMt,
    /// Equal-opportunity constraint on positive-label barycenters.
    Ferm,
    /// Both constraints.
    Combined,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Svm, ModelKind::SvmMt, ModelKind::Ferm, ModelKind::Combined];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Svm => "svm",
            ModelKind::SvmMt => "svm_mt",
            ModelKind::Ferm => "ferm",
            ModelKind::Combined => "combined",
        }
    }

    /// Label used in human-readable tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Svm => "SVM",
            ModelKind::SvmMt => "SVM-MT",
            ModelKind::Ferm => "FERM",
            ModelKind::Combined => "SVM-MT+EO",
        }
    }

    /// Whether the model sweeps the minimum-separation parameter.
    pub fn uses_rho(self) -> bool {
        matches!(self, ModelKind::SvmMt | ModelKind::Combined)
    }

    pub fn uses_epsilon(self) -> bool {
        matches!(self, ModelKind::Ferm | ModelKind::Combined)
    }

    pub fn fairness(self, rho: Option<f64>, epsilon: f64) -> FairnessSpec {
        FairnessSpec {
            min_sep_rho: if self.uses_rho() { rho } else { None },
            eo_epsilon: if self.uses_epsilon() { Some(epsilon) } else { None },
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::input(format!("unknown model {s:?}; expected svm, svm_mt, ferm or combined")))
    }
}

/// One point of the hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub c: f64,
    /// RBF width; `None` for kernels without one.
    pub gamma: Option<f64>,
    pub rho: Option<f64>,
    /// Sign of the minimum-separation constraint; `None` without one.
    #[serde(default)]
    pub orientation: Option<Orientation>,
    pub epsilon: Option<f64>,
}

/// How the grid search picks its winner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum SelectionRule {
    /// Lowest mean DFPR, then higher precision, then smaller C, among cells
    /// whose mean precision and accuracy are within the given slack of the
    /// best over the grid. The guards keep near-constant classifiers, whose
    /// false positive rates vanish trivially, out of the running. Both
    /// default to 0.05; a slack of 1 disables its guard.
    MinDfpr {
        #[serde(default = "default_slack")]
        precision_slack: Option<f64>,
        #[serde(default = "default_slack")]
        accuracy_slack: Option<f64>,
    },
    /// Per value of rho, keep the (C, gamma) with the best mean accuracy;
    /// then pick rho by lowest mean DFPR.
    AccuracyThenDfpr,
}

fn default_slack() -> Option<f64> {
    Some(0.05)
}

impl Default for SelectionRule {
    fn default() -> Self {
        SelectionRule::MinDfpr {
            precision_slack: default_slack(),
            accuracy_slack: default_slack(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_names_round_trip() {
        for m in ModelKind::ALL {
            assert_eq!(m.as_str().parse::<ModelKind>().unwrap(), m);
        }
        assert!("svm-mt".parse::<ModelKind>().is_err());
    }

    #[test]
    fn fairness_per_model() {
        assert_eq!(ModelKind::Svm.fairness(Some(0.1), 0.0), FairnessSpec::none());
        assert_eq!(ModelKind::SvmMt.fairness(Some(0.1), 0.0), FairnessSpec::min_sep(0.1));
        assert_eq!(ModelKind::Ferm.fairness(Some(0.1), 0.0), FairnessSpec::eo(0.0));
        assert_eq!(ModelKind::Combined.fairness(Some(0.2), 0.1), FairnessSpec::combined(0.2, 0.1));
    }
}
