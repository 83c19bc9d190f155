//! Soft-margin kernel SVM trainers with fairness constraints.
//!
//! Four classifiers share one dual solver:
//!
//! * vanilla soft-margin SVM,
//! * equal opportunity: `|<w, v_a - v_b>| <= eps` on positive-label barycenters,
//! * minimum separation: `<w, u_a - u_b> >= rho` on negative-label barycenters,
//!   solved in either orientation,
//! * both constraints together.
//!
//! Decision values are `f(x) = sum_i c_i k(x_i, x) + b`.

mod barycenter;
mod dual;
mod model_io;
mod train;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Features, Fingerprint, GroupedDataset};
use crate::error::{Error, Result};
use crate::kernels::{self, KernelSpec};
use crate::qpsolve::SolverTolerances;

pub use barycenter::{barycenter_direction, BarycenterDirection};
pub use train::{
    max_attainable_separation, train, train_combined, train_eo, train_min_sep, train_vanilla,
    train_with_gram,
};

/// Which fairness constraints are active.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FairnessSpec {
    pub min_sep_rho: Option<f64>,
    /// `f64::INFINITY` disables the constraint.
    pub eo_epsilon: Option<f64>,
}

impl FairnessSpec {
    pub fn none() -> Self {
        FairnessSpec::default()
    }

    pub fn min_sep(rho: f64) -> Self {
        FairnessSpec {
            min_sep_rho: Some(rho),
            eo_epsilon: None,
        }
    }

    pub fn eo(epsilon: f64) -> Self {
        FairnessSpec {
            min_sep_rho: None,
            eo_epsilon: Some(epsilon),
        }
    }

    pub fn combined(rho: f64, epsilon: f64) -> Self {
        FairnessSpec {
            min_sep_rho: Some(rho),
            eo_epsilon: Some(epsilon),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(rho) = self.min_sep_rho {
            if !(rho > 0.0 && rho <= 1.0) {
                return Err(Error::input(format!("rho must lie in (0, 1], got {rho}")));
            }
        }
        if let Some(eps) = self.eo_epsilon {
            if !(eps >= 0.0) {
                return Err(Error::input(format!("epsilon must be nonnegative, got {eps}")));
            }
        }
        Ok(())
    }

    /// Finite EO band, if one is active.
    pub(crate) fn eo_band(&self) -> Option<f64> {
        self.eo_epsilon.filter(|e| e.is_finite())
    }
}

/// Sign of the barycenter difference used by the minimum-separation constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Solve both signs and keep the feasible solution with lower objective.
    #[default]
    Auto,
    AMinusB,
    BMinusA,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::BMinusA => -1.0,
            _ => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::Auto => "auto",
            Orientation::AMinusB => "a_minus_b",
            Orientation::BMinusA => "b_minus_a",
        }
    }
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Orientation::Auto),
            "a_minus_b" => Ok(Orientation::AMinusB),
            "b_minus_a" => Ok(Orientation::BMinusA),
            other => Err(Error::input(format!("unknown orientation {other:?}"))),
        }
    }
}

/// Dual solver used by the trainers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverBackend {
    /// Pairwise decomposition on the dual; scales to thousands of samples.
    #[default]
    Decomposition,
    /// Dense interior-point solve of the same dual.
    Dense,
}

/// Labels whose barycenters define the two constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintTargets {
    pub min_sep_label: i8,
    pub eo_label: i8,
}

impl Default for ConstraintTargets {
    fn default() -> Self {
        ConstraintTargets {
            min_sep_label: -1,
            eo_label: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Penalty on the sum of slacks.
    pub c: f64,
    pub kernel: KernelSpec,
    pub tolerances: SolverTolerances,
    pub orientation: Orientation,
    pub backend: SolverBackend,
    pub targets: ConstraintTargets,
}

impl TrainConfig {
    pub fn new(c: f64, kernel: KernelSpec) -> Self {
        TrainConfig {
            c,
            kernel,
            tolerances: SolverTolerances::default(),
            orientation: Orientation::Auto,
            backend: SolverBackend::Decomposition,
            targets: ConstraintTargets::default(),
        }
    }

    pub fn with_tolerances(mut self, tol: SolverTolerances) -> Self {
        self.tolerances = tol;
        self
    }

    pub fn with_orientation(mut self, o: Orientation) -> Self {
        self.orientation = o;
        self
    }

    pub fn with_backend(mut self, b: SolverBackend) -> Self {
        self.backend = b;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::input(format!("C must be positive, got {}", self.c)));
        }
        self.kernel.validate()
    }
}

/// A trained kernel expansion plus the metadata needed to audit it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    /// One weight per training sample.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    /// Multiplier of the minimum-separation constraint (0 when inactive).
    pub mu: f64,
    /// Net multiplier of the two-sided EO constraint.
    pub eo_multiplier: f64,
    pub support_indices: Vec<usize>,
    /// Training rows at `support_indices`.
    pub support_vectors: Features,
    pub kernel: KernelSpec,
    pub c: f64,
    pub training_ref: Fingerprint,
    pub fairness: FairnessSpec,
    /// Orientation under which `constraint_value` is reported.
    pub orientation: Orientation,
    /// `<w, u_a - u_b>` times the orientation sign; `None` when a group has no negatives.
    pub constraint_value: Option<f64>,
    /// `<w, v_a - v_b>` on positive-label barycenters.
    pub eo_value: Option<f64>,
    /// `||w||^2 + C * sum of hinge losses`.
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Wall time spent inside dual solves.
    pub solve_seconds: f64,
}

/// Threshold below which a coefficient is not kept as a support vector.
pub const SUPPORT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub labels: Vec<i8>,
    pub decision: Vec<f64>,
}

impl TrainedModel {
    pub fn decision_function(&self, x: &Features) -> Result<Vec<f64>> {
        if x.dim() != self.support_vectors.dim() {
            return Err(Error::input(format!(
                "model expects {} features, got {}",
                self.support_vectors.dim(),
                x.dim()
            )));
        }
        let gram = kernels::gram_features(&self.kernel, &self.support_vectors, x)?;
        let mut out = vec![self.bias; x.n_rows()];
        for (k, &i) in self.support_indices.iter().enumerate() {
            let c = self.coefficients[i];
            for (o, kv) in out.iter_mut().zip(gram.row(k)) {
                *o += c * kv;
            }
        }
        Ok(out)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_kv_string())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &std::path::Path) -> Result<TrainedModel> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        TrainedModel::from_kv_str(&s)
    }
}

/// `sign(f(x))` with `sign(0) = +1`.
pub fn predict(m: &TrainedModel, d: &GroupedDataset) -> Result<Prediction> {
    let decision = m.decision_function(d.features())?;
    let labels = decision.iter().map(|&f| if f >= 0.0 { 1 } else { -1 }).collect();
    Ok(Prediction { labels, decision })
}
