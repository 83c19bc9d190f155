//! Flat `key=value` model files.
//!
//! One entry per line; floats are written in shortest round-trip form so a
//! reloaded model reproduces decision values bit for bit. Vectors are
//! comma separated and each support vector is stored on its own `sv.<k>` line.
//!
//! ```text
//! format=fairsep-model
//! version=1
//! kernel.family=rbf
//! kernel.gamma=0.5
//! ...
//! coefficients=0.25,-0.25,0.0
//! support_indices=0,1
//! support_dim=2
//! sv.0=1.0,2.0
//! sv.1=-1.0,0.5
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use super::{FairnessSpec, Orientation, TrainedModel};
use crate::dataset::{Features, Fingerprint};
use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};

const FORMAT: &str = "fairsep-model";
const VERSION: u32 = 1;

fn join<T: std::fmt::Debug>(xs: &[T]) -> String {
    let mut s = String::new();
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{x:?}");
    }
    s
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_string(), |v| format!("{v:?}"))
}

impl TrainedModel {
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("format", FORMAT.into());
        kv("version", VERSION.to_string());
        kv("kernel.family", self.kernel.family.as_str().into());
        kv("kernel.gamma", format!("{:?}", self.kernel.gamma));
        kv("kernel.degree", self.kernel.degree.to_string());
        kv("kernel.coef0", format!("{:?}", self.kernel.coef0));
        kv("c", format!("{:?}", self.c));
        kv("bias", format!("{:?}", self.bias));
        kv("mu", format!("{:?}", self.mu));
        kv("eo_multiplier", format!("{:?}", self.eo_multiplier));
        kv("fairness.rho", opt(self.fairness.min_sep_rho));
        kv("fairness.epsilon", opt(self.fairness.eo_epsilon));
        kv("orientation", self.orientation.as_str().into());
        kv("constraint_value", opt(self.constraint_value));
        kv("eo_value", opt(self.eo_value));
        kv("objective", format!("{:?}", self.objective));
        kv("kkt_residual", format!("{:?}", self.kkt_residual));
        kv("iterations", self.iterations.to_string());
        kv("converged", self.converged.to_string());
        kv("solve_seconds", format!("{:?}", self.solve_seconds));
        kv("training_ref", self.training_ref.0.clone());
        kv("coefficients", join(&self.coefficients));
        kv("support_indices", join(&self.support_indices));
        kv("support_dim", self.support_vectors.dim().to_string());
        for k in 0..self.support_vectors.n_rows() {
            kv(&format!("sv.{k}"), join(self.support_vectors.row(k)));
        }
        s
    }

    pub fn from_kv_str(text: &str) -> Result<TrainedModel> {
        let mut map = BTreeMap::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::input(format!("model line {} has no '='", ln + 1)))?;
            if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::input(format!("duplicate model key {k:?}")));
            }
        }
        let get = |k: &str| -> Result<&str> {
            map.get(k)
                .map(String::as_str)
                .ok_or_else(|| Error::input(format!("model file lacks {k:?}")))
        };
        fn num<T: FromStr>(k: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::input(format!("model key {k:?}: cannot parse {v:?}")))
        }
        let f = |k: &str| -> Result<f64> { num(k, get(k)?) };
        let of = |k: &str| -> Result<Option<f64>> {
            match get(k)? {
                "none" => Ok(None),
                v => num(k, v).map(Some),
            }
        };
        fn list<T: FromStr>(k: &str, v: &str) -> Result<Vec<T>> {
            if v.is_empty() {
                return Ok(Vec::new());
            }
            v.split(',').map(|x| num(k, x.trim())).collect()
        }

        if get("format")? != FORMAT {
            return Err(Error::input("not a fairsep model file"));
        }
        let version: u32 = num("version", get("version")?)?;
        if version != VERSION {
            return Err(Error::input(format!("unsupported model version {version}")));
        }
        let kernel = KernelSpec {
            family: KernelFamily::parse(get("kernel.family")?)?,
            gamma: f("kernel.gamma")?,
            degree: num("kernel.degree", get("kernel.degree")?)?,
            coef0: f("kernel.coef0")?,
        };
        kernel.validate()?;
        let coefficients: Vec<f64> = list("coefficients", get("coefficients")?)?;
        let support_indices: Vec<usize> = list("support_indices", get("support_indices")?)?;
        let dim: usize = num("support_dim", get("support_dim")?)?;
        let mut sv = Vec::with_capacity(support_indices.len() * dim);
        for (k, &i) in support_indices.iter().enumerate() {
            if i >= coefficients.len() {
                return Err(Error::input(format!("support index {i} out of range")));
            }
            let key = format!("sv.{k}");
            let row: Vec<f64> = list(&key, get(&key)?)?;
            if row.len() != dim {
                return Err(Error::input(format!("{key} has {} values, expected {dim}", row.len())));
            }
            sv.extend(row);
        }
        let converged = match get("converged")? {
            "true" => true,
            "false" => false,
            v => return Err(Error::input(format!("model key \"converged\": {v:?}"))),
        };
        Ok(TrainedModel {
            coefficients,
            bias: f("bias")?,
            mu: f("mu")?,
            eo_multiplier: f("eo_multiplier")?,
            support_vectors: Features::new(sv, support_indices.len(), dim)?,
            support_indices,
            kernel,
            c: f("c")?,
            training_ref: Fingerprint(get("training_ref")?.to_string()),
            fairness: FairnessSpec {
                min_sep_rho: of("fairness.rho")?,
                eo_epsilon: of("fairness.epsilon")?,
            },
            orientation: Orientation::from_str(get("orientation")?)?,
            constraint_value: of("constraint_value")?,
            eo_value: of("eo_value")?,
            objective: f("objective")?,
            kkt_residual: f("kkt_residual")?,
            iterations: num("iterations", get("iterations")?)?,
            converged,
            solve_seconds: f("solve_seconds")?,
        })
    }
}
