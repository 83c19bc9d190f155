//! Seeded experiment runs over several models and their aggregation.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::{grid_search, GridConfig, GridResult};
use super::report::{ResultRow, Stat};
use super::{HyperParams, ModelKind, SelectionRule};
use crate::data::{
    self, preprocess_split, stratified_split, synthesize, DatasetSchema, RawDataset, SynthSpec,
};
use crate::dataset::GroupedDataset;
use crate::error::{Error, Result};
use crate::fairsvm::{predict, train_with_gram, Orientation};
use crate::kernels::{self, KernelFamily};
use crate::metrics::{evaluate, EvalReport};
use crate::qpsolve::SolverTolerances;

/// Where an experiment's samples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    /// Schema shipped with the crate, raw files under `data_dir`.
    Bundled(String),
    /// Schema file, raw files under `data_dir`.
    Schema(PathBuf),
    /// Already processed CSV written by `prepare` or `synth`.
    Processed(PathBuf),
    /// Synthetic cluster spec; each run samples it with the run seed.
    Synthetic(PathBuf),
    /// The built-in four-cluster family with the given cell counts
    /// (group a positives, group b positives, group a negatives, group b negatives).
    DisparateFamily([usize; 4]),
}

impl DatasetSource {
    pub fn name(&self) -> String {
        let stem = |p: &Path| {
            p.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string())
        };
        match self {
            DatasetSource::Bundled(n) => n.clone(),
            DatasetSource::Schema(p) | DatasetSource::Processed(p) | DatasetSource::Synthetic(p) => stem(p),
            DatasetSource::DisparateFamily(_) => "disparate_family".into(),
        }
    }
}

/// How test metrics are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Provided train/test files when the schema has them, else a holdout split.
    #[default]
    Auto,
    /// Seeded stratified holdout of `test_fraction`, even when a split is provided.
    Holdout,
    /// No test set: report the cross-validation estimate of the selected cell.
    CrossValidation,
}

fn default_data_dir() -> PathBuf {
    PathBuf::from("data")
}
fn default_models() -> Vec<ModelKind> {
    vec![ModelKind::Svm, ModelKind::SvmMt, ModelKind::Ferm]
}
fn default_kernel() -> KernelFamily {
    KernelFamily::Rbf
}
fn default_degree() -> u32 {
    2
}
fn default_coef0() -> f64 {
    1.0
}
fn default_c_grid() -> Vec<f64> {
    vec![0.01, 0.1, 1.0, 10.0, 100.0, 1000.0]
}
fn default_gamma_grid() -> Vec<f64> {
    vec![0.001, 0.01, 0.1, 1.0, 10.0]
}
fn default_rho_sweep() -> Vec<f64> {
    vec![0.1, 0.2, 0.3, 0.4, 0.5]
}
fn default_folds() -> usize {
    5
}
fn default_test_fraction() -> f64 {
    0.3
}
fn default_kkt_tol() -> f64 {
    1e-6
}
fn default_orientations() -> Vec<Orientation> {
    vec![Orientation::Auto]
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default = "default_data_dir")]
    pub data_dir: PathBuf,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    #[serde(default = "default_kernel")]
    pub kernel: KernelFamily,
    #[serde(default = "default_degree")]
    pub degree: u32,
    #[serde(default = "default_coef0")]
    pub coef0: f64,
    #[serde(default = "default_c_grid")]
    pub c_grid: Vec<f64>,
    #[serde(default = "default_gamma_grid")]
    pub gamma_grid: Vec<f64>,
    #[serde(default = "default_rho_sweep")]
    pub rho_sweep: Vec<f64>,
    /// EO band for FERM and the combined model; 0 when unset.
    #[serde(default)]
    pub eo_epsilon: Option<f64>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// Must equal the number of seeds when given.
    #[serde(default)]
    pub runs: Option<usize>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub undersample: bool,
    #[serde(default)]
    pub evaluation: EvalMode,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    /// Seeded uniform subsample of the training rows.
    #[serde(default)]
    pub max_train: Option<usize>,
    /// Seeded uniform subsample of the test rows.
    #[serde(default)]
    pub max_test: Option<usize>,
    #[serde(default)]
    pub selection: SelectionRule,
    /// Minimum-separation signs searched by cross-validation.
    #[serde(default = "default_orientations")]
    pub orientations: Vec<Orientation>,
    #[serde(default = "default_kkt_tol")]
    pub kkt_tol: f64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSource, seeds: Vec<u64>) -> ExperimentConfig {
        ExperimentConfig {
            dataset,
            data_dir: default_data_dir(),
            models: default_models(),
            kernel: default_kernel(),
            degree: default_degree(),
            coef0: default_coef0(),
            c_grid: default_c_grid(),
            gamma_grid: default_gamma_grid(),
            rho_sweep: default_rho_sweep(),
            eo_epsilon: None,
            folds: default_folds(),
            runs: None,
            seeds,
            undersample: false,
            evaluation: EvalMode::Auto,
            test_fraction: default_test_fraction(),
            max_train: None,
            max_test: None,
            selection: SelectionRule::default(),
            orientations: default_orientations(),
            kkt_tol: default_kkt_tol(),
            output: default_output(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            toml::from_str(s).map_err(|e| Error::input(format!("experiment config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        ExperimentConfig::from_toml_str(&s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::input("at least one seed is required"));
        }
        if let Some(r) = self.runs {
            if r != self.seeds.len() {
                return Err(Error::input(format!(
                    "runs = {r} but {} seeds given",
                    self.seeds.len()
                )));
            }
        }
        if self.models.is_empty() {
            return Err(Error::input("no models selected"));
        }
        if !(self.kkt_tol > 0.0) {
            return Err(Error::input("kkt_tol must be positive"));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::input("test_fraction must lie in (0, 1)"));
        }
        for m in &self.models {
            self.grid_config(*m, 0).validate()?;
        }
        Ok(())
    }

    pub fn grid_config(&self, model: ModelKind, seed: u64) -> GridConfig {
        GridConfig {
            model,
            kernel: self.kernel,
            degree: self.degree,
            coef0: self.coef0,
            c_grid: self.c_grid.clone(),
            gamma_grid: self.gamma_grid.clone(),
            rho_sweep: self.rho_sweep.clone(),
            eo_epsilon: self.eo_epsilon.unwrap_or(0.0),
            folds: self.folds,
            seed,
            selection: self.selection,
            tolerances: SolverTolerances {
                kkt_tol: self.kkt_tol,
                ..SolverTolerances::default()
            },
            orientations: self.orientations.clone(),
        }
    }
}

/// Training and optional test data for one run.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub train: GroupedDataset,
    pub test: Option<GroupedDataset>,
}

fn subsample(n: usize, max: Option<usize>, rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
    let m = max.filter(|&m| m < n)?;
    let mut idx = index::sample(rng, n, m).into_vec();
    idx.sort_unstable();
    Some(idx)
}

fn raw_undersample(raw: &RawDataset, seed: u64) -> Result<RawDataset> {
    Ok(raw.subset(&data::balance_labels(&raw.labels, seed)?))
}

fn split_processed(d: GroupedDataset, cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentData> {
    let d = if cfg.undersample {
        data::undersample_majority_label(&d, seed)?
    } else {
        d
    };
    if cfg.evaluation == EvalMode::CrossValidation {
        return Ok(ExperimentData { train: d, test: None });
    }
    let (tr, te) = stratified_split(d.labels(), d.groups(), cfg.test_fraction, seed)?;
    Ok(ExperimentData {
        train: d.subset(&tr),
        test: Some(d.subset(&te)),
    })
}

/// Builds the data for one seeded run.
///
/// Raw datasets are preprocessed with statistics from the training rows only.
pub fn load_experiment_data(cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5a3b_1e00_0000);
    let mut out = match &cfg.dataset {
        DatasetSource::Bundled(_) | DatasetSource::Schema(_) => {
            let schema = match &cfg.dataset {
                DatasetSource::Bundled(n) => DatasetSchema::bundled(n)?,
                DatasetSource::Schema(p) => DatasetSchema::load(p)?,
                _ => unreachable!(),
            };
            data::verify_sources(&cfg.data_dir, &schema)?;
            let provided = schema.train_test.clone().filter(|_| cfg.evaluation == EvalMode::Auto);
            let (mut train, test) = match (&schema.file, &schema.train_test, provided) {
                (_, _, Some(tt)) => {
                    let train = data::read_raw_file(&cfg.data_dir.join(&tt.train), &schema, 0)?;
                    let test = data::read_raw_file(&cfg.data_dir.join(&tt.test), &schema, tt.test_skip_lines)?;
                    (train, Some(test))
                }
                (Some(f), _, None) => (data::read_raw_file(&cfg.data_dir.join(f), &schema, 0)?, None),
                (None, Some(tt), None) => {
                    let mut all = data::read_raw_file(&cfg.data_dir.join(&tt.train), &schema, 0)?;
                    let test = data::read_raw_file(&cfg.data_dir.join(&tt.test), &schema, tt.test_skip_lines)?;
                    all.rows.extend(test.rows);
                    all.labels.extend(test.labels);
                    all.groups.extend(test.groups);
                    (all, None)
                }
                (None, None, None) => return Err(Error::input("schema names no data file")),
            };
            if cfg.undersample {
                train = raw_undersample(&train, seed)?;
            }
            let (train, test) = match (test, cfg.evaluation) {
                (Some(t), _) => (train, Some(t)),
                (None, EvalMode::CrossValidation) => (train, None),
                (None, _) => {
                    let (tr, te) = stratified_split(&train.labels, &train.groups, cfg.test_fraction, seed)?;
                    (train.subset(&tr), Some(train.subset(&te)))
                }
            };
            let train = match subsample(train.len(), cfg.max_train, &mut rng) {
                Some(idx) => train.subset(&idx),
                None => train,
            };
            match test {
                Some(test) => {
                    let test = match subsample(test.len(), cfg.max_test, &mut rng) {
                        Some(idx) => test.subset(&idx),
                        None => test,
                    };
                    let loaded = preprocess_split(&train, &test, &schema)?;
                    ExperimentData {
                        train: loaded.train,
                        test: loaded.test,
                    }
                }
                None => {
                    let (pre, _) = data::Preprocessor::fit(&train, &schema)?;
                    ExperimentData {
                        train: pre.transform(&train)?.0,
                        test: None,
                    }
                }
            }
        }
        DatasetSource::Processed(p) => split_processed(GroupedDataset::load(p)?, cfg, seed)?,
        DatasetSource::Synthetic(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::io(format!("reading {}", p.display()), e))?;
            split_processed(synthesize(&SynthSpec::from_toml_str(&text)?, seed)?, cfg, seed)?
        }
        DatasetSource::DisparateFamily(counts) => {
            split_processed(synthesize(&SynthSpec::disparate_family(*counts), seed)?, cfg, seed)?
        }
    };
    if matches!(cfg.dataset, DatasetSource::Processed(_) | DatasetSource::Synthetic(_) | DatasetSource::DisparateFamily(_)) {
        if let Some(idx) = subsample(out.train.len(), cfg.max_train, &mut rng) {
            out.train = out.train.subset(&idx);
        }
        if let Some(t) = &out.test {
            if let Some(idx) = subsample(t.len(), cfg.max_test, &mut rng) {
                out.test = Some(t.subset(&idx));
            }
        }
    }
    Ok(out)
}

/// One model fitted and evaluated under one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub model: ModelKind,
    pub seed: u64,
    pub params: HyperParams,
    pub n_train: usize,
    pub n_test: usize,
    pub report: EvalReport,
    /// Wall time of the final dual solve.
    pub solve_seconds: f64,
    /// Wall time of the final Gram construction.
    pub gram_seconds: f64,
    /// Wall time of the whole grid search.
    pub search_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub runs: Vec<RunRecord>,
    pub grids: Vec<GridResult>,
}

/// Fits the selected cell on all of `train` and evaluates it.
fn final_fit(
    train: &GroupedDataset,
    test: Option<&GroupedDataset>,
    grid_cfg: &GridConfig,
    grid: &GridResult,
) -> Result<(EvalReport, f64, f64)> {
    let params = grid.best;
    let tc = grid_cfg.train_config(&params)?;
    let started = Instant::now();
    let k = kernels::self_gram(&tc.kernel, train)?;
    let gram_seconds = started.elapsed().as_secs_f64();
    let spec = grid_cfg.model.fairness(params.rho, grid_cfg.eo_epsilon);
    let m = train_with_gram(train, &k, &tc, &spec)?;
    let report = match test {
        Some(t) => evaluate(&predict(&m, t)?.labels, t)?,
        None => {
            // Cross-validation estimate of the chosen cell, pooled over folds.
            let cell = grid.best_cell();
            let mut r = EvalReport::from_confusion(Default::default());
            r.dfpr = cell.dfpr;
            r.deo = cell.deo;
            r.precision = cell.precision;
            r.accuracy = cell.accuracy;
            r
        }
    };
    Ok((report, m.solve_seconds, gram_seconds))
}

/// Runs every model under every seed and aggregates mean and sample standard deviation.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let dataset = cfg.dataset.name();
    let mut runs = Vec::new();
    let mut grids = Vec::new();
    for &seed in &cfg.seeds {
        let data = load_experiment_data(cfg, seed)?;
        log::info!(
            "{dataset} seed {seed}: {} training rows, {} test rows, {} features",
            data.train.len(),
            data.test.as_ref().map_or(0, |t| t.len()),
            data.train.dim()
        );
        for &model in &cfg.models {
            let grid_cfg = cfg.grid_config(model, seed);
            let started = Instant::now();
            let grid = grid_search(&data.train, &grid_cfg)?;
            let search_seconds = started.elapsed().as_secs_f64();
            let (report, solve_seconds, gram_seconds) =
                final_fit(&data.train, data.test.as_ref(), &grid_cfg, &grid)?;
            log::info!(
                "{dataset} seed {seed} {model}: C={} gamma={:?} rho={:?} dfpr={:?} precision={:?}",
                grid.best.c, grid.best.gamma, grid.best.rho, report.dfpr, report.precision
            );
            runs.push(RunRecord {
                dataset: dataset.clone(),
                model,
                seed,
                params: grid.best,
                n_train: data.train.len(),
                n_test: data.test.as_ref().map_or(0, |t| t.len()),
                report,
                solve_seconds,
                gram_seconds,
                search_seconds,
            });
            grids.push(grid);
        }
    }
    let mut models = cfg.models.clone();
    models.sort();
    models.dedup();
    let rows = models
        .iter()
        .map(|&m| aggregate(&dataset, m, &runs))
        .collect();
    Ok(ExperimentOutput { rows, runs, grids })
}

fn aggregate(dataset: &str, model: ModelKind, runs: &[RunRecord]) -> ResultRow {
    let rs: Vec<&RunRecord> = runs.iter().filter(|r| r.model == model).collect();
    let stat = |f: &dyn Fn(&RunRecord) -> Option<f64>| Stat::from_values(rs.iter().map(|r| f(r)));
    ResultRow {
        dataset: dataset.to_string(),
        model,
        runs: rs.len(),
        seeds: rs.iter().map(|r| r.seed).collect(),
        c: rs.iter().map(|r| r.params.c).collect(),
        gamma: rs.iter().map(|r| r.params.gamma).collect(),
        rho: rs.iter().map(|r| r.params.rho).collect(),
        orientation: rs.iter().map(|r| r.params.orientation).collect(),
        epsilon: rs.first().and_then(|r| r.params.epsilon),
        precision: stat(&|r| r.report.precision),
        dfpr: stat(&|r| r.report.dfpr),
        deo: stat(&|r| r.report.deo),
        accuracy: stat(&|r| r.report.accuracy),
        solve_seconds: stat(&|r| Some(r.solve_seconds)),
        gram_seconds: stat(&|r| Some(r.gram_seconds)),
    }
}
