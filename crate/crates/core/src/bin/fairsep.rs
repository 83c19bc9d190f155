//! Command-line front end for the fairsep library.
//!
//! Every flag maps onto a settings key; a `--config` TOML file is merged on
//! top, so values in the file win over flags.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use toml::{Table, Value};

use fairsep::bench::{
    emit_report, grid_search, load_experiment_data, mistreatment_sweep, run_experiment,
    runs_csv, timing_benchmark, timing_csv, trace_csv, ExperimentConfig, ModelKind,
    ReportFormat, TimingConfig,
};
use fairsep::data::{self, DatasetSchema, SynthSpec};
use fairsep::fairsvm::{predict, train, FairnessSpec, Orientation, SolverBackend, TrainConfig, TrainedModel};
use fairsep::kernels::{KernelFamily, KernelSpec};
use fairsep::metrics::evaluate;
use fairsep::qpsolve::SolverTolerances;
use fairsep::{Error, GroupedDataset, Result};

#[derive(Parser)]
#[command(name = "fairsep", version, about = "Fairness-constrained kernel SVMs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check raw files against their checksums and write processed CSVs.
    Prepare(PrepareArgs),
    /// Fit one model on a processed CSV.
    Train(TrainArgs),
    /// Score a saved model on a processed CSV.
    Evaluate(EvaluateArgs),
    /// Cross-validate the hyperparameter grid and write the full trace.
    GridSearch(ExperimentArgs),
    /// Seeded runs over several models with aggregated reports.
    Experiment(ExperimentArgs),
    /// Solver timing and the equal-opportunity mistreatment sweep.
    Bench(BenchArgs),
    /// Sample a synthetic dataset.
    Synth(SynthArgs),
}

fn list<T: Into<Value> + Clone>(v: &[T]) -> Option<Value> {
    (!v.is_empty()).then(|| Value::Array(v.iter().cloned().map(Into::into).collect()))
}

fn put(t: &mut Table, key: &str, v: Option<impl Into<Value>>) {
    if let Some(v) = v {
        t.insert(key.to_string(), v.into());
    }
}

fn path_value(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

/// Deep merge of `over` onto `base`.
fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn settings<T: DeserializeOwned>(mut flags: Table, config: Option<&Path>, what: &str) -> Result<T> {
    if let Some(path) = config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let file: Table = toml::from_str(&text)
            .map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
        merge(&mut flags, file);
    }
    Value::Table(flags)
        .try_into()
        .map_err(|e| Error::input(format!("{what} settings: {e}")))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn require_seed(seed: Option<u64>, what: &str) -> Result<u64> {
    seed.ok_or_else(|| Error::input(format!("--seed is required for {what}")))
}

// ---- prepare

#[derive(Args)]
struct PrepareArgs {
    /// Bundled schema name (adult, compas, drug, arrhythmia).
    #[arg(long, conflicts_with = "schema")]
    dataset: Option<String>,
    /// Schema TOML file.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Directory holding the raw files.
    #[arg(long, default_value = "data")]
    data_dir: PathBuf,
    /// Output directory for processed CSVs and the preprocessing report.
    #[arg(long)]
    out: PathBuf,
    /// Balance the training labels by dropping majority-label rows.
    #[arg(long)]
    undersample: bool,
    #[arg(long)]
    seed: Option<u64>,
}

fn schema_from(dataset: &Option<String>, schema: &Option<PathBuf>) -> Result<DatasetSchema> {
    match (dataset, schema) {
        (Some(n), None) => DatasetSchema::bundled(n),
        (None, Some(p)) => DatasetSchema::load(p),
        _ => Err(Error::input("give exactly one of --dataset or --schema")),
    }
}

fn prepare(a: PrepareArgs) -> Result<()> {
    let schema = schema_from(&a.dataset, &a.schema)?;
    let seed = if a.undersample { Some(require_seed(a.seed, "--undersample")?) } else { None };
    let mut loaded = data::load_dataset(&a.data_dir, &schema)?;
    if let Some(seed) = seed {
        loaded.train = data::undersample_majority_label(&loaded.train, seed)?;
    }
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(format!("creating {}", a.out.display()), e))?;
    match &loaded.test {
        Some(test) => {
            loaded.train.save(&a.out.join("train.csv"))?;
            test.save(&a.out.join("test.csv"))?;
        }
        None => loaded.train.save(&a.out.join("data.csv"))?,
    }
    write_text(&a.out.join("preprocess.json"), &(serde_json::to_string_pretty(&loaded.report)? + "\n"))?;
    println!(
        "{}: {} training rows, {} test rows, {} features -> {}",
        schema.name,
        loaded.train.len(),
        loaded.test.as_ref().map_or(0, |t| t.len()),
        loaded.train.dim(),
        a.out.display()
    );
    Ok(())
}

// ---- train

#[derive(Args)]
struct TrainArgs {
    /// Processed CSV (features, label, group).
    #[arg(long)]
    data: PathBuf,
    /// svm, svm_mt, ferm or combined.
    #[arg(long)]
    model: Option<String>,
    /// linear, rbf or polynomial.
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long)]
    coef0: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// auto, a_minus_b or b_minus_a.
    #[arg(long)]
    orientation: Option<String>,
    /// decomposition or dense.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    kkt_tol: Option<f64>,
    /// Where to write the fitted model.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainSettings {
    #[serde(default = "default_model")]
    model: ModelKind,
    #[serde(default = "default_kernel")]
    kernel: KernelFamily,
    #[serde(default = "default_gamma")]
    gamma: f64,
    #[serde(default = "default_degree")]
    degree: u32,
    #[serde(default = "default_coef0")]
    coef0: f64,
    #[serde(default = "default_c")]
    c: f64,
    #[serde(default = "default_rho")]
    rho: f64,
    #[serde(default)]
    epsilon: f64,
    #[serde(default)]
    orientation: Orientation,
    #[serde(default)]
    backend: SolverBackend,
    #[serde(default = "default_kkt_tol")]
    kkt_tol: f64,
}

fn default_model() -> ModelKind {
    ModelKind::Svm
}
fn default_kernel() -> KernelFamily {
    KernelFamily::Rbf
}
fn default_gamma() -> f64 {
    0.1
}
fn default_degree() -> u32 {
    2
}
fn default_coef0() -> f64 {
    1.0
}
fn default_c() -> f64 {
    1.0
}
fn default_rho() -> f64 {
    0.1
}
fn default_kkt_tol() -> f64 {
    1e-6
}

fn kernel_spec(family: KernelFamily, gamma: f64, degree: u32, coef0: f64) -> Result<KernelSpec> {
    match family {
        KernelFamily::Linear => Ok(KernelSpec::linear()),
        KernelFamily::Rbf => KernelSpec::rbf(gamma),
        KernelFamily::Polynomial => KernelSpec::polynomial(degree, coef0),
    }
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let mut t = Table::new();
    put(&mut t, "model", a.model);
    put(&mut t, "kernel", a.kernel);
    put(&mut t, "gamma", a.gamma);
    put(&mut t, "degree", a.degree.map(i64::from));
    put(&mut t, "coef0", a.coef0);
    put(&mut t, "c", a.c);
    put(&mut t, "rho", a.rho);
    put(&mut t, "epsilon", a.epsilon);
    put(&mut t, "orientation", a.orientation);
    put(&mut t, "backend", a.backend);
    put(&mut t, "kkt_tol", a.kkt_tol);
    let s: TrainSettings = settings(t, a.config.as_deref(), "train")?;
    let d = GroupedDataset::load(&a.data)?;
    let cfg = TrainConfig::new(s.c, kernel_spec(s.kernel, s.gamma, s.degree, s.coef0)?)
        .with_tolerances(SolverTolerances {
            kkt_tol: s.kkt_tol,
            ..SolverTolerances::default()
        })
        .with_orientation(s.orientation)
        .with_backend(s.backend);
    let spec: FairnessSpec = s.model.fairness(Some(s.rho), s.epsilon);
    let m = train(&d, &cfg, &spec)?;
    m.save(&a.out)?;
    println!(
        "{} on {} rows: {} support vectors, separation {:?}, eo gap {:?}, solve {:.3}s -> {}",
        s.model,
        d.len(),
        m.support_indices.len(),
        m.constraint_value,
        m.eo_value,
        m.solve_seconds,
        a.out.display()
    );
    Ok(())
}

// ---- evaluate

#[derive(Args)]
struct EvaluateArgs {
    /// Model file written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Processed CSV to score.
    #[arg(long)]
    data: PathBuf,
    /// Optional JSON output path; the report is always printed.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let m = TrainedModel::load(&a.model)?;
    let d = GroupedDataset::load(&a.data)?;
    let report = evaluate(&predict(&m, &d)?.labels, &d)?;
    let text = serde_json::to_string_pretty(&report.to_json())? + "\n";
    if let Some(out) = &a.out {
        write_text(out, &text)?;
    }
    print!("{text}");
    Ok(())
}

// ---- grid-search and experiment

#[derive(Args)]
struct ExperimentArgs {
    /// Bundled schema name; raw files are read from --data-dir.
    #[arg(long)]
    dataset: Option<String>,
    /// Schema TOML file; raw files are read from --data-dir.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Processed CSV written by `prepare` or `synth`.
    #[arg(long)]
    processed: Option<PathBuf>,
    /// Synthetic cluster spec, sampled anew with each seed.
    #[arg(long)]
    synthetic: Option<PathBuf>,
    /// Built-in synthetic family with these cell counts
    /// (group a positives, group b positives, group a negatives, group b negatives).
    #[arg(long, value_delimiter = ',')]
    family: Vec<i64>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Models to run, comma separated.
    #[arg(long, value_delimiter = ',')]
    models: Vec<String>,
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long)]
    coef0: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    c_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    gamma_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    rho_sweep: Vec<f64>,
    #[arg(long)]
    eo_epsilon: Option<f64>,
    #[arg(long)]
    folds: Option<u32>,
    #[arg(long)]
    runs: Option<u32>,
    /// One seed per run; repeat or comma separate.
    #[arg(long = "seed", value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    undersample: bool,
    /// auto, holdout or cross_validation.
    #[arg(long)]
    evaluation: Option<String>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    max_train: Option<u32>,
    #[arg(long)]
    max_test: Option<u32>,
    /// min_dfpr or accuracy_then_dfpr.
    #[arg(long)]
    selection: Option<String>,
    #[arg(long)]
    precision_slack: Option<f64>,
    #[arg(long)]
    accuracy_slack: Option<f64>,
    /// Constraint signs searched by cross-validation, comma separated.
    #[arg(long, value_delimiter = ',')]
    orientations: Vec<String>,
    #[arg(long)]
    kkt_tol: Option<f64>,
    /// Output directory for reports.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn experiment_config(a: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut t = Table::new();
    let mut sources = Vec::new();
    let mut source = |key: &str, v: Option<Value>| {
        if let Some(v) = v {
            sources.push(Table::from_iter([(key.to_string(), v)]));
        }
    };
    source("bundled", a.dataset.clone().map(Value::from));
    source("schema", path_value(&a.schema).map(Value::from));
    source("processed", path_value(&a.processed).map(Value::from));
    source("synthetic", path_value(&a.synthetic).map(Value::from));
    source("disparate_family", list(&a.family));
    match sources.len() {
        0 => {}
        1 => {
            t.insert("dataset".into(), Value::Table(sources.pop().unwrap()));
        }
        _ => return Err(Error::input("give one dataset source")),
    }
    put(&mut t, "data_dir", path_value(&a.data_dir));
    put(&mut t, "models", list(&a.models));
    put(&mut t, "kernel", a.kernel.clone());
    put(&mut t, "degree", a.degree.map(i64::from));
    put(&mut t, "coef0", a.coef0);
    put(&mut t, "c_grid", list(&a.c_grid));
    put(&mut t, "gamma_grid", list(&a.gamma_grid));
    put(&mut t, "rho_sweep", list(&a.rho_sweep));
    put(&mut t, "eo_epsilon", a.eo_epsilon);
    put(&mut t, "folds", a.folds.map(i64::from));
    put(&mut t, "runs", a.runs.map(i64::from));
    let seeds: Vec<i64> = a
        .seeds
        .iter()
        .map(|&s| i64::try_from(s).map_err(|_| Error::input(format!("seed {s} exceeds 2^63 - 1"))))
        .collect::<Result<_>>()?;
    put(&mut t, "seeds", list(&seeds));
    put(&mut t, "undersample", a.undersample.then_some(true));
    put(&mut t, "evaluation", a.evaluation.clone());
    put(&mut t, "test_fraction", a.test_fraction);
    put(&mut t, "max_train", a.max_train.map(i64::from));
    put(&mut t, "max_test", a.max_test.map(i64::from));
    if a.selection.is_some() || a.precision_slack.is_some() || a.accuracy_slack.is_some() {
        let mut sel = Table::new();
        sel.insert("rule".into(), a.selection.clone().unwrap_or_else(|| "min_dfpr".into()).into());
        put(&mut sel, "precision_slack", a.precision_slack);
        put(&mut sel, "accuracy_slack", a.accuracy_slack);
        t.insert("selection".into(), Value::Table(sel));
    }
    put(&mut t, "orientations", list(&a.orientations));
    put(&mut t, "kkt_tol", a.kkt_tol);
    put(&mut t, "output", path_value(&a.output));
    let cfg: ExperimentConfig = settings(t, a.config.as_deref(), "experiment")?;
    cfg.validate()?;
    Ok(cfg)
}

fn grid_search_cmd(a: ExperimentArgs) -> Result<()> {
    let cfg = experiment_config(&a)?;
    let seed = cfg.seeds[0];
    let data = load_experiment_data(&cfg, seed)?;
    let mut best = Vec::new();
    for &model in &cfg.models {
        let grid = grid_search(&data.train, &cfg.grid_config(model, seed))?;
        write_text(
            &cfg.output.join(format!("trace_{model}_seed{seed}.csv")),
            &trace_csv(&grid.trace)?,
        )?;
        best.push(serde_json::json!({
            "model": model,
            "seed": seed,
            "params": grid.best,
            "cv": grid.best_cell(),
        }));
    }
    let text = serde_json::to_string_pretty(&best)? + "\n";
    write_text(&cfg.output.join("best.json"), &text)?;
    print!("{text}");
    Ok(())
}

fn experiment_cmd(a: ExperimentArgs) -> Result<()> {
    let cfg = experiment_config(&a)?;
    let out = run_experiment(&cfg)?;
    let dir = &cfg.output;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    emit_report(&out.rows, ReportFormat::Csv, &dir.join("results.csv"))?;
    emit_report(&out.rows, ReportFormat::Json, &dir.join("results.json"))?;
    emit_report(&out.rows, ReportFormat::MarkdownTable, &dir.join("results.md"))?;
    write_text(&dir.join("runs.csv"), &runs_csv(&out.runs)?)?;
    for (run, grid) in out.runs.iter().zip(&out.grids) {
        write_text(
            &dir.join(format!("trace_{}_seed{}.csv", run.model, run.seed)),
            &trace_csv(&grid.trace)?,
        )?;
    }
    print!("{}", fairsep::bench::results_markdown(&out.rows));
    Ok(())
}

// ---- bench

#[derive(Args)]
struct BenchArgs {
    /// Processed CSV to time on; without it the synthetic family is sampled.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Cell counts of the synthetic family.
    #[arg(long, value_delimiter = ',', default_values_t = [700usize, 200, 500, 600])]
    family: Vec<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = [ModelKind::Svm, ModelKind::SvmMt, ModelKind::Ferm])]
    models: Vec<ModelKind>,
    #[arg(long, default_value = "rbf", value_parser = KernelFamily::parse)]
    kernel: KernelFamily,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value_t = 2)]
    degree: u32,
    #[arg(long, default_value_t = 1.0)]
    coef0: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// Run the equal-opportunity sweep with these bands instead of timing.
    #[arg(long, value_delimiter = ',')]
    sweep: Vec<f64>,
    /// Test CSV for the sweep; the synthetic family draws one when absent.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "bench")]
    out: PathBuf,
}

fn family_counts(v: &[usize]) -> Result<[usize; 4]> {
    v.try_into()
        .map_err(|_| Error::input(format!("--family takes 4 counts, got {}", v.len())))
}

fn bench_cmd(a: BenchArgs) -> Result<()> {
    let counts = family_counts(&a.family)?;
    let train_data = match &a.data {
        Some(p) => GroupedDataset::load(p)?,
        None => data::synthesize(&SynthSpec::disparate_family(counts), require_seed(a.seed, "the synthetic benchmark")?)?,
    };
    let cfg = TrainConfig::new(a.c, kernel_spec(a.kernel, a.gamma, a.degree, a.coef0)?);
    if !a.sweep.is_empty() {
        let test = match (&a.test, &a.data) {
            (Some(p), _) => GroupedDataset::load(p)?,
            (None, None) => {
                let seed = require_seed(a.seed, "the synthetic sweep")?;
                data::synthesize(&SynthSpec::disparate_family(counts.map(|c| c * 10)), seed.wrapping_add(1))?
            }
            (None, Some(_)) => return Err(Error::input("--sweep on --data needs --test")),
        };
        let (points, diag) = mistreatment_sweep(&train_data, &test, &cfg, &a.sweep)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["epsilon", "flagged_step"];
        header.extend(fairsep::metrics::EvalReport::CSV_FIELDS);
        w.write_record(&header)?;
        for (i, p) in points.iter().enumerate() {
            let flagged = diag.steps.iter().any(|s| s.index == i && s.flagged);
            let mut rec = vec![
                p.epsilon.map_or("none".to_string(), |e| format!("{e:?}")),
                flagged.to_string(),
            ];
            rec.extend(p.report.fields().iter().map(|f| f.to_string()));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io("writing csv", e.into_error()))?;
        let text = String::from_utf8_lossy(&bytes).into_owned();
        write_text(&a.out.join("sweep.csv"), &text)?;
        print!("{text}");
        println!("mistreatment flagged: {}", diag.any_flagged());
        return Ok(());
    }
    let rows = timing_benchmark(
        &train_data,
        &TimingConfig {
            train: cfg,
            models: a.models,
            rho: a.rho,
            epsilon: a.epsilon,
            repeats: a.repeats,
        },
    )?;
    let text = timing_csv(&rows)?;
    write_text(&a.out.join("timing.csv"), &text)?;
    print!("{text}");
    Ok(())
}

// ---- synth

#[derive(Args)]
struct SynthArgs {
    /// Cluster spec TOML; the built-in family is used when absent.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [140usize, 40, 100, 120])]
    family: Vec<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

fn synth_cmd(a: SynthArgs) -> Result<()> {
    let seed = require_seed(a.seed, "synth")?;
    let spec = match &a.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(format!("reading {}", p.display()), e))?;
            SynthSpec::from_toml_str(&text)?
        }
        None => SynthSpec::disparate_family(family_counts(&a.family)?),
    };
    let d = data::synthesize(&spec, seed)?;
    d.save(&a.out)?;
    println!("{} samples, {} features -> {}", d.len(), d.dim(), a.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Prepare(a) => prepare(a),
        Command::Train(a) => train_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::GridSearch(a) => grid_search_cmd(a),
        Command::Experiment(a) => experiment_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Synth(a) => synth_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
