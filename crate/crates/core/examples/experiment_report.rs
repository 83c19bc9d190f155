//! Seeded multi-model experiment on the synthetic family, emitted as CSV,
//! JSON and a Markdown table under `target/experiment_report`.

use std::path::PathBuf;

use fairsep::bench::{emit_report, run_experiment, DatasetSource, ExperimentConfig, ReportFormat};
use fairsep::fairsvm::Orientation;
use fairsep::kernels::KernelFamily;

fn main() -> fairsep::Result<()> {
    let mut cfg = ExperimentConfig::new(DatasetSource::DisparateFamily([140, 40, 100, 120]), vec![1, 2, 3]);
    cfg.kernel = KernelFamily::Linear;
    cfg.c_grid = vec![0.003, 0.01, 0.1, 1.0];
    cfg.orientations = vec![Orientation::AMinusB, Orientation::BMinusA];
    let out = run_experiment(&cfg)?;
    let dir = PathBuf::from("target/experiment_report");
    std::fs::create_dir_all(&dir).map_err(|e| fairsep::Error::io("creating output dir", e))?;
    emit_report(&out.rows, ReportFormat::Csv, &dir.join("results.csv"))?;
    emit_report(&out.rows, ReportFormat::Json, &dir.join("results.json"))?;
    emit_report(&out.rows, ReportFormat::MarkdownTable, &dir.join("results.md"))?;
    print!("{}", fairsep::bench::results_markdown(&out.rows));
    println!("reports written to {}", dir.display());
    Ok(())
}
