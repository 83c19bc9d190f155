//! Solver wall time of the three models on 2000 synthetic samples, with
//! Gram construction timed separately.

use fairsep::bench::{timing_benchmark, timing_csv, ModelKind, TimingConfig};
use fairsep::data::{synthesize, SynthSpec};
use fairsep::fairsvm::TrainConfig;
use fairsep::kernels::KernelSpec;

fn main() -> fairsep::Result<()> {
    let d = synthesize(&SynthSpec::disparate_family([700, 200, 500, 600]), 0)?;
    let cfg = TimingConfig {
        train: TrainConfig::new(1.0, KernelSpec::rbf(0.1)?),
        models: vec![ModelKind::Svm, ModelKind::SvmMt, ModelKind::Ferm],
        rho: 0.5,
        epsilon: 0.0,
        repeats: 3,
    };
    print!("{}", timing_csv(&timing_benchmark(&d, &cfg)?)?);
    Ok(())
}
