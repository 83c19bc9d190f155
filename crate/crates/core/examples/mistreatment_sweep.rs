//! Tightens an equal-opportunity constraint step by step and runs the
//! disparate-mistreatment probe over the resulting models.

use fairsep::bench::mistreatment_sweep;
use fairsep::data::{synthesize, SynthSpec};
use fairsep::fairsvm::TrainConfig;
use fairsep::kernels::KernelSpec;

fn main() -> fairsep::Result<()> {
    let counts = [140, 40, 100, 120];
    let train = synthesize(&SynthSpec::disparate_family(counts), 1)?;
    let test = synthesize(&SynthSpec::disparate_family(counts.map(|c| c * 10)), 1001)?;
    let cfg = TrainConfig::new(0.1, KernelSpec::rbf(0.1)?);
    let (points, diag) = mistreatment_sweep(&train, &test, &cfg, &[0.5, 0.2, 0.1, 0.0])?;
    println!("{:>8} {:>7} {:>7} {:>7} {:>7} {:>7}", "epsilon", "tpr_a", "tpr_b", "fpr_a", "fpr_b", "deo");
    for p in &points {
        let r = &p.report;
        println!("{:>8} {:>7.3} {:>7.3} {:>7.3} {:>7.3} {:>7.3}",
            p.epsilon.map_or("none".into(), |e| e.to_string()),
            r.tpr_a.unwrap(), r.tpr_b.unwrap(), r.fpr_a.unwrap(), r.fpr_b.unwrap(), r.deo.unwrap());
    }
    for s in diag.steps.iter().filter(|s| s.flagged) {
        println!("step {} flagged: tpr_a {:+.3}, tpr_b {:+.3}", s.index, s.d_tpr_a.unwrap(), s.d_tpr_b.unwrap());
    }
    Ok(())
}
