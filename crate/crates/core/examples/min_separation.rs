//! Trains vanilla and minimum-separation SVMs and compares false positive rates.

use fairsep::data::{synthesize, SynthSpec};
use fairsep::fairsvm::{max_attainable_separation, predict, FairnessSpec, train_min_sep, train_vanilla, Orientation, TrainConfig};
use fairsep::kernels::{self, KernelSpec};
use fairsep::metrics::evaluate;
use fairsep::{Group, GroupedDataset};

fn main() -> fairsep::Result<()> {
    let counts = [140, 40, 100, 120];
    let train = synthesize(&SynthSpec::disparate_family(counts), 0)?;
    let test = synthesize(&SynthSpec::disparate_family(counts.map(|c| c * 10)), 1000)?;
    let cfg = TrainConfig::new(0.01, KernelSpec::linear()).with_orientation(Orientation::AMinusB);

    let vanilla = train_vanilla(&train, &cfg)?;
    let r = evaluate(&predict(&vanilla, &test)?.labels, &test)?;
    println!("vanilla     separation {:+.3}  fpr a/b {:.3}/{:.3}  dfpr {:.3}  precision {:.3}",
        vanilla.constraint_value.unwrap_or(f64::NAN), r.fpr_a.unwrap(), r.fpr_b.unwrap(),
        r.dfpr.unwrap(), r.precision.unwrap());

    for rho in [0.1, 0.2, 0.3, 0.4, 0.5] {
        let m = train_min_sep(&train, &cfg, rho)?;
        let r = evaluate(&predict(&m, &test)?.labels, &test)?;
        println!("rho = {rho:.1}   separation {:+.3}  fpr a/b {:.3}/{:.3}  dfpr {:.3}  precision {:.3}",
            m.constraint_value.unwrap(), r.fpr_a.unwrap(), r.fpr_b.unwrap(),
            r.dfpr.unwrap(), r.precision.unwrap());
    }

    // When both groups' negatives share one barycenter in feature space no
    // separation is attainable and training reports infeasibility.
    let rows = vec![vec![1.0, 0.0], vec![-1.0, 1.0], vec![-1.0, -1.0], vec![2.0, 0.0], vec![-1.0, -1.0], vec![-1.0, 1.0]];
    let y = vec![1, -1, -1, 1, -1, -1];
    let s = vec![Group::A, Group::A, Group::A, Group::B, Group::B, Group::B];
    let tied = GroupedDataset::from_rows(&rows, y, s)?;
    let k = kernels::self_gram(&cfg.kernel, &tied)?;
    println!("max attainable separation on tied data: {}",
        max_attainable_separation(&tied, &k, &cfg, &FairnessSpec::min_sep(0.1))?);
    match train_min_sep(&tied, &cfg, 0.1) {
        Err(e) => println!("rho = 0.1: {e} (exit code {})", e.exit_code()),
        Ok(m) => println!("rho = 0.1 unexpectedly solved: {:?}", m.constraint_value),
    }
    Ok(())
}
