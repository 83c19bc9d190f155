//! Cross-validated (rho, C) search for the minimum-separation model with
//! both constraint orientations in the grid.

use fairsep::bench::{grid_search, GridConfig, ModelKind};
use fairsep::data::{synthesize, SynthSpec};
use fairsep::fairsvm::Orientation;
use fairsep::kernels::KernelFamily;

fn main() -> fairsep::Result<()> {
    let d = synthesize(&SynthSpec::disparate_family([280, 80, 200, 240]), 3)?;
    let mut cfg = GridConfig::new(ModelKind::SvmMt, 3);
    cfg.kernel = KernelFamily::Linear;
    cfg.c_grid = vec![0.001, 0.003, 0.01, 0.03, 0.1, 1.0];
    cfg.orientations = vec![Orientation::AMinusB, Orientation::BMinusA];
    let g = grid_search(&d, &cfg)?;
    println!("{} fits, {} cells", g.trace.len(), g.cells.len());
    let best = g.best_cell();
    println!("selected C = {} rho = {:?} orientation = {:?}", best.params.c, best.params.rho, best.params.orientation);
    println!("cv dfpr {:.3?} precision {:.3?} accuracy {:.3?}", best.dfpr, best.precision, best.accuracy);
    Ok(())
}
