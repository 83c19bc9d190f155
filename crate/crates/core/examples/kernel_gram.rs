//! Builds RBF and polynomial Gram matrices and checks they are positive semidefinite.

use fairsep::data::{synthesize, SynthSpec};
use fairsep::kernels::{self, KernelSpec};
use nalgebra::SymmetricEigen;

fn main() -> fairsep::Result<()> {
    let d = synthesize(&SynthSpec::disparate_family([20, 10, 20, 10]), 1)?;
    for spec in [KernelSpec::linear(), KernelSpec::rbf(0.5)?, KernelSpec::polynomial(3, 1.0)?] {
        let k = kernels::self_gram(&spec, &d)?;
        let eig = SymmetricEigen::new(k.to_dmatrix());
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        println!(
            "{:<10} {}x{}  asymmetry {:.1e}  smallest eigenvalue {:+.3e}",
            spec.family.as_str(),
            k.n_rows(),
            k.n_cols(),
            k.max_asymmetry(),
            min
        );
    }
    Ok(())
}
