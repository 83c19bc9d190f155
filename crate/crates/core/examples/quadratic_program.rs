//! Solves a small box- and equality-constrained QP and verifies its KKT conditions.

use fairsep::qpsolve::{solve, verify_kkt, QpProblem, SolverTolerances};
use nalgebra::{DMatrix, DVector};

fn main() -> fairsep::Result<()> {
    // minimize 1/2 v'Qv - 1'v  s.t.  0 <= v <= 1,  v0 - v1 = 0,  v0 + v2 <= 1.2
    let q = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.2, 0.0, 0.2, 1.5]);
    let p = QpProblem::new(q, DVector::from_element(3, -1.0))?
        .with_bounds(DVector::zeros(3), DVector::from_element(3, 1.0))?
        .with_equalities(DMatrix::from_row_slice(1, 3, &[1.0, -1.0, 0.0]), DVector::zeros(1))?
        .with_inequalities(DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 1.0]), DVector::from_element(1, 1.2))?;
    let s = solve(&p, &SolverTolerances::default())?;
    let kkt = verify_kkt(&p, &s);
    println!("status     {:?} after {} iterations", s.status, s.iterations);
    println!("solution   {:.6?}", s.v.as_slice());
    println!("objective  {:.8}", s.objective);
    println!("KKT        {:.2e} (stationarity {:.1e}, complementarity {:.1e})",
        kkt.max_residual(), kkt.stationarity, kkt.complementarity);
    Ok(())
}
