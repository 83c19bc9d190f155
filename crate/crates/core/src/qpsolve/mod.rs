//! Dense convex quadratic programming.
//!
//! Solves
//!
//! ```text
//!     minimize    1/2 v'Qv + q'v
//!     subject to  l <= v <= u
//!                 A v <= b
//!                 E v  = e
//! ```
//!
//! with a primal-dual interior-point method (Mehrotra predictor-corrector).
//! When the main iteration fails to converge an elastic phase-one program
//! decides between `Infeasible` and `MaxIter`.

mod ipm;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use ipm::REGULARIZATION;

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub quad: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    pub ineq_mat: DMatrix<f64>,
    pub ineq_rhs: DVector<f64>,
    pub eq_mat: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
}

impl QpProblem {
    /// Unconstrained problem `1/2 v'Qv + q'v`.
    pub fn new(quad: DMatrix<f64>, linear: DVector<f64>) -> Result<Self> {
        let n = linear.len();
        if quad.nrows() != n || quad.ncols() != n {
            return Err(Error::input(format!(
                "Q is {}x{} but q has length {n}",
                quad.nrows(),
                quad.ncols()
            )));
        }
        Ok(QpProblem {
            quad,
            linear,
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
            ineq_mat: DMatrix::zeros(0, n),
            ineq_rhs: DVector::zeros(0),
            eq_mat: DMatrix::zeros(0, n),
            eq_rhs: DVector::zeros(0),
        })
    }

    pub fn with_bounds(mut self, lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        let n = self.dim();
        if lower.len() != n || upper.len() != n {
            return Err(Error::input("bound vectors must match the problem dimension"));
        }
        if let Some(i) = (0..n).find(|&i| lower[i] > upper[i] || lower[i].is_nan() || upper[i].is_nan()) {
            return Err(Error::input(format!(
                "bound {i} has lower {} above upper {}",
                lower[i], upper[i]
            )));
        }
        self.lower = lower;
        self.upper = upper;
        Ok(self)
    }

    pub fn with_inequalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.ncols() != self.dim() || a.nrows() != b.len() {
            return Err(Error::input(format!(
                "inequality block is {}x{} with {} right-hand sides",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        self.ineq_mat = a;
        self.ineq_rhs = b;
        Ok(self)
    }

    pub fn with_equalities(mut self, e: DMatrix<f64>, rhs: DVector<f64>) -> Result<Self> {
        if e.ncols() != self.dim() || e.nrows() != rhs.len() {
            return Err(Error::input(format!(
                "equality block is {}x{} with {} right-hand sides",
                e.nrows(),
                e.ncols(),
                rhs.len()
            )));
        }
        self.eq_mat = e;
        self.eq_rhs = rhs;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn objective(&self, v: &DVector<f64>) -> f64 {
        0.5 * v.dot(&(&self.quad * v)) + self.linear.dot(v)
    }

    /// Largest violation over bounds, inequalities and equalities.
    pub fn max_violation(&self, v: &DVector<f64>) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            worst = worst.max(self.lower[i] - v[i]).max(v[i] - self.upper[i]);
        }
        if self.ineq_mat.nrows() > 0 {
            let av = &self.ineq_mat * v - &self.ineq_rhs;
            worst = worst.max(av.max());
        }
        if self.eq_mat.nrows() > 0 {
            let ev = &self.eq_mat * v - &self.eq_rhs;
            worst = worst.max(ev.amax());
        }
        worst
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        let scale = self.quad.amax().max(1.0);
        let asym = (&self.quad - self.quad.transpose()).amax();
        if asym > 1e-10 * scale {
            return Err(Error::input(format!("Q is not symmetric (max asymmetry {asym:e})")));
        }
        if self.linear.iter().any(|v| !v.is_finite()) || self.quad.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("objective contains non-finite entries"));
        }
        if n > 0 {
            let shifted = &self.quad + DMatrix::identity(n, n) * 1e-8;
            if shifted.cholesky().is_none() {
                return Err(Error::input(
                    "Q is not positive semidefinite (eigenvalue below -1e-8)",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverTolerances {
    pub feas_tol: f64,
    pub kkt_tol: f64,
    pub opt_tol: f64,
    /// Defaults to `10 n + 1000` when unset.
    pub max_iter: Option<usize>,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        SolverTolerances {
            feas_tol: 1e-6,
            kkt_tol: 1e-6,
            opt_tol: 1e-6,
            max_iter: None,
        }
    }
}

impl SolverTolerances {
    pub fn iteration_budget(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(10 * n + 1000)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

/// Lagrange multipliers; entries for infinite bounds are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers {
    pub ineq: DVector<f64>,
    pub eq: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl Multipliers {
    pub fn zeros(p: &QpProblem) -> Self {
        Multipliers {
            ineq: DVector::zeros(p.ineq_mat.nrows()),
            eq: DVector::zeros(p.eq_mat.nrows()),
            lower: DVector::zeros(p.dim()),
            upper: DVector::zeros(p.dim()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub v: DVector<f64>,
    pub objective: f64,
    pub status: QpStatus,
    pub kkt_residual: f64,
    pub constraint_violation: f64,
    pub iterations: usize,
    /// Diagonal shift applied to Q inside the Newton systems (0 when Q is positive definite).
    pub regularization: f64,
    pub multipliers: Multipliers,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    pub stationarity: f64,
    pub primal_feasibility: f64,
    pub dual_feasibility: f64,
    pub complementarity: f64,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.stationarity
            .max(self.primal_feasibility)
            .max(self.dual_feasibility)
            .max(self.complementarity)
    }
}

pub fn solve(p: &QpProblem, tol: &SolverTolerances) -> Result<QpSolution> {
    solve_inner(p, tol, None)
}

/// Like [`solve`], seeded with an initial point. When the seed is feasible
/// the returned objective never exceeds the seed's objective.
pub fn solve_with_start(
    p: &QpProblem,
    tol: &SolverTolerances,
    start: &DVector<f64>,
) -> Result<QpSolution> {
    if start.len() != p.dim() {
        return Err(Error::input("starting point has the wrong dimension"));
    }
    solve_inner(p, tol, Some(start))
}

fn solve_inner(
    p: &QpProblem,
    tol: &SolverTolerances,
    start: Option<&DVector<f64>>,
) -> Result<QpSolution> {
    p.validate()?;
    let budget = tol.iteration_budget(p.dim());
    let out = ipm::run(p, tol, budget, start);
    let mut sol = if out.converged {
        out.into_solution(p, QpStatus::Optimal)
    } else {
        let violation = ipm::phase_one(p, tol, budget);
        let status = if violation > tol.feas_tol {
            QpStatus::Infeasible
        } else {
            QpStatus::MaxIter
        };
        out.into_solution(p, status)
    };

    if let Some(x0) = start {
        if p.max_violation(x0) <= tol.feas_tol {
            let f0 = p.objective(x0);
            if sol.objective > f0 || sol.constraint_violation > tol.feas_tol {
                sol.v = x0.clone();
                sol.objective = f0;
                sol.constraint_violation = p.max_violation(x0);
                sol.kkt_residual = verify_kkt(p, &sol).max_residual();
            }
        }
    }
    Ok(sol)
}

/// Recomputes the first-order optimality residuals of a candidate solution
/// from its primal point and multipliers.
pub fn verify_kkt(p: &QpProblem, s: &QpSolution) -> KktReport {
    let v = &s.v;
    let m = &s.multipliers;
    let mut grad = &p.quad * v + &p.linear;
    if p.ineq_mat.nrows() > 0 {
        grad += p.ineq_mat.transpose() * &m.ineq;
    }
    if p.eq_mat.nrows() > 0 {
        grad += p.eq_mat.transpose() * &m.eq;
    }
    grad -= &m.lower;
    grad += &m.upper;
    let stationarity = grad.amax();

    let primal_feasibility = p.max_violation(v);

    let mut dual_feasibility = 0.0f64;
    for x in m.ineq.iter().chain(m.lower.iter()).chain(m.upper.iter()) {
        dual_feasibility = dual_feasibility.max(-x);
    }

    let mut complementarity = 0.0f64;
    if p.ineq_mat.nrows() > 0 {
        let slack = &p.ineq_rhs - &p.ineq_mat * v;
        for (l, sl) in m.ineq.iter().zip(slack.iter()) {
            complementarity = complementarity.max((l * sl).abs());
        }
    }
    for i in 0..p.dim() {
        if p.lower[i].is_finite() {
            complementarity = complementarity.max((m.lower[i] * (v[i] - p.lower[i])).abs());
        }
        if p.upper[i].is_finite() {
            complementarity = complementarity.max((m.upper[i] * (p.upper[i] - v[i])).abs());
        }
    }
    KktReport {
        stationarity,
        primal_feasibility,
        dual_feasibility,
        complementarity,
    }
}
