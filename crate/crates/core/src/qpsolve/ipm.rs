use nalgebra::{DMatrix, DVector};

use super::{Multipliers, QpProblem, QpSolution, QpStatus, SolverTolerances};

/// Primal shift used in the Newton systems when Q is singular.
pub const REGULARIZATION: f64 = 1e-10;

const STEP_FRACTION: f64 = 0.99;
const DIVERGENCE: f64 = 1e13;
const POLISH_TARGET: f64 = 1e-4;
const POLISH_STEPS: usize = 6;

/// All inequalities `G v <= h` with the bounds kept in index form.
struct Inequalities<'a> {
    p: &'a QpProblem,
    lower_idx: Vec<usize>,
    upper_idx: Vec<usize>,
}

impl<'a> Inequalities<'a> {
    fn new(p: &'a QpProblem) -> Self {
        let lower_idx = (0..p.dim()).filter(|&i| p.lower[i].is_finite()).collect();
        let upper_idx = (0..p.dim()).filter(|&i| p.upper[i].is_finite()).collect();
        Inequalities {
            p,
            lower_idx,
            upper_idx,
        }
    }

    fn m_general(&self) -> usize {
        self.p.ineq_mat.nrows()
    }

    fn len(&self) -> usize {
        self.m_general() + self.lower_idx.len() + self.upper_idx.len()
    }

    fn h(&self) -> DVector<f64> {
        let mut h = DVector::zeros(self.len());
        let m = self.m_general();
        h.rows_mut(0, m).copy_from(&self.p.ineq_rhs);
        for (k, &i) in self.lower_idx.iter().enumerate() {
            h[m + k] = -self.p.lower[i];
        }
        let off = m + self.lower_idx.len();
        for (k, &i) in self.upper_idx.iter().enumerate() {
            h[off + k] = self.p.upper[i];
        }
        h
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.len());
        let m = self.m_general();
        if m > 0 {
            out.rows_mut(0, m).copy_from(&(&self.p.ineq_mat * x));
        }
        for (k, &i) in self.lower_idx.iter().enumerate() {
            out[m + k] = -x[i];
        }
        let off = m + self.lower_idx.len();
        for (k, &i) in self.upper_idx.iter().enumerate() {
            out[off + k] = x[i];
        }
        out
    }

    fn apply_t(&self, z: &DVector<f64>) -> DVector<f64> {
        let m = self.m_general();
        let mut out = if m > 0 {
            self.p.ineq_mat.transpose() * z.rows(0, m)
        } else {
            DVector::zeros(self.p.dim())
        };
        for (k, &i) in self.lower_idx.iter().enumerate() {
            out[i] -= z[m + k];
        }
        let off = m + self.lower_idx.len();
        for (k, &i) in self.upper_idx.iter().enumerate() {
            out[i] += z[off + k];
        }
        out
    }

    /// `H += G' diag(d) G`
    fn add_weighted_gram(&self, h: &mut DMatrix<f64>, d: &DVector<f64>) {
        let m = self.m_general();
        if m > 0 {
            let a = &self.p.ineq_mat;
            let mut scaled = a.clone();
            for r in 0..m {
                scaled.row_mut(r).scale_mut(d[r]);
            }
            h.gemm_tr(1.0, a, &scaled, 1.0);
        }
        for (k, &i) in self.lower_idx.iter().enumerate() {
            h[(i, i)] += d[m + k];
        }
        let off = m + self.lower_idx.len();
        for (k, &i) in self.upper_idx.iter().enumerate() {
            h[(i, i)] += d[off + k];
        }
    }

    fn split(&self, z: &DVector<f64>) -> Multipliers {
        let m = self.m_general();
        let n = self.p.dim();
        let mut lower = DVector::zeros(n);
        let mut upper = DVector::zeros(n);
        for (k, &i) in self.lower_idx.iter().enumerate() {
            lower[i] = z[m + k];
        }
        let off = m + self.lower_idx.len();
        for (k, &i) in self.upper_idx.iter().enumerate() {
            upper[i] = z[off + k];
        }
        Multipliers {
            ineq: z.rows(0, m).into_owned(),
            eq: DVector::zeros(self.p.eq_mat.nrows()),
            lower,
            upper,
        }
    }
}

pub(super) struct IpmOutcome {
    pub converged: bool,
    pub x: DVector<f64>,
    pub z: DVector<f64>,
    pub nu: DVector<f64>,
    pub iterations: usize,
    pub regularization: f64,
    lower_idx: Vec<usize>,
    upper_idx: Vec<usize>,
}

impl IpmOutcome {
    pub fn into_solution(self, p: &QpProblem, status: QpStatus) -> QpSolution {
        let ineq = Inequalities {
            p,
            lower_idx: self.lower_idx,
            upper_idx: self.upper_idx,
        };
        let mut multipliers = ineq.split(&self.z);
        multipliers.eq = self.nu;
        let mut sol = QpSolution {
            objective: p.objective(&self.x),
            constraint_violation: p.max_violation(&self.x),
            v: self.x,
            status,
            kkt_residual: 0.0,
            iterations: self.iterations,
            regularization: self.regularization,
            multipliers,
        };
        let r = super::verify_kkt(p, &sol);
        sol.kkt_residual = r.stationarity.max(r.dual_feasibility).max(r.complementarity);
        sol
    }
}

fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    let mut a = f64::INFINITY;
    for (x, d) in v.iter().zip(dv.iter()) {
        if *d < 0.0 {
            a = a.min(-x / d);
        }
    }
    a
}

fn needs_regularization(q: &DMatrix<f64>) -> bool {
    let n = q.nrows();
    if n == 0 {
        return false;
    }
    match q.clone().cholesky() {
        None => true,
        Some(ch) => {
            let l = ch.l();
            let diag_max = q.diagonal().amax().max(1.0);
            (0..n).any(|i| l[(i, i)] * l[(i, i)] < 1e-10 * diag_max)
        }
    }
}

pub(super) fn run(
    p: &QpProblem,
    tol: &SolverTolerances,
    budget: usize,
    start: Option<&DVector<f64>>,
) -> IpmOutcome {
    let n = p.dim();
    let ineq = Inequalities::new(p);
    let m = ineq.len();
    let pe = p.eq_mat.nrows();
    let h = ineq.h();
    let reg = if needs_regularization(&p.quad) {
        REGULARIZATION
    } else {
        0.0
    };

    let mut x = match start {
        Some(x0) => x0.clone(),
        None => DVector::from_fn(n, |i, _| {
            let (l, u) = (p.lower[i], p.upper[i]);
            if l.is_finite() && u.is_finite() {
                0.5 * (l + u)
            } else if l.is_finite() {
                l + 1.0
            } else if u.is_finite() {
                u - 1.0
            } else {
                0.0
            }
        }),
    };
    let gx = ineq.apply(&x);
    let mut s = DVector::from_fn(m, |k, _| (h[k] - gx[k]).max(1.0));
    let mut z = DVector::from_element(m, 1.0);
    let mut nu = DVector::zeros(pe);

    let mut iterations = 0;
    let mut acceptable_steps = 0;
    let mut best = (f64::INFINITY, x.clone(), z.clone(), nu.clone());

    for it in 0..=budget {
        iterations = it;
        // amax and f64::max both skip NaN, so test explicitly
        if !all_finite(&x) || !all_finite(&s) || !all_finite(&z) || !all_finite(&nu) { break;
        }
        let gx = ineq.apply(&x);
        let mut r_d = &p.quad * &x + &p.linear + ineq.apply_t(&z);
        if pe > 0 {
            r_d += p.eq_mat.transpose() * &nu;
        }
        let r_e = if pe > 0 {
            &p.eq_mat * &x - &p.eq_rhs
        } else {
            DVector::zeros(0)
        };
        let r_i = &gx + &s - &h;
        let mu = if m > 0 { s.dot(&z) / m as f64 } else { 0.0 };

        let stationarity = r_d.amax();
        let mut violation = if pe > 0 { r_e.amax() } else { 0.0 };
        let mut compl = 0.0f64;
        for k in 0..m {
            let gap = h[k] - gx[k];
            violation = violation.max(-gap);
            compl = compl.max((z[k] * gap.max(0.0)).abs());
        }
        let merit = (stationarity / tol.kkt_tol)
            .max(violation / tol.feas_tol)
            .max(compl / tol.kkt_tol)
            .max(mu / tol.opt_tol);
        if merit <= best.0 {
            best = (merit, x.clone(), z.clone(), nu.clone());
        }
        // once acceptable, keep polishing a few steps toward a much tighter target
        if merit <= 1.0 {
            acceptable_steps += 1;
        }
        if merit <= POLISH_TARGET || acceptable_steps > POLISH_STEPS { break;
        }
        if it == budget
            || !stationarity.is_finite()
            || x.amax() > DIVERGENCE
            || (m > 0 && z.amax() > DIVERGENCE)
        { break;
        }

        // Newton matrix [H E'; E -delta]; the diagonal shift grows if the
        // factorisation breaks down
        let d = DVector::from_fn(m, |k, _| z[k] / s[k]);
        let mut hmat = p.quad.clone();
        ineq.add_weighted_gram(&mut hmat, &d);
        let dim = n + pe;
        let corr_for = |r_sz: &DVector<f64>| DVector::from_fn(m, |k, _| (z[k] * r_i[k] - r_sz[k]) / s[k]);
        let rhs_for = |r_sz: &DVector<f64>| {
            let mut rhs = DVector::zeros(dim);
            rhs.rows_mut(0, n).copy_from(&(-&r_d - ineq.apply_t(&corr_for(r_sz))));
            if pe > 0 {
                rhs.rows_mut(n, pe).copy_from(&(-&r_e));
            }
            rhs
        };
        let recover = |sol: DVector<f64>, r_sz: &DVector<f64>| {
            let dx = sol.rows(0, n).into_owned();
            let dnu = sol.rows(n, pe).into_owned();
            let gdx = ineq.apply(&dx);
            let ds = -&r_i - &gdx;
            let dz = DVector::from_fn(m, |k, _| -(r_sz[k] + z[k] * ds[k]) / s[k]);
            (dx, ds, dz, dnu)
        };

        let r_sz_aff = s.component_mul(&z);
        let scale = hmat.diagonal().amax().max(1.0);
        if !scale.is_finite() || !all_finite(&d) { break;
        }
        // relative shift keeps the solve well conditioned along directions
        // with no curvature; residuals stay exact so the fixed point is unchanged
        let mut shift = reg.max(1e-12 * scale);
        let mut factored = None;
        while shift <= 1e-6 * scale {
            let mut kkt = DMatrix::zeros(dim, dim);
            kkt.view_mut((0, 0), (n, n)).copy_from(&hmat);
            for i in 0..n {
                kkt[(i, i)] += shift;
            }
            if pe > 0 {
                kkt.view_mut((n, 0), (pe, n)).copy_from(&p.eq_mat);
                kkt.view_mut((0, n), (n, pe)).copy_from(&p.eq_mat.transpose());
                for k in 0..pe {
                    kkt[(n + k, n + k)] = -1e-12;
                }
            }
            let lu = kkt.lu();
            match lu.solve(&rhs_for(&r_sz_aff)) {
                Some(sol) if all_finite(&sol) => {
                    factored = Some((lu, sol));
                    break;
                }
                _ => shift *= 100.0,
            }
        }
        let Some((lu, sol_aff)) = factored else { break;
        };

        // predictor
        let (dx_a, ds_a, dz_a, dnu_a) = recover(sol_aff, &r_sz_aff);
        let (dx, ds, dz, dnu) = if m > 0 {
            let a_aff = max_step(&s, &ds_a).min(max_step(&z, &dz_a)).min(1.0);
            let mu_aff = (&s + &ds_a * a_aff).dot(&(&z + &dz_a * a_aff)) / m as f64;
            let ratio = if mu > 0.0 { mu_aff / mu } else { 0.0 };
            let sigma = if ratio.is_finite() { ratio.powi(3).clamp(0.0, 1.0) } else { 0.0 };
            let step_of = |d: &(DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>)| {
                max_step(&s, &d.1).min(max_step(&z, &d.2))
            };
            let solve_with = |r_sz: DVector<f64>| match lu.solve(&rhs_for(&r_sz)) {
                Some(sol) if all_finite(&sol) => Some(recover(sol, &r_sz)),
                _ => None,
            };
            let corrected = solve_with(DVector::from_fn(m, |k, _| {
                s[k] * z[k] + ds_a[k] * dz_a[k] - sigma * mu
            }));
            // the second-order term can stall the iteration; fall back to the
            // plain centred direction when it allows a longer step
            let centred = solve_with(DVector::from_fn(m, |k, _| {
                s[k] * z[k] - sigma.max(0.1) * mu
            }));
            match (corrected, centred) {
                (Some(a), Some(b)) => {
                    if step_of(&a) >= step_of(&b) {
                        a
                    } else {
                        b
                    }
                }
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => break,
            }
        } else {
            (dx_a, ds_a, dz_a, dnu_a)
        };

        let alpha = if m > 0 {
            (STEP_FRACTION * max_step(&s, &ds).min(max_step(&z, &dz))).min(1.0)
        } else {
            1.0
        };
        x += &dx * alpha;
        s += &ds * alpha;
        z += &dz * alpha;
        if pe > 0 {
            nu += &dnu * alpha;
        }
    }

    let (merit, x, z, nu) = best;
    IpmOutcome {
        converged: merit <= 1.0,
        x,
        z,
        nu,
        iterations,
        regularization: reg,
        lower_idx: ineq.lower_idx,
        upper_idx: ineq.upper_idx,
    }
}

/// Minimal total constraint violation, found through an elastic linear
/// program in `(v, t, p, m)`:
/// `min t + sum(p) + sum(m)` with `G v - t <= h`, `E v + p - m = e`.
pub(super) fn phase_one(p: &QpProblem, tol: &SolverTolerances, budget: usize) -> f64 {
    let n = p.dim();
    let ineq = Inequalities::new(p);
    let mg = ineq.len();
    let pe = p.eq_mat.nrows();
    let nv = n + 1 + 2 * pe;

    let mut quad = DMatrix::zeros(nv, nv);
    for i in 0..n {
        quad[(i, i)] = 1e-9;
    }
    let mut linear = DVector::zeros(nv);
    for k in n..nv {
        linear[k] = 1.0;
    }
    let mut lower = DVector::from_element(nv, f64::NEG_INFINITY);
    for k in n..nv {
        lower[k] = 0.0;
    }
    let upper = DVector::from_element(nv, f64::INFINITY);

    let mut a = DMatrix::zeros(mg, nv);
    let h = ineq.h();
    for r in 0..ineq.m_general() {
        for c in 0..n {
            a[(r, c)] = p.ineq_mat[(r, c)];
        }
    }
    let m0 = ineq.m_general();
    for (k, &i) in ineq.lower_idx.iter().enumerate() {
        a[(m0 + k, i)] = -1.0;
    }
    let off = m0 + ineq.lower_idx.len();
    for (k, &i) in ineq.upper_idx.iter().enumerate() {
        a[(off + k, i)] = 1.0;
    }
    for r in 0..mg {
        a[(r, n)] = -1.0;
    }

    let mut e = DMatrix::zeros(pe, nv);
    for r in 0..pe {
        for c in 0..n {
            e[(r, c)] = p.eq_mat[(r, c)];
        }
        e[(r, n + 1 + r)] = 1.0;
        e[(r, n + 1 + pe + r)] = -1.0;
    }

    let elastic = QpProblem {
        quad,
        linear,
        lower,
        upper,
        ineq_mat: a,
        ineq_rhs: h,
        eq_mat: e,
        eq_rhs: p.eq_rhs.clone(),
    };
    let loose = SolverTolerances {
        kkt_tol: tol.kkt_tol.max(1e-9),
        ..*tol
    };
    let out = run(&elastic, &loose, budget.max(200), None);
    // the violation is measured on the original problem
    let v = out.x.rows(0, n).into_owned();
    p.max_violation(&v)
}
