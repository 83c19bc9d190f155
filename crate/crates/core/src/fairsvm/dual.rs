//! Dual of the soft-margin SVM with extra linear constraints on `w`.
//!
//! Primal, for a kernel expansion `w = sum_i c_i phi(x_i)`:
//!
//! ```text
//!     min  ||w||^2 + C sum_i zeta_i
//!     s.t. y_i (<w, phi(x_i)> + b) >= 1 - zeta_i,  zeta_i >= 0
//!          <w, d_t> >= r_t           for every extra constraint t
//! ```
//!
//! Each extra constraint contributes a nonnegative multiplier `z_t` and the
//! stationarity condition gives `c = (alpha * y + sum_t z_t d_t) / 2`. The
//! dual is minimised by a pairwise decomposition method on `alpha` (which
//! carries the single equality `y' alpha = 0`) interleaved with exact
//! coordinate steps on the `z_t`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::GramMatrix;
use crate::qpsolve::{self, QpProblem, QpStatus, SolverTolerances};

const TAU: f64 = 1e-12;

/// One extra constraint `<w, dir> >= -cost` expressed in coefficient space.
#[derive(Debug, Clone)]
pub(crate) struct Extra {
    pub dir: Vec<f64>,
    /// `K dir`
    pub kdir: Vec<f64>,
    /// Linear dual cost; the constraint reads `<w, dir> + cost >= 0`.
    pub cost: f64,
}

impl Extra {
    pub fn new(gram: &GramMatrix, dir: Vec<f64>, cost: f64) -> Self {
        let kdir = gram.mul_vec(&dir);
        Extra { dir, kdir, cost }
    }
}

pub(crate) struct DualProblem<'a> {
    pub gram: &'a GramMatrix,
    pub y: &'a [i8],
    pub c: f64,
    pub extras: Vec<Extra>,
}

#[derive(Debug, Clone)]
pub(crate) struct DualSolution {
    pub alpha: Vec<f64>,
    pub extras: Vec<f64>,
    pub coef: Vec<f64>,
    /// `K coef`
    pub kc: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
}

impl DualProblem<'_> {
    fn n(&self) -> usize {
        self.y.len()
    }

    fn extra_gram(&self) -> Vec<Vec<f64>> {
        self.extras
            .iter()
            .map(|s| {
                self.extras
                    .iter()
                    .map(|t| s.dir.iter().zip(&t.kdir).map(|(a, b)| a * b).sum())
                    .collect()
            })
            .collect()
    }

    fn coef_from(&self, alpha: &[f64], z: &[f64]) -> Vec<f64> {
        let mut coef: Vec<f64> = alpha
            .iter()
            .zip(self.y)
            .map(|(a, &y)| 0.5 * a * f64::from(y))
            .collect();
        for (e, &zt) in self.extras.iter().zip(z) {
            if zt != 0.0 {
                for (c, d) in coef.iter_mut().zip(&e.dir) {
                    *c += 0.5 * zt * d;
                }
            }
        }
        coef
    }

    /// Primal objective `c'Kc + C sum hinge` at coefficients and bias.
    pub fn primal_objective(&self, coef: &[f64], kc: &[f64], bias: f64) -> f64 {
        let quad: f64 = coef.iter().zip(kc).map(|(a, b)| a * b).sum();
        let hinge: f64 = kc
            .iter()
            .zip(self.y)
            .map(|(f, &y)| (1.0 - f64::from(y) * (f + bias)).max(0.0))
            .sum();
        quad + self.c * hinge
    }
}

#[inline]
fn in_up(y: i8, a: f64, c: f64) -> bool {
    (y > 0 && a < c) || (y < 0 && a > 0.0)
}

#[inline]
fn in_low(y: i8, a: f64, c: f64) -> bool {
    (y > 0 && a > 0.0) || (y < 0 && a < c)
}

/// Decomposition solver. `warm` must be a solution of the same problem
/// without extras (its `alpha` is then dual feasible with `z = 0`).
pub(crate) fn solve_smo(
    p: &DualProblem<'_>,
    eps: f64,
    eps_extra: f64,
    budget: usize,
    warm: Option<&DualSolution>,
) -> Result<DualSolution> {
    let n = p.n();
    let k = p.gram;
    let c_box = p.c;
    let ne = p.extras.len();
    let eg = p.extra_gram();

    let (mut alpha, mut kc) = match warm {
        Some(w) if w.extras.iter().all(|&z| z == 0.0) => (w.alpha.clone(), w.kc.clone()),
        _ => (vec![0.0; n], vec![0.0; n]),
    };
    let mut z = vec![0.0; ne];
    let mut coef = p.coef_from(&alpha, &z);
    let mut g_extra: Vec<f64> = p
        .extras
        .iter()
        .map(|e| e.kdir.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>() + e.cost)
        .collect();

    let mut iterations = 0;
    let mut converged = false;
    let mut refreshed_at = usize::MAX;

    while iterations < budget {
        // maximal violating pair on alpha, with F_i = y_i - (Kc)_i
        let mut i_sel = usize::MAX;
        let mut f_max = f64::NEG_INFINITY;
        let mut f_min = f64::INFINITY;
        for t in 0..n {
            let f = f64::from(p.y[t]) - kc[t];
            if in_up(p.y[t], alpha[t], c_box) && f > f_max {
                f_max = f;
                i_sel = t;
            }
            if in_low(p.y[t], alpha[t], c_box) && f < f_min {
                f_min = f;
            }
        }
        let gap = if i_sel == usize::MAX || f_min == f64::INFINITY {
            0.0
        } else {
            f_max - f_min
        };

        let mut t_sel = usize::MAX;
        let mut viol_extra = 0.0f64;
        for t in 0..ne {
            let v = if z[t] > 0.0 {
                g_extra[t].abs()
            } else {
                (-g_extra[t]).max(0.0)
            };
            if v > viol_extra {
                viol_extra = v;
                t_sel = t;
            }
        }

        if gap <= eps && viol_extra <= eps_extra {
            if refreshed_at == iterations {
                converged = true;
                break;
            }
            // remove accumulated drift before accepting
            coef = p.coef_from(&alpha, &z);
            kc = k.mul_vec(&coef);
            for (t, e) in p.extras.iter().enumerate() {
                g_extra[t] = e.kdir.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>() + e.cost;
            }
            refreshed_at = iterations;
            continue;
        }

        if t_sel != usize::MAX && viol_extra / eps_extra >= gap / eps {
            let qtt = 0.5 * eg[t_sel][t_sel];
            if qtt <= 1e-14 {
                return Err(Error::Degenerate(
                    "fairness direction vanishes in feature space".into(),
                ));
            }
            let new = (z[t_sel] - g_extra[t_sel] / qtt).max(0.0);
            let delta = new - z[t_sel];
            z[t_sel] = new;
            let e = &p.extras[t_sel];
            for i in 0..n {
                coef[i] += 0.5 * delta * e.dir[i];
                kc[i] += 0.5 * delta * e.kdir[i];
            }
            for s in 0..ne {
                g_extra[s] += 0.5 * delta * eg[s][t_sel];
            }
        } else {
            let i = i_sel;
            let ki = k.row(i);
            let kii = ki[i];
            let mut j_sel = usize::MAX;
            let mut best = f64::INFINITY;
            for t in 0..n {
                if !in_low(p.y[t], alpha[t], c_box) {
                    continue;
                }
                let f = f64::from(p.y[t]) - kc[t];
                let b = f_max - f;
                if b <= 0.0 {
                    continue;
                }
                let mut a = 0.5 * (kii + k.get(t, t) - 2.0 * ki[t]);
                if a <= 0.0 {
                    a = TAU;
                }
                let score = -(b * b) / a;
                if score < best {
                    best = score;
                    j_sel = t;
                }
            }
            if j_sel == usize::MAX {
                // nothing below f_max in I_low; the gap test above would have fired
                break;
            }
            let j = j_sel;
            let kj = k.row(j);
            let b = f_max - (f64::from(p.y[j]) - kc[j]);
            let mut a = 0.5 * (kii + kj[j] - 2.0 * ki[j]);
            if a <= 0.0 {
                a = TAU;
            }
            // alpha_i += y_i t, alpha_j -= y_j t
            let room_i = if p.y[i] > 0 { c_box - alpha[i] } else { alpha[i] };
            let room_j = if p.y[j] > 0 { alpha[j] } else { c_box - alpha[j] };
            let step = (b / a).min(room_i).min(room_j);
            alpha[i] += f64::from(p.y[i]) * step;
            alpha[j] -= f64::from(p.y[j]) * step;
            if step == room_i {
                alpha[i] = if p.y[i] > 0 { c_box } else { 0.0 };
            }
            if step == room_j {
                alpha[j] = if p.y[j] > 0 { 0.0 } else { c_box };
            }
            // coefficient change is step/2 on i and -step/2 on j
            let h = 0.5 * step;
            coef[i] += h;
            coef[j] -= h;
            for t in 0..n {
                kc[t] += h * (ki[t] - kj[t]);
            }
            for (s, e) in p.extras.iter().enumerate() {
                g_extra[s] += h * (e.kdir[i] - e.kdir[j]);
            }
        }
        iterations += 1;
    }

    if !converged {
        coef = p.coef_from(&alpha, &z);
        kc = k.mul_vec(&coef);
    }

    let (bias, gap) = bias_and_gap(p.y, &alpha, &kc, c_box);
    let mut viol_extra = 0.0f64;
    for (t, e) in p.extras.iter().enumerate() {
        let g = e.kdir.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>() + e.cost;
        let v = if z[t] > 0.0 { g.abs() } else { (-g).max(0.0) };
        viol_extra = viol_extra.max(v);
    }
    Ok(DualSolution {
        alpha,
        extras: z,
        coef,
        kc,
        bias,
        iterations,
        kkt_residual: gap.max(viol_extra),
        converged,
    })
}

/// Bias from free multipliers (midpoint of the admissible interval when
/// none are free) and the final pair gap.
fn bias_and_gap(y: &[i8], alpha: &[f64], kc: &[f64], c_box: f64) -> (f64, f64) {
    let mut f_max = f64::NEG_INFINITY;
    let mut f_min = f64::INFINITY;
    let mut free_sum = 0.0;
    let mut free_n = 0usize;
    for t in 0..y.len() {
        let f = f64::from(y[t]) - kc[t];
        if in_up(y[t], alpha[t], c_box) {
            f_max = f_max.max(f);
        }
        if in_low(y[t], alpha[t], c_box) {
            f_min = f_min.min(f);
        }
        if alpha[t] > 0.0 && alpha[t] < c_box {
            free_sum += f;
            free_n += 1;
        }
    }
    let gap = if f_max.is_finite() && f_min.is_finite() {
        (f_max - f_min).max(0.0)
    } else {
        0.0
    };
    let bias = if free_n > 0 {
        free_sum / free_n as f64
    } else if f_max.is_finite() && f_min.is_finite() {
        0.5 * (f_max + f_min)
    } else if f_max.is_finite() {
        f_max
    } else {
        f_min
    };
    (bias, gap)
}

/// Solves the same dual with the dense interior-point solver. The bias is
/// read off the multiplier of `y' alpha = 0`.
pub(crate) fn solve_dense(p: &DualProblem<'_>, tol: &SolverTolerances) -> Result<DualSolution> {
    let n = p.n();
    let ne = p.extras.len();
    let nv = n + ne;
    // G = [diag(y) | dir_1 | ... ], Q = G'KG / 2
    let mut g = DMatrix::zeros(n, nv);
    for i in 0..n {
        g[(i, i)] = f64::from(p.y[i]);
    }
    for (t, e) in p.extras.iter().enumerate() {
        for i in 0..n {
            g[(i, n + t)] = e.dir[i];
        }
    }
    let kmat = p.gram.to_dmatrix();
    let mut quad = g.transpose() * &kmat * &g * 0.5;
    quad = (&quad + quad.transpose()) * 0.5;
    let mut linear = DVector::from_element(nv, -1.0);
    for (t, e) in p.extras.iter().enumerate() {
        linear[n + t] = e.cost;
    }
    let mut lower = DVector::zeros(nv);
    let mut upper = DVector::from_element(nv, f64::INFINITY);
    for i in 0..n {
        upper[i] = p.c;
        lower[i] = 0.0;
    }
    let mut eq = DMatrix::zeros(1, nv);
    for i in 0..n {
        eq[(0, i)] = f64::from(p.y[i]);
    }
    let qp = QpProblem::new(quad, linear)?
        .with_bounds(lower, upper)?
        .with_equalities(eq, DVector::zeros(1))?;
    let sol = qpsolve::solve(&qp, tol)?;
    if sol.status == QpStatus::Infeasible {
        return Err(Error::Degenerate("dual problem reported infeasible".into()));
    }
    let alpha: Vec<f64> = (0..n).map(|i| sol.v[i].clamp(0.0, p.c)).collect();
    let z: Vec<f64> = (0..ne).map(|t| sol.v[n + t].max(0.0)).collect();
    let coef = p.coef_from(&alpha, &z);
    let kc = p.gram.mul_vec(&coef);
    Ok(DualSolution {
        alpha,
        extras: z,
        coef,
        kc,
        bias: sol.multipliers.eq[0],
        iterations: sol.iterations,
        kkt_residual: sol.kkt_residual,
        converged: sol.status == QpStatus::Optimal,
    })
}
