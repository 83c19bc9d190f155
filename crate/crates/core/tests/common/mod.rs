#![allow(dead_code)]

use fairsep::kernels::GramMatrix;
use fairsep::qpsolve::{self, QpProblem, QpStatus, SolverTolerances};
use fairsep::{Group, GroupedDataset};
use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reference solution of the primal over `(c, b, zeta)`.
pub struct Reference {
    pub objective: f64,
    pub coef: Vec<f64>,
    pub bias: f64,
    pub status: QpStatus,
}

/// `+1/n_a` on `(label, a)` samples, `-1/n_b` on `(label, b)` samples.
pub fn cell_weights(d: &GroupedDataset, label: i8) -> Vec<f64> {
    let na = d.count(Group::A, label) as f64;
    let nb = d.count(Group::B, label) as f64;
    (0..d.len())
        .map(|i| match (d.labels()[i] == label, d.groups()[i]) {
            (true, Group::A) => 1.0 / na,
            (true, Group::B) => -1.0 / nb,
            _ => 0.0,
        })
        .collect()
}

pub fn kdot(gram: &GramMatrix, coef: &[f64], w: &[f64]) -> f64 {
    let n = coef.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += coef[i] * gram.get(i, j) * w[j];
        }
    }
    s
}

/// Minimises `c'Kc + C sum zeta` subject to the margin constraints, an
/// optional `sigma <w, u> >= rho` and an optional `|<w, v>| <= eps`.
pub fn primal_reference(
    d: &GroupedDataset,
    gram: &GramMatrix,
    c_pen: f64,
    min_sep: Option<(&[f64], f64, f64)>,
    eo: Option<(&[f64], f64)>,
) -> Reference {
    let n = d.len();
    let nv = 2 * n + 1;
    let mut quad = DMatrix::zeros(nv, nv);
    for i in 0..n {
        for j in 0..n {
            quad[(i, j)] = gram.get(i, j) + gram.get(j, i);
        }
    }
    let mut linear = DVector::zeros(nv);
    let mut lower = DVector::from_element(nv, f64::NEG_INFINITY);
    let upper = DVector::from_element(nv, f64::INFINITY);
    for i in 0..n {
        linear[n + 1 + i] = c_pen;
        lower[n + 1 + i] = 0.0;
    }
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..n {
        let y = f64::from(d.labels()[i]);
        let mut r = vec![0.0; nv];
        for j in 0..n {
            r[j] = -y * gram.get(i, j);
        }
        r[n] = -y;
        r[n + 1 + i] = -1.0;
        rows.push((r, -1.0));
    }
    let kw = |w: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..n).map(|j| gram.get(i, j) * w[j]).sum()).collect() };
    if let Some((u, rho, sigma)) = min_sep {
        let ku = kw(u);
        let mut r = vec![0.0; nv];
        for j in 0..n {
            r[j] = -sigma * ku[j];
        }
        rows.push((r, -rho));
    }
    if let Some((v, eps)) = eo {
        let kv = kw(v);
        for s in [1.0, -1.0] {
            let mut r = vec![0.0; nv];
            for j in 0..n {
                r[j] = s * kv[j];
            }
            rows.push((r, eps));
        }
    }
    let a = DMatrix::from_fn(rows.len(), nv, |i, j| rows[i].0[j]);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let p = QpProblem::new(quad, linear)
        .unwrap()
        .with_bounds(lower, upper)
        .unwrap()
        .with_inequalities(a, b)
        .unwrap();
    let tol = SolverTolerances {
        feas_tol: 1e-9,
        kkt_tol: 1e-9,
        opt_tol: 1e-9,
        max_iter: Some(500),
    };
    let s = qpsolve::solve(&p, &tol).unwrap();
    Reference {
        objective: s.objective,
        coef: s.v.iter().take(n).copied().collect(),
        bias: s.v[n],
        status: s.status,
    }
}

/// Best of both orientations; `None` when neither is feasible.
pub fn min_sep_reference(
    d: &GroupedDataset,
    gram: &GramMatrix,
    c_pen: f64,
    rho: f64,
    eo: Option<(&[f64], f64)>,
) -> Option<Reference> {
    let u = cell_weights(d, -1);
    let mut best: Option<Reference> = None;
    for sigma in [1.0, -1.0] {
        let r = primal_reference(d, gram, c_pen, Some((&u, rho, sigma)), eo);
        if r.status == QpStatus::Infeasible {
            continue;
        }
        if best.as_ref().is_none_or(|b| r.objective < b.objective) {
            best = Some(r);
        }
    }
    best
}

/// Small random dataset with every (group, label) cell populated.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> GroupedDataset {
    assert!(n >= 4);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    for i in 0..n {
        let label: i8 = if i % 2 == 0 { 1 } else { -1 };
        let group = if (i / 2) % 2 == 0 { Group::A } else { Group::B };
        let shift = if label > 0 { 0.8 } else { -0.8 };
        let row: Vec<f64> = (0..dim)
            .map(|k| rng.random_range(-1.0..1.0) + if k == 0 { shift } else { 0.0 })
            .collect();
        rows.push(row);
        y.push(label);
        s.push(group);
    }
    GroupedDataset::from_rows(&rows, y, s).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
