use std::time::Instant;

use super::barycenter::{barycenter_direction, BarycenterDirection};
use super::dual::{solve_dense, solve_smo, DualProblem, DualSolution, Extra};
use super::{FairnessSpec, Orientation, SolverBackend, TrainConfig, TrainedModel, SUPPORT_EPS};
use crate::dataset::GroupedDataset;
use crate::error::{BindingConstraint, Error, Result};
use crate::kernels::{self, GramMatrix};

/// Relative size below which a feature-space direction counts as zero.
const VANISH: f64 = 1e-12;

pub fn train_vanilla(d: &GroupedDataset, cfg: &TrainConfig) -> Result<TrainedModel> {
    train(d, cfg, &FairnessSpec::none())
}

pub fn train_min_sep(d: &GroupedDataset, cfg: &TrainConfig, rho: f64) -> Result<TrainedModel> {
    train(d, cfg, &FairnessSpec::min_sep(rho))
}

pub fn train_eo(d: &GroupedDataset, cfg: &TrainConfig, epsilon: f64) -> Result<TrainedModel> {
    train(d, cfg, &FairnessSpec::eo(epsilon))
}

pub fn train_combined(d: &GroupedDataset, cfg: &TrainConfig, spec: &FairnessSpec) -> Result<TrainedModel> {
    if spec.min_sep_rho.is_none() || spec.eo_epsilon.is_none() {
        return Err(Error::input("combined training needs both rho and epsilon"));
    }
    train(d, cfg, spec)
}

/// Trains any of the four variants; which constraints apply is read from `spec`.
pub fn train(d: &GroupedDataset, cfg: &TrainConfig, spec: &FairnessSpec) -> Result<TrainedModel> {
    cfg.validate()?;
    let gram = kernels::self_gram(&cfg.kernel, d)?;
    train_with_gram(d, &gram, cfg, spec)
}

struct Directions {
    u: Option<BarycenterDirection>,
    v: Option<BarycenterDirection>,
}

fn directions(d: &GroupedDataset, cfg: &TrainConfig, spec: &FairnessSpec) -> Result<Directions> {
    let u = match spec.min_sep_rho {
        Some(_) => Some(barycenter_direction(d, cfg.targets.min_sep_label)?),
        None => None,
    };
    let v = match spec.eo_band() {
        Some(_) => Some(barycenter_direction(d, cfg.targets.eo_label)?),
        None => None,
    };
    Ok(Directions { u, v })
}

fn gram_scale(gram: &GramMatrix) -> f64 {
    (0..gram.n_rows())
        .map(|i| gram.get(i, i).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE)
}

/// Largest `|<w, u_a - u_b>|` reachable by any `w` obeying the EO band of
/// `spec` (if one is set). Infinite unless the negative-label barycenters
/// coincide in feature space or are pinned to a multiple of the
/// positive-label barycenter difference.
pub fn max_attainable_separation(
    d: &GroupedDataset,
    gram: &GramMatrix,
    cfg: &TrainConfig,
    spec: &FairnessSpec,
) -> Result<f64> {
    let u = barycenter_direction(d, cfg.targets.min_sep_label)?;
    let v = match spec.eo_band() {
        Some(_) => Some(barycenter_direction(d, cfg.targets.eo_label)?),
        None => None,
    };
    Ok(separation_limit(gram, &u, v.as_ref(), spec.eo_band()).0)
}

/// Returns the limit and the constraint responsible for it.
fn separation_limit(
    gram: &GramMatrix,
    u: &BarycenterDirection,
    v: Option<&BarycenterDirection>,
    eps: Option<f64>,
) -> (f64, BindingConstraint) {
    let thr = VANISH * gram_scale(gram);
    let ku = gram.mul_vec(&u.weights);
    let uu: f64 = u.weights.iter().zip(&ku).map(|(a, b)| a * b).sum();
    if uu <= thr {
        return (0.0, BindingConstraint::MinSeparation);
    }
    let (Some(v), Some(eps)) = (v, eps) else {
        return (f64::INFINITY, BindingConstraint::MinSeparation);
    };
    let vv = v.norm_sq(gram);
    if vv <= thr {
        return (f64::INFINITY, BindingConstraint::MinSeparation);
    }
    let uv: f64 = v.weights.iter().zip(&ku).map(|(a, b)| a * b).sum();
    let residual = uu - uv * uv / vv;
    if residual > thr {
        (f64::INFINITY, BindingConstraint::Joint)
    } else {
        ((uv / vv).abs() * eps, BindingConstraint::Joint)
    }
}

/// As [`train`] with a precomputed training Gram matrix.
pub fn train_with_gram(
    d: &GroupedDataset,
    gram: &GramMatrix,
    cfg: &TrainConfig,
    spec: &FairnessSpec,
) -> Result<TrainedModel> {
    cfg.validate()?;
    spec.validate()?;
    let n = d.len();
    if !gram.is_square() || gram.n_rows() != n {
        return Err(Error::input(format!(
            "Gram matrix is {}x{} for {n} samples",
            gram.n_rows(),
            gram.n_cols()
        )));
    }
    if d.label_count(1) == 0 || d.label_count(-1) == 0 {
        return Err(Error::Degenerate("training data contains a single class".into()));
    }
    let dirs = directions(d, cfg, spec)?;
    let eps = spec.eo_band();

    if let (Some(rho), Some(u)) = (spec.min_sep_rho, dirs.u.as_ref()) {
        let (limit, binding) = separation_limit(gram, u, dirs.v.as_ref(), eps);
        if rho > limit {
            return Err(Error::Infeasible {
                binding,
                requested: rho,
                max_separation: limit,
            });
        }
    }

    // a vanishing EO direction makes the band vacuous
    let thr = VANISH * gram_scale(gram);
    let eo_dir = dirs.v.clone().filter(|v| v.norm_sq(gram) > thr);

    let tol = &cfg.tolerances;
    let budget = tol.max_iter.unwrap_or(200 * n + 100_000);
    // the primal objective carries C times the dual gap, so aim well below kkt_tol
    let eps_pair = 1e-2 * tol.kkt_tol;
    let eps_extra = 0.5e-2 * tol.kkt_tol.min(tol.feas_tol);
    let solve = |p: &DualProblem<'_>, warm: Option<&DualSolution>| -> Result<DualSolution> {
        match cfg.backend {
            SolverBackend::Decomposition => solve_smo(p, eps_pair, eps_extra, budget, warm),
            SolverBackend::Dense => solve_dense(p, tol),
        }
    };

    let started = Instant::now();
    let base = DualProblem {
        gram,
        y: d.labels(),
        c: cfg.c,
        extras: Vec::new(),
    };
    let vanilla = solve(&base, None)?;

    let value = |dir: Option<&BarycenterDirection>, coef: &[f64]| {
        dir.map(|b| b.weights.iter().zip(gram.mul_vec(coef)).map(|(w, k)| w * k).sum::<f64>())
    };
    let u_val = value(dirs.u.as_ref(), &vanilla.coef);
    let v_val = value(eo_dir.as_ref(), &vanilla.coef);
    let eo_ok = match (v_val, eps) {
        (Some(x), Some(e)) => x.abs() <= e,
        _ => true,
    };
    let vanilla_orient = match (spec.min_sep_rho, u_val) {
        (Some(rho), Some(x)) => match cfg.orientation {
            Orientation::Auto if x >= rho => Some(Orientation::AMinusB),
            Orientation::Auto if -x >= rho => Some(Orientation::BMinusA),
            Orientation::AMinusB if x >= rho => Some(Orientation::AMinusB),
            Orientation::BMinusA if -x >= rho => Some(Orientation::BMinusA),
            _ => None,
        },
        _ => Some(default_orientation(cfg.orientation)),
    };

    let base_obj = base.primal_objective(&vanilla.coef, &vanilla.kc, vanilla.bias);
    if let (true, Some(o)) = (eo_ok, vanilla_orient) {
        let secs = started.elapsed().as_secs_f64();
        return Ok(assemble(d, cfg, spec, &dirs, vanilla, o, base_obj, 0.0, 0.0, secs));
    }

    let orientations = match (spec.min_sep_rho, cfg.orientation) {
        (Some(_), Orientation::Auto) => vec![Orientation::AMinusB, Orientation::BMinusA],
        (_, o) => vec![default_orientation(o)],
    };

    let mut best: Option<(Orientation, DualSolution, f64)> = None;
    let mut extra_iterations = vanilla.iterations;
    for o in orientations {
        let mut extras = Vec::new();
        if let (Some(rho), Some(u)) = (spec.min_sep_rho, dirs.u.as_ref()) {
            let dir = u.weights.iter().map(|w| o.sign() * w).collect();
            extras.push(Extra::new(gram, dir, -rho));
        }
        if let (Some(e), Some(v)) = (eps, eo_dir.as_ref()) {
            extras.push(Extra::new(gram, v.weights.iter().map(|w| -w).collect(), e));
            extras.push(Extra::new(gram, v.weights.clone(), e));
        }
        let p = DualProblem {
            gram,
            y: d.labels(),
            c: cfg.c,
            extras,
        };
        let sol = solve(&p, Some(&vanilla))?;
        extra_iterations += sol.iterations;
        let obj = p.primal_objective(&sol.coef, &sol.kc, sol.bias);
        if best.as_ref().is_none_or(|b| obj < b.2) {
            best = Some((o, sol, obj));
        }
    }
    let (o, mut sol, obj) = best.expect("at least one orientation is solved");
    sol.iterations = extra_iterations;
    let has_u = spec.min_sep_rho.is_some();
    let mu = if has_u { sol.extras[0] } else { 0.0 };
    let eo_mult = if eps.is_some() && eo_dir.is_some() {
        let off = usize::from(has_u);
        sol.extras[off + 1] - sol.extras[off]
    } else {
        0.0
    };
    let secs = started.elapsed().as_secs_f64();
    Ok(assemble(d, cfg, spec, &dirs, sol, o, obj, mu, eo_mult, secs))
}

fn default_orientation(o: Orientation) -> Orientation {
    match o {
        Orientation::Auto => Orientation::AMinusB,
        other => other,
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    d: &GroupedDataset,
    cfg: &TrainConfig,
    spec: &FairnessSpec,
    dirs: &Directions,
    sol: DualSolution,
    orientation: Orientation,
    objective: f64,
    mu: f64,
    eo_multiplier: f64,
    solve_seconds: f64,
) -> TrainedModel {
    let inner = |b: &BarycenterDirection| -> f64 { b.weights.iter().zip(&sol.kc).map(|(w, k)| w * k).sum() };
    // report the separation even when the constraint was not requested
    let u = dirs
        .u
        .clone()
        .or_else(|| barycenter_direction(d, cfg.targets.min_sep_label).ok());
    let v = dirs
        .v
        .clone()
        .or_else(|| barycenter_direction(d, cfg.targets.eo_label).ok());
    let constraint_value = u.as_ref().map(|b| orientation.sign() * inner(b));
    let eo_value = v.as_ref().map(inner);
    let support_indices: Vec<usize> = sol
        .coef
        .iter()
        .enumerate()
        .filter(|(_, c)| c.abs() > SUPPORT_EPS)
        .map(|(i, _)| i)
        .collect();
    TrainedModel {
        support_vectors: d.features().select(&support_indices),
        support_indices,
        coefficients: sol.coef,
        bias: sol.bias,
        mu,
        eo_multiplier,
        kernel: cfg.kernel,
        c: cfg.c,
        training_ref: d.fingerprint(),
        fairness: *spec,
        orientation,
        constraint_value,
        eo_value,
        objective,
        kkt_residual: sol.kkt_residual,
        iterations: sol.iterations,
        converged: sol.converged,
        solve_seconds,
    }
}
