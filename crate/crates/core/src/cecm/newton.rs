use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::model::CubatureModel;
use super::rule::ContinuousRule;
use crate::basis::BasisValues;
use crate::error::{Error, Result};
use crate::linalg::sparse_basic_solve;
use crate::svdkit::svd_truncated;

/// Parameters of the sparsification solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Newton iteration budget per call.
    pub k_max: usize,
    /// Absolute tolerance on `‖r‖`.
    pub eps_nr: f64,
    /// A step is rejected once this many weights are negative.
    pub n_neg: usize,
    /// Weight-reduction steps in the second stage.
    pub n_steps: usize,
    /// Relative truncation of the Jacobian SVD.
    pub eps_svd_jac: f64,
    /// Refine the final rule with extra Newton steps on all points.
    #[serde(default = "default_polish")]
    pub polish: bool,
}

fn default_polish() -> bool {
    true
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            k_max: 40,
            eps_nr: 1e-8,
            n_neg: 5,
            n_steps: 20,
            eps_svd_jac: 1e-10,
            polish: true,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 {
            return Err(Error::param("k_max", "must be positive"));
        }
        if !(self.eps_nr > 0.0) {
            return Err(Error::param("eps_nr", "must be positive"));
        }
        if self.n_neg == 0 {
            return Err(Error::param("n_neg", "must be positive"));
        }
        if self.n_steps == 0 {
            return Err(Error::param("n_steps", "must be positive"));
        }
        if !(self.eps_svd_jac > 0.0 && self.eps_svd_jac < 1.0) {
            return Err(Error::param("eps_svd_jac", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Outcome of one constrained Newton solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub converged: bool,
    pub iterations: usize,
    /// Points whose positions were frozen after leaving the domain.
    pub frozen: Vec<usize>,
}

/// `Ĵ = [J_X(L) | J_w(S)]` where column block `g` of `J_X` is `w_g·∇u(x_g)ᵀ` and column `g` of `J_w` is `u(x_g)`.
pub fn jacobian(
    rule: &ContinuousRule,
    vals: &[Option<BasisValues>],
    l_idx: &[usize],
    s_idx: &[usize],
    p: usize,
) -> DMatrix<f64> {
    let d = rule.dim;
    let mut j = DMatrix::zeros(p, d * l_idx.len() + s_idx.len());
    for (k, &g) in l_idx.iter().enumerate() {
        let v = vals[g].as_ref().expect("active point evaluated");
        for i in 0..d {
            let mut col = j.column_mut(d * k + i);
            col.copy_from(&v.grad.row(i).transpose());
            col.scale_mut(rule.weights[g]);
        }
    }
    let off = d * l_idx.len();
    for (k, &g) in s_idx.iter().enumerate() {
        let v = vals[g].as_ref().expect("active point evaluated");
        j.column_mut(off + k).copy_from(&v.u);
    }
    j
}

/// Evaluate the basis at all active points and return the residual `u(X)ᵀ·w − b`.
pub(crate) fn evaluate_active(
    rule: &ContinuousRule,
    model: &CubatureModel,
) -> Result<(Vec<Option<BasisValues>>, DVector<f64>)> {
    let mut vals = vec![None; rule.len()];
    let mut r = -model.b().clone();
    for g in rule.active() {
        let v = model.evaluate_in(rule.element_of[g], rule.point(g))?;
        r.axpy(rule.weights[g], &v.u, 1.0);
        vals[g] = Some(v);
    }
    Ok((vals, r))
}

/// Modified Newton solve of `u(X)ᵀ·w = b` with the weight of point `r_idx` held fixed.
///
/// Positions and weights of the other active points are unknowns. Points that a step would
/// carry outside the domain are returned to their previous position and kept fixed (only
/// their weight stays free) for the rest of the call. On failure `rule` holds the last
/// feasible iterate; callers restore their own copy.
pub fn newton_mod(
    rule: &mut ContinuousRule,
    r_idx: usize,
    params: &SolverParams,
    model: &CubatureModel,
) -> Result<NewtonOutcome> {
    let d = rule.dim;
    let p = model.b().len();
    let mut l_idx: Vec<usize> = rule.active().into_iter().filter(|&g| g != r_idx).collect();
    let mut p_idx: Vec<usize> = Vec::new();
    let mut k = 1usize;
    let fail = |k: usize, p_idx: &Vec<usize>| NewtonOutcome {
        converged: false,
        iterations: k - 1,
        frozen: p_idx.clone(),
    };
    while k <= params.k_max {
        let (vals, r) = evaluate_active(rule, model)?;
        if r.norm() <= params.eps_nr {
            return Ok(NewtonOutcome {
                converged: true,
                iterations: k - 1,
                frozen: p_idx,
            });
        }
        let mut feasible = false;
        let mut outside_hits = vec![0usize; rule.len()];
        while k <= params.k_max && !feasible {
            let s_idx: Vec<usize> = l_idx.iter().chain(p_idx.iter()).copied().collect();
            let jhat = jacobian(rule, &vals, &l_idx, &s_idx, p);
            let svd = svd_truncated(&jhat, params.eps_svd_jac * jhat.norm(), None)?;
            let n_dofs = (d + 1) * l_idx.len() + p_idx.len();
            if n_dofs < svd.rank || svd.rank == 0 {
                return Ok(fail(k, &p_idx));
            }
            let mut c = -(svd.left.transpose() * &r);
            for (ci, s) in c.iter_mut().zip(svd.singular.iter()) {
                *ci /= s;
            }
            let g_mat = svd.right.transpose();
            let dq = sparse_basic_solve(&g_mat, &c);

            let mut trial = rule.clone();
            for (kk, &g) in l_idx.iter().enumerate() {
                for i in 0..d {
                    trial.point_mut(g)[i] += dq[d * kk + i];
                }
            }
            let off = d * l_idx.len();
            for (kk, &g) in s_idx.iter().enumerate() {
                trial.weights[g] += dq[off + kk];
            }
            let m_neg = trial.weights.iter().filter(|w| **w < 0.0).count();
            if m_neg >= params.n_neg {
                return Ok(fail(k, &p_idx));
            }
            let mut outside = Vec::new();
            for (kk, &g) in l_idx.iter().enumerate() {
                let step: f64 = (0..d).map(|i| dq[d * kk + i].powi(2)).sum::<f64>().sqrt();
                if step == 0.0 {
                    continue;
                }
                let hint = rule.element_of[g];
                let radius = step + model.mesh.circumradius(hint);
                match model.mesh.locate(trial.point(g), Some(hint), radius, model.locate) {
                    Some(e) => trial.element_of[g] = e,
                    None => outside.push(g),
                }
            }
            if outside.is_empty() {
                *rule = trial;
                feasible = true;
            } else {
                for &g in &outside {
                    outside_hits[g] += 1;
                    if outside_hits[g] >= 2 {
                        return Ok(fail(k, &p_idx));
                    }
                }
                l_idx.retain(|g| !outside.contains(g));
                p_idx.extend(outside);
            }
            k += 1;
        }
        if !feasible {
            break;
        }
    }
    Ok(fail(k.min(params.k_max + 1), &p_idx))
}

/// Newton refinement of a converged rule with every active point free.
///
/// Steps are kept only while the residual at least halves and the rule stays inside the
/// domain with positive weights. Returns the number of accepted steps.
pub fn polish(rule: &mut ContinuousRule, params: &SolverParams, model: &CubatureModel) -> Result<usize> {
    let d = rule.dim;
    let p = model.b().len();
    let (mut vals, mut r) = evaluate_active(rule, model)?;
    let mut accepted = 0;
    for _ in 0..params.k_max {
        let rn = r.norm();
        if rn == 0.0 {
            break;
        }
        let idx = rule.active();
        let jhat = jacobian(rule, &vals, &idx, &idx, p);
        let svd = svd_truncated(&jhat, params.eps_svd_jac * jhat.norm(), None)?;
        if svd.rank == 0 {
            break;
        }
        let mut c = -(svd.left.transpose() * &r);
        for (ci, s) in c.iter_mut().zip(svd.singular.iter()) {
            *ci /= s;
        }
        let dq = sparse_basic_solve(&svd.right.transpose(), &c);
        let mut trial = rule.clone();
        for (kk, &g) in idx.iter().enumerate() {
            for i in 0..d {
                trial.point_mut(g)[i] += dq[d * kk + i];
            }
            trial.weights[g] += dq[d * idx.len() + kk];
        }
        if trial.weights.iter().any(|w| *w < 0.0) {
            break;
        }
        let mut inside = true;
        for (kk, &g) in idx.iter().enumerate() {
            let step: f64 = (0..d).map(|i| dq[d * kk + i].powi(2)).sum::<f64>().sqrt();
            let hint = rule.element_of[g];
            match model.mesh.locate(trial.point(g), Some(hint), step + model.mesh.circumradius(hint), model.locate) {
                Some(e) => trial.element_of[g] = e,
                None => {
                    inside = false;
                    break;
                }
            }
        }
        if !inside {
            break;
        }
        let (tv, tr) = evaluate_active(&trial, model)?;
        if !(tr.norm() <= 0.5 * rn) {
            break;
        }
        *rule = trial;
        vals = tv;
        r = tr;
        accepted += 1;
    }
    Ok(accepted)
}
