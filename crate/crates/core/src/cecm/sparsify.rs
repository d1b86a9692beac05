use super::model::CubatureModel;
use super::newton::{evaluate_active, newton_mod, polish, SolverParams};
use super::rule::{ContinuousRule, Elimination};
use crate::error::Result;

/// Outcome of a weight-reduction attempt on one point.
#[derive(Debug, Clone)]
pub struct ReductionOutcome {
    pub converged: bool,
    pub rule: ContinuousRule,
    pub newton_iters: usize,
}

/// Drive `w[r_idx]` to zero in `n` equal decrements, re-solving after each one.
///
/// On failure the input rule is returned unchanged.
pub fn solve_res(
    r_idx: usize,
    old: &ContinuousRule,
    n: usize,
    params: &SolverParams,
    model: &CubatureModel,
) -> Result<ReductionOutcome> {
    let n = n.max(1);
    let w_ref = old.weights[r_idx];
    let mut rule = old.clone();
    let mut iters = 0;
    for step in 1..=n {
        rule.weights[r_idx] = if step == n {
            0.0
        } else {
            w_ref * (1.0 - step as f64 / n as f64)
        };
        let out = newton_mod(&mut rule, r_idx, params, model)?;
        iters += out.iterations;
        if !out.converged {
            return Ok(ReductionOutcome {
                converged: false,
                rule: old.clone(),
                newton_iters: iters,
            });
        }
    }
    Ok(ReductionOutcome {
        converged: true,
        rule,
        newton_iters: iters,
    })
}

/// Remove one point: try candidates in ascending order of `w_i·‖u(x_i)‖`.
///
/// Returns the sparser rule and its counters, or `None` when every candidate fails.
pub fn make_one_zero(
    old: &ContinuousRule,
    n: usize,
    params: &SolverParams,
    model: &CubatureModel,
) -> Result<Option<(ContinuousRule, Elimination)>> {
    let active = old.active();
    if active.len() < 2 {
        return Ok(None);
    }
    let (vals, _) = evaluate_active(old, model)?;
    let mut scored: Vec<(usize, f64)> = active
        .iter()
        .map(|&g| (g, old.weights[g] * vals[g].as_ref().expect("evaluated").u.norm()))
        .collect();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    for (t, &(g, _)) in scored.iter().enumerate() {
        let out = solve_res(g, old, n, params, model)?;
        if out.converged {
            return Ok(Some((
                out.rule,
                Elimination {
                    candidate_trials: t + 1,
                    newton_iters: out.newton_iters,
                },
            )));
        }
    }
    Ok(None)
}

/// Result of [`sparsify`].
#[derive(Debug, Clone)]
pub struct SparsifyOutcome {
    /// Last rule with only positive weights.
    pub rule: ContinuousRule,
    /// Counters of the eliminations leading to `rule`.
    pub eliminations: Vec<Elimination>,
    /// Intermediate rules after each of those eliminations.
    pub trace: Vec<ContinuousRule>,
    /// Some elimination succeeded but none of the resulting rules had only positive weights;
    /// `rule` is then the input.
    pub no_positive_intermediate: bool,
}

/// Eliminate points one at a time until no candidate succeeds.
pub fn sparsify(
    start: &ContinuousRule,
    n: usize,
    params: &SolverParams,
    model: &CubatureModel,
) -> Result<SparsifyOutcome> {
    let mut current = start.clone();
    let mut elims = Vec::new();
    let mut trace = Vec::new();
    let mut best = SparsifyOutcome {
        rule: start.clone(),
        eliminations: Vec::new(),
        trace: Vec::new(),
        no_positive_intermediate: false,
    };
    while let Some((next, el)) = make_one_zero(&current, n, params, model)? {
        current = next;
        elims.push(el);
        trace.push(current.clone());
        if current.all_active_positive() {
            best.rule = current.clone();
            best.eliminations = elims.clone();
            best.trace = trace.clone();
        }
    }
    best.no_positive_intermediate = !elims.is_empty() && best.eliminations.is_empty();
    Ok(best)
}

/// Result of the two-stage sparsification.
#[derive(Debug, Clone)]
pub struct CecmOutcome {
    pub rule: ContinuousRule,
    pub eliminations: Vec<Elimination>,
    pub trace: Vec<ContinuousRule>,
    /// Points removed by each stage.
    pub stage_removed: [usize; 2],
    pub residual_norm: f64,
    pub no_positive_intermediate: bool,
}

/// Two-stage continuous sparsification of a DECM rule: single-shot eliminations first,
/// then gradual ones with `params.n_steps` decrements. The result is optionally refined by
/// [`polish`].
pub fn sparsify_global(
    start: &ContinuousRule,
    params: &SolverParams,
    model: &CubatureModel,
) -> Result<CecmOutcome> {
    params.validate()?;
    let s1 = sparsify(start, 1, params, model)?;
    let mut s2 = sparsify(&s1.rule, params.n_steps, params, model)?;
    if params.polish {
        polish(&mut s2.rule, params, model)?;
    }
    let (_, r) = evaluate_active(&s2.rule, model)?;
    let mut eliminations = s1.eliminations;
    eliminations.extend(s2.eliminations.iter().copied());
    let mut trace = s1.trace;
    trace.extend(s2.trace);
    Ok(CecmOutcome {
        stage_removed: [eliminations.len() - s2.eliminations.len(), s2.eliminations.len()],
        rule: s2.rule,
        eliminations,
        trace,
        residual_norm: r.norm(),
        no_positive_intermediate: s1.no_positive_intermediate || s2.no_positive_intermediate,
    })
}
