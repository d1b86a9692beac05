//! Discrete empirical cubature: greedy selection of Gauss points with positive weights.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cond2, lstsq};

/// Scores within this relative distance of the best are treated as ties.
const TIE_TOL: f64 = 1e-12;

/// Selected Gauss rows `indices` with weights `w`, integrating every basis function exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteRule {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    /// `‖b − U(z,:)ᵀ·w‖` after each selection.
    pub residual_history: Vec<f64>,
}

/// Greedy discrete empirical cubature on the basis `u` (M × p) with Gauss weights `w`.
///
/// Each step adds the unselected row most positively parallel to the current residual and
/// re-solves the least-squares weights; the loop ends with `p` points and a square solve.
pub fn decm(u: &DMatrix<f64>, w: &[f64]) -> Result<DiscreteRule> {
    let (m, p) = u.shape();
    if w.len() != m {
        return Err(Error::input(format!("basis has {m} rows but {} weights", w.len())));
    }
    if p == 0 {
        return Ok(DiscreteRule {
            indices: vec![],
            weights: vec![],
            residual_history: vec![],
        });
    }
    if p > m {
        return Err(Error::input(format!("{p} basis functions but only {m} Gauss points")));
    }
    let b = u.transpose() * DVector::from_column_slice(w);
    let row_norms: Vec<f64> = (0..m).map(|g| u.row(g).norm()).collect();
    let mut selected = vec![false; m];
    let mut z: Vec<usize> = Vec::with_capacity(p);
    let mut r = b.clone();
    let mut weights = DVector::zeros(0);
    let mut history = Vec::with_capacity(p);
    while z.len() < p {
        let scores = u * &r;
        let mut best: Option<(usize, f64)> = None;
        for g in 0..m {
            if selected[g] || row_norms[g] == 0.0 {
                continue;
            }
            let s = scores[g] / row_norms[g];
            match best {
                None => best = Some((g, s)),
                // near-ties resolve towards the later index
                Some((_, bs)) if s >= bs - TIE_TOL * bs.abs().max(f64::MIN_POSITIVE) => {
                    best = Some((g, s.max(bs)))
                }
                _ => {}
            }
        }
        let Some((g, _)) = best else {
            return Err(Error::Numerical(format!(
                "candidate rows exhausted after {} of {p} selections (degenerate basis rows)",
                z.len()
            )));
        };
        selected[g] = true;
        z.push(g);
        let uz = rows_transposed(u, &z);
        let (sol, res) = if z.len() == p {
            let c = cond2(&uz);
            let sol = uz.clone().lu().solve(&b).ok_or(Error::Singular {
                context: "final square DECM system".into(),
                cond: c,
            })?;
            if !(c < 1.0 / f64::EPSILON) {
                return Err(Error::Singular {
                    context: "final square DECM system".into(),
                    cond: c,
                });
            }
            let res = (&uz * &sol - &b).norm();
            (sol, res)
        } else {
            lstsq(&uz, &b)?
        };
        r = &b - &uz * &sol;
        weights = sol;
        history.push(res);
    }
    if let Some(i) = weights.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Numerical(format!(
            "DECM produced a non-positive weight {:.3e} at Gauss point {}",
            weights[i], z[i]
        )));
    }
    Ok(DiscreteRule {
        indices: z,
        weights: weights.iter().copied().collect(),
        residual_history: history,
    })
}

/// `U(z,:)ᵀ` as a `p × |z|` matrix.
fn rows_transposed(u: &DMatrix<f64>, z: &[usize]) -> DMatrix<f64> {
    let p = u.ncols();
    DMatrix::from_fn(p, z.len(), |i, j| u[(z[j], i)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_basis_single_point() {
        let w = vec![0.2, 0.3, 0.5];
        let vol: f64 = w.iter().sum();
        let u = DMatrix::from_element(3, 1, 1.0 / vol.sqrt());
        let rule = decm(&u, &w).unwrap();
        assert_eq!(rule.indices.len(), 1);
        assert!((rule.weights[0] - vol).abs() < 1e-14);
    }
}
