use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::model::CubatureModel;
use crate::decm::DiscreteRule;
use crate::error::Result;
use crate::mesh::GaussField;

/// Cubature rule with movable points; zero weights mark eliminated points.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousRule {
    pub dim: usize,
    /// Row-major `p × d` coordinates.
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// Element containing each point.
    pub element_of: Vec<usize>,
}

impl ContinuousRule {
    /// Start from the Gauss points selected by DECM.
    pub fn from_discrete(rule: &DiscreteRule, field: &GaussField) -> Self {
        let d = field.dim;
        let mut points = Vec::with_capacity(rule.indices.len() * d);
        for &g in &rule.indices {
            points.extend_from_slice(field.point(g));
        }
        ContinuousRule {
            dim: d,
            points,
            weights: rule.weights.clone(),
            element_of: rule.indices.iter().map(|&g| field.owner[g]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, g: usize) -> &[f64] {
        &self.points[g * self.dim..(g + 1) * self.dim]
    }

    pub fn point_mut(&mut self, g: usize) -> &mut [f64] {
        &mut self.points[g * self.dim..(g + 1) * self.dim]
    }

    /// Indices of points with nonzero weight.
    pub fn active(&self) -> Vec<usize> {
        (0..self.len()).filter(|&g| self.weights[g] != 0.0).collect()
    }

    pub fn active_count(&self) -> usize {
        self.weights.iter().filter(|w| **w != 0.0).count()
    }

    pub fn all_active_positive(&self) -> bool {
        self.weights.iter().all(|w| *w >= 0.0)
    }

    pub fn sum_weights(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// The rule restricted to its active points.
    pub fn compact(&self) -> ContinuousRule {
        let act = self.active();
        let mut points = Vec::with_capacity(act.len() * self.dim);
        for &g in &act {
            points.extend_from_slice(self.point(g));
        }
        ContinuousRule {
            dim: self.dim,
            points,
            weights: act.iter().map(|&g| self.weights[g]).collect(),
            element_of: act.iter().map(|&g| self.element_of[g]).collect(),
        }
    }
}

/// Integration residual `r = u(X)ᵀ·w − b` over the active points.
pub fn residual(rule: &ContinuousRule, model: &CubatureModel) -> Result<DVector<f64>> {
    let mut r = -model.b().clone();
    for g in rule.active() {
        let vals = model.evaluate_in(rule.element_of[g], rule.point(g))?;
        r.axpy(rule.weights[g], &vals.u, 1.0);
    }
    Ok(r)
}

/// Per-elimination counters: candidates tried and Newton iterations of the accepted candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Elimination {
    pub candidate_trials: usize,
    pub newton_iters: usize,
}
