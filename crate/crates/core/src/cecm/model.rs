use std::sync::Arc;

use nalgebra::DVector;

use crate::basis::{AnalyticIntegrand, BasisModel, BasisValues};
use crate::error::{Error, Result};
use crate::mesh::{GaussField, InterpolantCache, LocateOptions, Mesh};

/// How basis functions are evaluated away from the Gauss points.
#[derive(Clone)]
pub enum Backend {
    /// Closed-form integrand: `u(x) = A(x)·V·S⁻¹`.
    Analytic(Arc<dyn AnalyticIntegrand>),
    /// Element-wise polynomial interpolation of the Gauss-point values of `U`.
    Interpolatory,
}

/// Result of evaluating the basis at a trial point.
#[derive(Debug, Clone)]
pub enum PointEval {
    Inside { element: usize, values: BasisValues },
    Outside,
}

/// Everything needed to evaluate the integration residual at arbitrary points of the domain.
pub struct CubatureModel {
    pub mesh: Arc<Mesh>,
    pub field: Arc<GaussField>,
    pub basis: Arc<BasisModel>,
    pub backend: Backend,
    pub cache: InterpolantCache,
    pub locate: LocateOptions,
}

impl CubatureModel {
    pub fn new(mesh: Arc<Mesh>, field: Arc<GaussField>, basis: Arc<BasisModel>, backend: Backend) -> Result<Self> {
        if basis.u.nrows() != field.len() {
            return Err(Error::input(format!(
                "basis has {} rows but the mesh has {} Gauss points",
                basis.u.nrows(),
                field.len()
            )));
        }
        if let Backend::Analytic(f) = &backend {
            if f.dim() != mesh.dim() {
                return Err(Error::input("integrand and mesh dimensions differ"));
            }
        }
        Ok(CubatureModel {
            mesh,
            field,
            basis,
            backend,
            cache: InterpolantCache::new(),
            locate: LocateOptions::default(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.basis.b
    }

    /// Basis values at `x`, known to lie in element `e`.
    pub fn evaluate_in(&self, e: usize, x: &[f64]) -> Result<BasisValues> {
        match &self.backend {
            Backend::Analytic(f) => self.basis.eval_analytic(f.as_ref(), x),
            Backend::Interpolatory => self.basis.eval_in_element(&self.mesh, &self.field, &self.cache, e, x),
        }
    }

    /// Locate `x` starting from `hint` and evaluate the basis there.
    pub fn evaluate(&self, x: &[f64], hint: Option<usize>, radius: f64) -> Result<PointEval> {
        match self.mesh.locate(x, hint, radius, self.locate) {
            None => Ok(PointEval::Outside),
            Some(e) => Ok(PointEval::Inside {
                element: e,
                values: self.evaluate_in(e, x)?,
            }),
        }
    }
}
