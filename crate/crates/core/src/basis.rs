//! W-orthonormal integrand basis built from snapshot data, with point evaluation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mesh::{GaussField, InterpolantCache, LocateOptions, Mesh};
use crate::svdkit::blocks::RowScaled;
use crate::svdkit::{srsvd, svd_truncated, BlockSource};

/// Relative threshold below which a retained singular value makes analytic evaluation unsafe.
pub const MIN_RELATIVE_SINGULAR: f64 = 1e-14;

/// Threshold factor (times `sqrt(ΣW)`) for deciding that constants already lie in `range(U)`.
pub const CONSTANT_TOL: f64 = 1e-8;

/// An integrand `A(x)` with its spatial gradient, available in closed form.
pub trait AnalyticIntegrand: Send + Sync {
    fn dim(&self) -> usize;
    fn ncols(&self) -> usize;
    /// Fill `values[j] = A_j(x)` and `grads[i * ncols + j] = ∂A_j/∂x_i`.
    fn eval(&self, x: &[f64], values: &mut [f64], grads: &mut [f64]);
}

/// Snapshot matrix `A_FE` (rows ↔ Gauss points), dense or column partitioned.
pub enum Snapshots<'a> {
    Dense(&'a DMatrix<f64>),
    Blocks(&'a dyn BlockSource),
}

impl Snapshots<'_> {
    pub fn nrows(&self) -> usize {
        match self {
            Snapshots::Dense(a) => a.nrows(),
            Snapshots::Blocks(b) => b.nrows(),
        }
    }
}

/// `diag(sqrt(W))·A`.
pub fn weighted_snapshots(a: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let mut out = a.clone();
    for (g, wg) in w.iter().enumerate() {
        out.row_mut(g).scale_mut(wg.sqrt());
    }
    out
}

/// Snapshot matrix evaluated at Gauss points from an analytic integrand.
pub fn sample_integrand(f: &dyn AnalyticIntegrand, field: &GaussField) -> DMatrix<f64> {
    let n = f.ncols();
    let mut vals = vec![0.0; n];
    let mut grads = vec![0.0; n * f.dim()];
    let mut a = DMatrix::zeros(field.len(), n);
    for g in 0..field.len() {
        f.eval(field.point(g), &mut vals, &mut grads);
        for j in 0..n {
            a[(g, j)] = vals[j];
        }
    }
    a
}

/// Record of a numerically added constant column `v = (1 − U_old·b_old)/norm`.
#[derive(Debug, Clone)]
pub struct ConstantColumn {
    pub b_old: DVector<f64>,
    pub norm: f64,
}

/// Basis values and physical gradients at one point.
#[derive(Debug, Clone)]
pub struct BasisValues {
    /// `u_j(x)`, length `p`.
    pub u: DVector<f64>,
    /// Row `i` holds `∂u/∂x_i`.
    pub grad: DMatrix<f64>,
}

/// Discrete basis `U` (M × p), integrals `b` and the factors needed to evaluate it off the Gauss points.
#[derive(Debug, Clone)]
pub struct BasisModel {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
    pub b: DVector<f64>,
    pub weights: Vec<f64>,
    pub has_constant: bool,
    /// Set when `augment_constant` prepended a column (index 0).
    pub constant_column: Option<ConstantColumn>,
    /// Frobenius norm of the discarded part of `diag(sqrt(W))·A`.
    pub truncation_error: f64,
    v_sinv: DMatrix<f64>,
}

impl BasisModel {
    /// Truncated SVD of the weighted snapshots at relative tolerance `eps_svd`.
    pub fn compute(a: Snapshots<'_>, weights: &[f64], eps_svd: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps_svd) {
            return Err(Error::param("eps_svd", "must lie in [0, 1]"));
        }
        if a.nrows() != weights.len() {
            return Err(Error::input(format!(
                "snapshot matrix has {} rows but there are {} Gauss weights",
                a.nrows(),
                weights.len()
            )));
        }
        if let Some(g) = weights.iter().position(|w| !(*w > 0.0)) {
            return Err(Error::input(format!("Gauss weight {g} is not positive")));
        }
        let f = match a {
            Snapshots::Dense(m) => {
                let abar = weighted_snapshots(m, weights);
                let tol = eps_svd * abar.norm();
                svd_truncated(&abar, tol, None)?
            }
            Snapshots::Blocks(src) => {
                let scaled = RowScaled::sqrt_weights(src, weights);
                srsvd(&scaled, eps_svd, seed)?.0
            }
        };
        let mut u = f.left;
        for (g, w) in weights.iter().enumerate() {
            u.row_mut(g).scale_mut(1.0 / w.sqrt());
        }
        let b = u.transpose() * DVector::from_column_slice(weights);
        let mut v_sinv = f.right.clone();
        for (j, s) in f.singular.iter().enumerate() {
            v_sinv.column_mut(j).scale_mut(1.0 / s);
        }
        Ok(BasisModel {
            u,
            s: f.singular,
            v: f.right,
            b,
            weights: weights.to_vec(),
            has_constant: false,
            constant_column: None,
            truncation_error: f.truncation_error,
            v_sinv,
        })
    }

    pub fn len(&self) -> usize {
        self.u.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.u.ncols() == 0
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Make sure constant functions lie in the span of the basis.
    pub fn augment_constant(mut self) -> Self {
        let w = DVector::from_column_slice(&self.weights);
        let vol = w.sum();
        let b_old = self.u.transpose() * &w;
        let mut v = DVector::from_element(self.u.nrows(), 1.0) - &self.u * &b_old;
        let vnorm = w.dot(&v.component_mul(&v)).sqrt();
        if vnorm <= CONSTANT_TOL * vol.sqrt() {
            self.has_constant = true;
            return self;
        }
        v /= vnorm;
        let mut u = DMatrix::zeros(self.u.nrows(), self.u.ncols() + 1);
        u.column_mut(0).copy_from(&v);
        u.columns_mut(1, self.u.ncols()).copy_from(&self.u);
        self.u = u;
        self.b = self.u.transpose() * &w;
        self.has_constant = true;
        self.constant_column = Some(ConstantColumn { b_old, norm: vnorm });
        self
    }

    /// `max |Uᵀ·diag(W)·U − I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut wu = self.u.clone();
        for (g, w) in self.weights.iter().enumerate() {
            wu.row_mut(g).scale_mut(*w);
        }
        let g = self.u.transpose() * wu;
        let p = g.nrows();
        (&g - DMatrix::<f64>::identity(p, p)).amax()
    }

    fn offset(&self) -> usize {
        usize::from(self.constant_column.is_some())
    }

    fn finish_constant(&self, core_u: DVector<f64>, core_grad: DMatrix<f64>) -> BasisValues {
        let Some(cc) = &self.constant_column else {
            return BasisValues {
                u: core_u,
                grad: core_grad,
            };
        };
        let p = core_u.len() + 1;
        let d = core_grad.nrows();
        let mut u = DVector::zeros(p);
        u[0] = (1.0 - core_u.dot(&cc.b_old)) / cc.norm;
        u.rows_mut(1, p - 1).copy_from(&core_u);
        let mut grad = DMatrix::zeros(d, p);
        for i in 0..d {
            grad[(i, 0)] = -core_grad.row(i).transpose().dot(&cc.b_old) / cc.norm;
        }
        grad.columns_mut(1, p - 1).copy_from(&core_grad);
        BasisValues { u, grad }
    }

    /// Evaluate `u(x) = A(x)·V·S⁻¹` and its gradient from a closed-form integrand.
    pub fn eval_analytic(&self, f: &dyn AnalyticIntegrand, x: &[f64]) -> Result<BasisValues> {
        if f.ncols() != self.v.nrows() {
            return Err(Error::input(format!(
                "integrand has {} columns, basis was built from {}",
                f.ncols(),
                self.v.nrows()
            )));
        }
        if let Some(smax) = self.s.iter().cloned().reduce(f64::max) {
            if self.s.iter().any(|s| *s < MIN_RELATIVE_SINGULAR * smax) {
                return Err(Error::Singular {
                    context: "retained singular values are too small for analytic evaluation; increase eps_svd".into(),
                    cond: smax / self.s.min(),
                });
            }
        }
        let n = f.ncols();
        let d = f.dim();
        let mut vals = vec![0.0; n];
        let mut grads = vec![0.0; n * d];
        f.eval(x, &mut vals, &mut grads);
        let a = DMatrix::from_row_slice(1, n, &vals);
        let da = DMatrix::from_row_slice(d, n, &grads);
        let u = (a * &self.v_sinv).transpose();
        let grad = da * &self.v_sinv;
        Ok(self.finish_constant(DVector::from_column_slice(u.as_slice()), grad))
    }

    /// `‖A(x) − u_svd(x)·S·Vᵀ‖`: how well the truncated basis represents the integrand at `x`.
    pub fn representation_residual(&self, f: &dyn AnalyticIntegrand, x: &[f64]) -> Result<f64> {
        let vals = self.eval_analytic(f, x)?;
        let core = vals.u.rows(self.offset(), self.s.len()).component_mul(&self.s);
        let recon = &self.v * core;
        let n = f.ncols();
        let mut a = vec![0.0; n];
        let mut g = vec![0.0; n * f.dim()];
        f.eval(x, &mut a, &mut g);
        Ok((DVector::from_vec(a) - recon).norm())
    }

    /// Evaluate by interpolating the Gauss-point values of the element containing `x`.
    ///
    /// Returns `Ok(None)` when `x` lies outside the mesh.
    #[allow(clippy::too_many_arguments)]
    pub fn eval_interp(
        &self,
        mesh: &Mesh,
        field: &GaussField,
        cache: &InterpolantCache,
        x: &[f64],
        hint: Option<usize>,
        radius: f64,
        opts: LocateOptions,
    ) -> Result<Option<(usize, BasisValues)>> {
        let Some(e) = mesh.locate(x, hint, radius, opts) else {
            return Ok(None);
        };
        Ok(Some((e, self.eval_in_element(mesh, field, cache, e, x)?)))
    }

    /// Interpolated values using element `e` (which the caller has verified contains `x`).
    pub fn eval_in_element(
        &self,
        mesh: &Mesh,
        field: &GaussField,
        cache: &InterpolantCache,
        e: usize,
        x: &[f64],
    ) -> Result<BasisValues> {
        let itp = cache.get(mesh, field, e)?;
        let rows = field.element_rows(e);
        let ue = self.u.rows(rows.start, rows.len());
        let n = itp.shape_at(x);
        let b = itp.shape_grad_at(x);
        Ok(BasisValues {
            u: (n.transpose() * ue).transpose(),
            grad: b * ue,
        })
    }
}

/// Append the column `c·1` to `A`; `c` defaults to `‖A‖_W / sqrt(ΣW)`.
pub fn append_constant_column(a: &DMatrix<f64>, w: &[f64], c: Option<f64>) -> DMatrix<f64> {
    let vol: f64 = w.iter().sum();
    let c = c.unwrap_or_else(|| weighted_snapshots(a, w).norm() / vol.sqrt());
    let mut out = a.clone().insert_column(a.ncols(), c);
    if !c.is_finite() || c == 0.0 {
        out.column_mut(a.ncols()).fill(1.0);
    }
    out
}

/// Analytic integrand with an extra constant column `c` appended.
pub struct WithConstant<F> {
    pub inner: F,
    pub value: f64,
}

impl<F: AnalyticIntegrand> AnalyticIntegrand for WithConstant<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn ncols(&self) -> usize {
        self.inner.ncols() + 1
    }
    fn eval(&self, x: &[f64], values: &mut [f64], grads: &mut [f64]) {
        let n = self.inner.ncols();
        let d = self.inner.dim();
        let mut g = vec![0.0; n * d];
        self.inner.eval(x, &mut values[..n], &mut g);
        values[n] = self.value;
        for i in 0..d {
            grads[i * (n + 1)..i * (n + 1) + n].copy_from_slice(&g[i * n..(i + 1) * n]);
            grads[i * (n + 1) + n] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ones_column_gives_normalized_constant() {
        let w = vec![0.5, 1.5, 2.0];
        let a = DMatrix::from_element(3, 1, 1.0);
        let m = BasisModel::compute(Snapshots::Dense(&a), &w, 0.0, 0).unwrap();
        assert_eq!(m.len(), 1);
        let vol: f64 = w.iter().sum();
        for g in 0..3 {
            assert!((m.u[(g, 0)] - 1.0 / vol.sqrt()).abs() < 1e-14);
        }
        assert!((m.b[0] - vol.sqrt()).abs() < 1e-13);
        let m = m.augment_constant();
        assert_eq!(m.len(), 1);
        assert!(m.has_constant);
    }

    #[test]
    fn augmentation_of_zero_mean_basis() {
        let w = vec![1.0; 4];
        let a = DMatrix::from_column_slice(4, 1, &[1.0, -1.0, 2.0, -2.0]);
        let m = BasisModel::compute(Snapshots::Dense(&a), &w, 0.0, 0).unwrap().augment_constant();
        assert_eq!(m.len(), 2);
        assert!((m.b[0] - 2.0).abs() < 1e-13);
        assert!(m.orthonormality_defect() < 1e-12);
    }
}
