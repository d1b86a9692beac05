use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector};

use super::mesh::{GaussField, Mesh};
use crate::error::{Error, Result};
use crate::linalg::cond2;

/// Largest admissible condition number of the moment matrix.
pub const MAX_MOMENT_COND: f64 = 1e12;

/// Polynomial interpolant through the Gauss points of one element.
#[derive(Debug, Clone)]
pub struct ElementInterpolant {
    pub element: usize,
    pub centroid: Vec<f64>,
    pub scale: Vec<f64>,
    pub inv_moment: DMatrix<f64>,
    pub exponents: Vec<Vec<u32>>,
    pub moment_cond: f64,
}

impl ElementInterpolant {
    pub fn build(mesh: &Mesh, field: &GaussField, e: usize) -> Result<Self> {
        let d = mesh.dim();
        let q = mesh.gauss_per_dir();
        let rows = field.element_rows(e);
        let r = rows.len();
        if r != q.pow(d as u32) {
            return Err(Error::input(format!("element {e} has {r} Gauss points, expected {}", q.pow(d as u32))));
        }
        let mut centroid = vec![0.0; d];
        for g in rows.clone() {
            for (c, x) in centroid.iter_mut().zip(field.point(g)) {
                *c += x / r as f64;
            }
        }
        let mut scale = vec![0.0f64; d];
        for g in rows.clone() {
            for i in 0..d {
                scale[i] = scale[i].max((field.point(g)[i] - centroid[i]).abs());
            }
        }
        for s in scale.iter_mut() {
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        let exponents: Vec<Vec<u32>> = (0..r)
            .map(|k| {
                let mut rem = k;
                (0..d)
                    .map(|_| {
                        let a = (rem % q) as u32;
                        rem /= q;
                        a
                    })
                    .collect()
            })
            .collect();
        let mut itp = ElementInterpolant {
            element: e,
            centroid,
            scale,
            inv_moment: DMatrix::zeros(0, 0),
            exponents,
            moment_cond: 1.0,
        };
        let mut p = DMatrix::zeros(r, r);
        for (row, g) in rows.enumerate() {
            let xs = itp.scaled(field.point(g));
            p.row_mut(row).copy_from(&itp.monomials(&xs).transpose());
        }
        let cond = cond2(&p);
        if !(cond <= MAX_MOMENT_COND) {
            return Err(Error::Interpolant { element: e, cond });
        }
        itp.moment_cond = cond;
        itp.inv_moment = p.try_inverse().ok_or(Error::Interpolant { element: e, cond })?;
        Ok(itp)
    }

    fn scaled(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.centroid)
            .zip(&self.scale)
            .map(|((x, c), l)| (x - c) / l)
            .collect()
    }

    fn monomials(&self, xs: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.exponents.len(),
            self.exponents.iter().map(|a| {
                a.iter().zip(xs).map(|(&k, x)| x.powi(k as i32)).product::<f64>()
            }),
        )
    }

    /// Shape function values `N(x)` (length `r`).
    pub fn shape_at(&self, x: &[f64]) -> DVector<f64> {
        let m = self.monomials(&self.scaled(x));
        (m.transpose() * &self.inv_moment).transpose()
    }

    /// Physical-coordinate gradients of the shape functions: row `i` is `∂N/∂x_i`.
    pub fn shape_grad_at(&self, x: &[f64]) -> DMatrix<f64> {
        let xs = self.scaled(x);
        let d = xs.len();
        let r = self.exponents.len();
        let mut dp = DMatrix::zeros(d, r);
        for (j, a) in self.exponents.iter().enumerate() {
            for i in 0..d {
                if a[i] == 0 {
                    continue;
                }
                let mut v = a[i] as f64 * xs[i].powi(a[i] as i32 - 1) / self.scale[i];
                for k in 0..d {
                    if k != i {
                        v *= xs[k].powi(a[k] as i32);
                    }
                }
                dp[(i, j)] = v;
            }
        }
        dp * &self.inv_moment
    }
}

/// Lazily built interpolants keyed by element index.
#[derive(Debug, Default)]
pub struct InterpolantCache {
    map: RwLock<HashMap<usize, Arc<ElementInterpolant>>>,
}

impl InterpolantCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, mesh: &Mesh, field: &GaussField, e: usize) -> Result<Arc<ElementInterpolant>> {
        if let Some(itp) = self.map.read().expect("cache lock poisoned").get(&e) {
            return Ok(itp.clone());
        }
        let itp = Arc::new(ElementInterpolant::build(mesh, field, e)?);
        let mut w = self.map.write().expect("cache lock poisoned");
        Ok(w.entry(e).or_insert(itp).clone())
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
