//! Built-in integrand families with closed-form gradients.

use std::f64::consts::PI;

use crate::basis::AnalyticIntegrand;
use crate::error::{Error, Result};

/// Tensor-product Lagrange polynomials of a given degree on equally spaced nodes in `[-1, 1]^d`.
///
/// Columns are ordered with the first coordinate's index running fastest.
#[derive(Debug, Clone)]
pub struct Lagrange {
    dim: usize,
    nodes: Vec<f64>,
}

impl Lagrange {
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::param("dim", "must be 1, 2 or 3"));
        }
        if degree > 15 {
            return Err(Error::param("degree", "at most 15 is supported"));
        }
        let nodes = if degree == 0 {
            vec![0.0]
        } else {
            (0..=degree).map(|i| -1.0 + 2.0 * i as f64 / degree as f64).collect()
        };
        Ok(Lagrange { dim, nodes })
    }

    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Values and derivatives of the 1D basis at `t`.
    fn basis_1d(&self, t: f64, val: &mut [f64], der: &mut [f64]) {
        let n = self.nodes.len();
        for i in 0..n {
            let xi = self.nodes[i];
            let mut v = 1.0;
            let mut dsum = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let denom = xi - self.nodes[j];
                let mut term = 1.0 / denom;
                for k in 0..n {
                    if k != i && k != j {
                        term *= (t - self.nodes[k]) / (xi - self.nodes[k]);
                    }
                }
                dsum += term;
                v *= (t - self.nodes[j]) / denom;
            }
            val[i] = v;
            der[i] = dsum;
        }
    }
}

impl AnalyticIntegrand for Lagrange {
    fn dim(&self) -> usize {
        self.dim
    }

    fn ncols(&self) -> usize {
        self.nodes.len().pow(self.dim as u32)
    }

    fn eval(&self, x: &[f64], values: &mut [f64], grads: &mut [f64]) {
        let n = self.nodes.len();
        let d = self.dim;
        let mut v = [[0.0; 16]; 3];
        let mut dv = [[0.0; 16]; 3];
        for i in 0..d {
            self.basis_1d(x[i], &mut v[i][..n], &mut dv[i][..n]);
        }
        let total = self.ncols();
        for col in 0..total {
            let mut idx = [0usize; 3];
            let mut rem = col;
            for slot in idx.iter_mut().take(d) {
                *slot = rem % n;
                rem /= n;
            }
            let mut prod = 1.0;
            for i in 0..d {
                prod *= v[i][idx[i]];
            }
            values[col] = prod;
            for i in 0..d {
                let mut g = dv[i][idx[i]];
                for k in 0..d {
                    if k != i {
                        g *= v[k][idx[k]];
                    }
                }
                grads[i * total + col] = g;
            }
        }
    }
}

/// Six-component exponential–sinusoidal family on `[-1, 1]^3`, sampled on a parameter grid in `[1, π]^2`.
///
/// Column `6·k + c` is component `c` at parameter pair `k`.
#[derive(Debug, Clone)]
pub struct ExpSin3d {
    params: Vec<(f64, f64)>,
}

impl ExpSin3d {
    /// Uniform `n × n` grid over `[1, π]^2`, first parameter fastest.
    pub fn grid(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("nsamp", "must be positive"));
        }
        let at = |k: usize| {
            if n == 1 {
                1.0
            } else {
                1.0 + (PI - 1.0) * k as f64 / (n - 1) as f64
            }
        };
        let mut params = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                params.push((at(i), at(j)));
            }
        }
        Ok(ExpSin3d { params })
    }

    pub fn from_params(params: Vec<(f64, f64)>) -> Self {
        ExpSin3d { params }
    }

    pub fn params(&self) -> &[(f64, f64)] {
        &self.params
    }
}

/// `G(r,s) = (1 − r)·cos(3πs(r+1))` and its derivative in `r`.
fn g_fn(r: f64, s: f64) -> (f64, f64) {
    let arg = 3.0 * PI * s * (r + 1.0);
    let (sn, cs) = arg.sin_cos();
    ((1.0 - r) * cs, -cs - (1.0 - r) * sn * 3.0 * PI * s)
}

/// `E(r,s) = exp((r − 1)s)` and its derivative in `r`.
fn e_fn(r: f64, s: f64) -> (f64, f64) {
    let e = ((r - 1.0) * s).exp();
    (e, s * e)
}

impl AnalyticIntegrand for ExpSin3d {
    fn dim(&self) -> usize {
        3
    }

    fn ncols(&self) -> usize {
        6 * self.params.len()
    }

    fn eval(&self, x: &[f64], values: &mut [f64], grads: &mut [f64]) {
        let n = self.ncols();
        let (x1, x2, x3) = (x[0], x[1], x[2]);
        for (k, &(m1, m2)) in self.params.iter().enumerate() {
            let (g11, dg11) = g_fn(x1, m1);
            let (g21, dg21) = g_fn(x2, m1);
            let (g32, dg32) = g_fn(x3, m2);
            let (e11, de11) = e_fn(x1, m1);
            let (e21, de21) = e_fn(x2, m1);
            let (e32, de32) = e_fn(x3, m2);
            // (value, d/dx1, d/dx2, d/dx3) per component
            let comps = [
                (g11 * e11, dg11 * e11 + g11 * de11, 0.0, 0.0),
                (g21 * e21, 0.0, dg21 * e21 + g21 * de21, 0.0),
                (g11 * e21, dg11 * e21, g11 * de21, 0.0),
                (g21 * e11, g21 * de11, dg21 * e11, 0.0),
                (g11 * e32, dg11 * e32, 0.0, g11 * de32),
                (g32 * e21, 0.0, g32 * de21, dg32 * e21),
            ];
            for (c, (v, d1, d2, d3)) in comps.into_iter().enumerate() {
                let col = 6 * k + c;
                values[col] = v + 1.0;
                grads[col] = d1;
                grads[n + col] = d2;
                grads[2 * n + col] = d3;
            }
        }
    }
}
