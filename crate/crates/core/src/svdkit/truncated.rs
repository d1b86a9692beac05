use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, mach_tol};

/// Truncated singular value decomposition `M ≈ left · diag(singular) · rightᵀ`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub left: DMatrix<f64>,
    pub singular: DVector<f64>,
    pub right: DMatrix<f64>,
    /// Frobenius norm of the discarded part of the spectrum.
    pub truncation_error: f64,
    pub rank: usize,
}

impl SvdFactors {
    pub fn empty(n: usize, m: usize) -> Self {
        SvdFactors {
            left: DMatrix::zeros(n, 0),
            singular: DVector::zeros(0),
            right: DMatrix::zeros(m, 0),
            truncation_error: 0.0,
            rank: 0,
        }
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.left.clone();
        for (j, s) in self.singular.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.right.transpose()
    }
}

/// Full thin SVD with singular values sorted in non-increasing order.
fn thin_svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let (n, c) = m.shape();
    let fm = faer::Mat::<f64>::from_fn(n, c, |i, j| m[(i, j)]);
    let svd = fm
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let k = n.min(c);
    let (fu, fs, fv) = (svd.U(), svd.S().column_vector(), svd.V());
    let u = DMatrix::from_fn(n, k, |i, j| fu[(i, j)]);
    let s = DVector::from_fn(k, |i, _| fs[i]);
    let v = DMatrix::from_fn(c, k, |i, j| fv[(i, j)]);
    Ok((u, s, v))
}

/// Flip each pair so the largest-magnitude entry of every left vector is positive.
pub fn normalize_signs(left: &mut DMatrix<f64>, right: &mut DMatrix<f64>) {
    for j in 0..left.ncols() {
        let col = left.column(j);
        let mut best = 0.0f64;
        let mut val = 0.0f64;
        for v in col.iter() {
            if v.abs() > best {
                best = v.abs();
                val = *v;
            }
        }
        if val < 0.0 {
            left.column_mut(j).neg_mut();
            if j < right.ncols() {
                right.column_mut(j).neg_mut();
            }
        }
    }
}

/// Number of singular values to keep for the given thresholds.
fn retained_rank(s: &DVector<f64>, eps_abs: f64, mu: f64) -> usize {
    let k_all = s.len();
    if eps_abs <= mu {
        return s.iter().take_while(|v| **v > mu).count();
    }
    // tail[k] = sqrt(sum_{i >= k} s_i^2)
    let mut tail2 = 0.0;
    let mut k = k_all;
    while k > 0 {
        let next = tail2 + s[k - 1] * s[k - 1];
        if next.sqrt() > eps_abs {
            break;
        }
        tail2 = next;
        k -= 1;
    }
    // drop trailing values equal (to roundoff) to the first discarded one
    if k < k_all {
        let cut = s[k] + 16.0 * f64::EPSILON * s[0];
        while k > 0 && s[k - 1] <= cut {
            k -= 1;
        }
    }
    // zero singular values never count towards the rank
    while k > 0 && s[k - 1] <= 0.0 {
        k -= 1;
    }
    k
}

/// Truncated SVD of `m`.
///
/// With `eps_abs <= mu_mach` every singular value above `mu_mach` is kept (numerical rank);
/// otherwise the smallest rank whose discarded tail has Frobenius norm `<= eps_abs`.
/// `mu_mach` defaults to `max(n, m) · ulp(‖M‖_F)`.
pub fn svd_truncated(m: &DMatrix<f64>, eps_abs: f64, mu_mach: Option<f64>) -> Result<SvdFactors> {
    let (n, c) = m.shape();
    if n == 0 || c == 0 {
        return Ok(SvdFactors::empty(n, c));
    }
    if !all_finite(m) {
        return Err(Error::input("matrix contains non-finite entries"));
    }
    if !(eps_abs >= 0.0) {
        return Err(Error::param("eps_abs", "must be non-negative"));
    }
    let fro = m.norm();
    let mu = mu_mach.unwrap_or_else(|| mach_tol(n, c, fro));
    if fro == 0.0 {
        return Ok(SvdFactors::empty(n, c));
    }
    let (u, s, v) = thin_svd(m)?;
    let k = retained_rank(&s, eps_abs, mu);
    let discarded: f64 = s.iter().skip(k).map(|x| x * x).sum::<f64>().sqrt();
    let mut left = u.columns(0, k).into_owned();
    let mut right = v.columns(0, k).into_owned();
    normalize_signs(&mut left, &mut right);
    Ok(SvdFactors {
        left,
        singular: s.rows(0, k).into_owned(),
        right,
        truncation_error: discarded,
        rank: k,
    })
}
