use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::truncated::{normalize_signs, svd_truncated, SvdFactors};
use crate::error::{Error, Result};
use crate::linalg::mach_tol;

/// Output of [`rorth_inc`]: `C ≈ H·B` with `B = Hᵀ·C`.
#[derive(Debug, Clone)]
pub struct RangeBasis {
    pub h: DMatrix<f64>,
    pub b: DMatrix<f64>,
    /// Frobenius norm of the final residual `C − H·B`.
    pub residual: f64,
    /// Residual norm after each outer iteration.
    pub residual_history: Vec<f64>,
    /// Size of the random test matrix drawn at each outer iteration.
    pub increments: Vec<usize>,
}

impl RangeBasis {
    pub fn iterations(&self) -> usize {
        self.increments.len()
    }
}

/// Optional bounds for the rank increment of [`rorth_inc`].
#[derive(Debug, Clone, Copy, Default)]
pub struct IncrementBounds {
    pub dr_min: Option<usize>,
    pub dr_max: Option<usize>,
}

fn gaussian(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        z * scale
    })
}

/// Incremental randomized orthogonalization with a variable rank increment.
///
/// Builds an orthonormal `H` with `‖C − H·Hᵀ·C‖_F ≤ mu`, growing the number of random
/// samples per iteration by a logarithmic extrapolation of the residual decay.
pub fn rorth_inc(
    c: &DMatrix<f64>,
    mu: f64,
    r_est: usize,
    bounds: IncrementBounds,
    seed: u64,
) -> Result<RangeBasis> {
    if !(mu > 0.0) {
        return Err(Error::param("mu", "tolerance must be positive"));
    }
    let (n, m) = c.shape();
    let q = n.min(m);
    let mut h = DMatrix::<f64>::zeros(n, 0);
    let mut b = DMatrix::<f64>::zeros(0, m);
    let mut resid = c.clone();
    let mut cnorm = resid.norm();
    let mut out = RangeBasis {
        h: h.clone(),
        b: b.clone(),
        residual: cnorm,
        residual_history: Vec::new(),
        increments: Vec::new(),
    };
    if cnorm < mu || q == 0 {
        return Ok(out);
    }
    let dr_min = bounds.dr_min.unwrap_or((q as f64 * 0.01).ceil() as usize).max(1);
    let dr_max = bounds.dr_max.unwrap_or((q as f64 * 0.25).ceil() as usize).max(dr_min);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dr = r_est.clamp(1, q);
    let mut r_prev = 0usize;
    let mut c_prev = cnorm;
    let mut iter = 0usize;
    while cnorm >= mu {
        iter += 1;
        out.increments.push(dr);
        let omega = gaussian(m, dr, 1.0 / ((n * dr) as f64).sqrt(), &mut rng);
        let y = &resid * omega;
        let mut dh = svd_truncated(&y, 0.0, None)?.left;
        if dh.ncols() == 0 {
            break;
        }
        if iter > 1 {
            let proj = &h * (h.transpose() * &dh);
            dh = svd_truncated(&(dh - proj), 0.0, None)?.left;
            if dh.ncols() == 0 {
                break;
            }
        }
        let db = dh.transpose() * &resid;
        resid -= &dh * &db;
        let c_new = resid.norm();
        h = concat_cols(&h, &dh);
        b = concat_rows(&b, &db);
        out.residual_history.push(c_new);
        let stalled = c_new >= cnorm;
        cnorm = c_new;
        let rank = h.ncols();
        if cnorm < mu || stalled || rank >= q || iter > q {
            break;
        }
        let dlog = cnorm.ln() - c_prev.ln();
        let est = if dlog.abs() > 0.0 && dlog.is_finite() {
            let rb = r_prev as f64 + (rank - r_prev) as f64 / dlog * (mu.ln() - c_prev.ln());
            rb.min(q as f64)
        } else {
            f64::INFINITY
        };
        let want = if est.is_finite() {
            ((est - rank as f64).ceil().max(0.0)) as usize
        } else {
            dr_max
        };
        dr = want.min(dr_max).max(dr_min).min(q - rank).max(1);
        r_prev = rank;
        c_prev = cnorm;
    }
    out.h = h;
    out.b = b;
    out.residual = cnorm;
    Ok(out)
}

/// Incremental randomized SVD: [`rorth_inc`] followed by a truncated SVD of `B`.
///
/// `r_est` defaults to `ceil(0.05 · max(n, m))`.
pub fn rsvd_inc(
    da: &DMatrix<f64>,
    eps: f64,
    mu: f64,
    r_est: Option<usize>,
    seed: u64,
) -> Result<(SvdFactors, RangeBasis)> {
    if !(eps >= 0.0) {
        return Err(Error::param("eps", "must be non-negative"));
    }
    let (n, m) = da.shape();
    let r = r_est.unwrap_or(((n.max(m) as f64) * 0.05).ceil() as usize).max(1);
    let range = rorth_inc(da, mu, r, IncrementBounds::default(), seed)?;
    let bnorm = range.b.norm();
    // Directions of B below the caller's precision floor are roundoff, not range.
    let floor = mach_tol(n, m, bnorm).max(mu);
    let svd = svd_truncated(&range.b, eps * bnorm, Some(floor))?;
    let mut left = &range.h * &svd.left;
    let mut right = svd.right;
    normalize_signs(&mut left, &mut right);
    let factors = SvdFactors {
        left,
        singular: svd.singular,
        right,
        truncation_error: (svd.truncation_error.powi(2) + range.residual.powi(2)).sqrt(),
        rank: svd.rank,
    };
    Ok((factors, range))
}

pub(crate) fn concat_cols(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    if a.ncols() == 0 {
        return b.clone();
    }
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

pub(crate) fn concat_rows(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    if a.nrows() == 0 {
        return b.clone();
    }
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.rows_mut(0, a.nrows()).copy_from(a);
    out.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    out
}
