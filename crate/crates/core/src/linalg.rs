//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Spacing between `|x|` and the next larger double.
pub fn ulp(x: f64) -> f64 {
    let a = x.abs();
    if !a.is_finite() {
        return f64::NAN;
    }
    a.next_up() - a
}

/// Default machine-precision threshold for an `n x m` matrix of Frobenius norm `fro`.
pub fn mach_tol(n: usize, m: usize, fro: f64) -> f64 {
    n.max(m) as f64 * ulp(fro)
}

pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// 2-norm condition number from singular values (infinite when singular).
pub fn cond2(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 1.0;
    }
    let fm = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let Ok(s) = fm.singular_values() else {
        return f64::INFINITY;
    };
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let smin = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin <= 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Worker threads for dense factorizations; `0` uses every core, `1` runs sequentially.
pub fn set_threads(n: usize) {
    let par = if n == 1 { faer::Par::Seq } else { faer::Par::rayon(n) };
    faer::set_global_parallelism(par);
}

/// Least-squares solution of the full-column-rank system `a x = b` via Householder QR.
///
/// Returns `(x, residual_norm)`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let (n, k) = a.shape();
    if n < k {
        return Err(Error::input("lstsq expects at least as many rows as columns"));
    }
    let qr = a.clone().qr();
    let mut qtb = b.clone();
    qr.q_tr_mul(&mut qtb);
    let r = qr.r();
    let dmax = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let dmin = (0..k).map(|i| r[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if k > 0 && (dmin <= f64::EPSILON * dmax * k as f64 || dmin == 0.0) {
        return Err(Error::Singular {
            context: "least-squares system is rank deficient".into(),
            cond: cond2(a),
        });
    }
    let rk = r.view((0, 0), (k, k)).into_owned();
    let rhs = qtb.rows(0, k).into_owned();
    let x = rk
        .solve_upper_triangular(&rhs)
        .ok_or_else(|| Error::Singular {
            context: "triangular factor is singular".into(),
            cond: f64::INFINITY,
        })?;
    let res = if n > k { qtb.rows(k, n - k).norm() } else { 0.0 };
    Ok((x, res))
}

/// Basic solution of the underdetermined system `g x = c` by Householder QR with
/// column pivoting (largest remaining column norm first).
///
/// At most `rank(g)` entries of the result are nonzero.
pub fn sparse_basic_solve(g: &DMatrix<f64>, c: &DVector<f64>) -> DVector<f64> {
    let (k, n) = g.shape();
    let mut r = g.clone();
    let mut rhs = c.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let steps = k.min(n);
    let mut norms: Vec<f64> = (0..n).map(|j| r.column(j).norm_squared()).collect();
    let scale = norms.iter().cloned().fold(0.0, f64::max).sqrt();
    let tol = (k.max(n) as f64) * f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    let mut rank = 0;
    for j in 0..steps {
        let (piv, _) = (j..n).fold((j, -1.0), |acc, col| {
            if norms[col] > acc.1 {
                (col, norms[col])
            } else {
                acc
            }
        });
        if piv != j {
            r.swap_columns(j, piv);
            norms.swap(j, piv);
            perm.swap(j, piv);
        }
        let alpha = r.view((j, j), (k - j, 1)).norm();
        if alpha <= tol {
            break;
        }
        // Householder reflector zeroing r[j+1.., j]
        let sign = if r[(j, j)] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = r.view((j, j), (k - j, 1)).clone_owned();
        v[0] += sign * alpha;
        let vnorm2 = v.norm_squared();
        if vnorm2 > 0.0 {
            for col in j..n {
                let mut dot = 0.0;
                for i in 0..(k - j) {
                    dot += v[i] * r[(j + i, col)];
                }
                let f = 2.0 * dot / vnorm2;
                for i in 0..(k - j) {
                    r[(j + i, col)] -= f * v[i];
                }
            }
            let mut dot = 0.0;
            for i in 0..(k - j) {
                dot += v[i] * rhs[j + i];
            }
            let f = 2.0 * dot / vnorm2;
            for i in 0..(k - j) {
                rhs[j + i] -= f * v[i];
            }
        }
        for col in (j + 1)..n {
            norms[col] = r.view((j + 1, col), (k - j - 1, 1)).norm_squared();
        }
        rank += 1;
    }
    let mut y = vec![0.0; rank];
    for i in (0..rank).rev() {
        let mut s = rhs[i];
        for jj in (i + 1)..rank {
            s -= r[(i, jj)] * y[jj];
        }
        y[i] = s / r[(i, i)];
    }
    let mut x = DVector::zeros(n);
    for (i, yi) in y.into_iter().enumerate() {
        x[perm[i]] = yi;
    }
    x
}
