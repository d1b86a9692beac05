use nalgebra::DMatrix;

use super::blocks::BlockSource;
use super::randomized::{concat_cols, rsvd_inc};
use super::truncated::{normalize_signs, svd_truncated, SvdFactors};
use crate::error::{Error, Result};
use crate::linalg::mach_tol;

/// Per-block bookkeeping of the sequential orthogonalization.
#[derive(Debug, Clone, Default)]
pub struct BlockStats {
    /// Columns appended to `Q` by each block.
    pub added: Vec<usize>,
    /// Outer iterations of the randomized range finder per block (0 when skipped).
    pub iterations: Vec<usize>,
}

/// `A = Q·L` with `Q` orthonormal and `L` block upper triangular.
#[derive(Debug, Clone)]
pub struct SequentialFactors {
    pub q: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub stats: BlockStats,
}

/// Sequential randomized orthogonalization of a column-partitioned matrix.
pub fn srorth(blocks: &dyn BlockSource, seed: u64) -> Result<SequentialFactors> {
    let n = blocks.nrows();
    let p = blocks.block_count();
    let mut q = DMatrix::<f64>::zeros(n, 0);
    let mut parts: Vec<DMatrix<f64>> = Vec::with_capacity(p);
    let mut stats = BlockStats::default();
    let mut r_next = 0usize;
    for i in 0..p {
        let a = blocks.load(i)?;
        if a.nrows() != n {
            return Err(Error::input(format!(
                "block {i} has {} rows, expected {n}",
                a.nrows()
            )));
        }
        let mi = a.ncols();
        if i == 0 {
            r_next = ((n.min(mi) as f64) * 0.01).ceil() as usize;
        }
        let da = if q.ncols() == 0 {
            a.clone()
        } else {
            &a - &q * (q.transpose() * &a)
        };
        let mu = mach_tol(n, mi, a.norm());
        let mut added = 0;
        let mut iters = 0;
        if da.norm() > mu && mu > 0.0 {
            let seed_i = seed.wrapping_add(i as u64);
            let (f, range) = rsvd_inc(&da, 0.0, mu, Some(r_next.max(1)), seed_i)?;
            iters = range.iterations();
            let mut dq = f.left;
            if q.ncols() > 0 && dq.ncols() > 0 {
                let proj = &q * (q.transpose() * &dq);
                dq = svd_truncated(&(dq - proj), 0.0, None)?.left;
            }
            added = dq.ncols();
            q = concat_cols(&q, &dq);
        }
        parts.push(q.transpose() * &a);
        stats.added.push(added);
        stats.iterations.push(iters);
        if added > 0 {
            r_next = added;
        }
    }
    let r = q.ncols();
    let m: usize = parts.iter().map(|b| b.ncols()).sum();
    let mut l = DMatrix::zeros(r, m);
    let mut off = 0;
    for pi in &parts {
        l.view_mut((0, off), (pi.nrows(), pi.ncols())).copy_from(pi);
        off += pi.ncols();
    }
    Ok(SequentialFactors { q, l, stats })
}

/// Sequential randomized SVD of a column-partitioned matrix with relative tolerance `eps`.
pub fn srsvd(blocks: &dyn BlockSource, eps: f64, seed: u64) -> Result<(SvdFactors, BlockStats)> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::param("eps", "relative tolerance must lie in [0, 1]"));
    }
    let sf = srorth(blocks, seed)?;
    let n = blocks.nrows();
    let m = sf.l.ncols();
    let lnorm = sf.l.norm();
    let svd = svd_truncated(&sf.l, eps * lnorm, Some(mach_tol(n, m, lnorm)))?;
    let mut left = &sf.q * &svd.left;
    let mut right = svd.right;
    normalize_signs(&mut left, &mut right);
    Ok((
        SvdFactors {
            left,
            singular: svd.singular,
            right,
            truncation_error: svd.truncation_error,
            rank: svd.rank,
        },
        sf.stats,
    ))
}
