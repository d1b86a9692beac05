//! Reproducible benchmark suites: tensor Lagrange rules in 1D/2D/3D and SRSVD-vs-dense runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::cecm::{ContinuousRule, SolverParams};
use crate::error::{Error, Result};
use crate::mesh::{gauss_legendre, ElementKind, Mesh};
use crate::pipeline::{expected_point_count, Pipeline, PipelineConfig, SnapshotSource};
use crate::registry::Lagrange;
use crate::svdkit::{srsvd, svd_truncated, BlockSource, MemoryBlocks};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Table1,
    Table2,
    Table3,
    Srsvd,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "table1" => Some(Suite::Table1),
            "table2" => Some(Suite::Table2),
            "table3" => Some(Suite::Table3),
            "srsvd" => Some(Suite::Srsvd),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Table1 => "table1",
            Suite::Table2 => "table2",
            Suite::Table3 => "table3",
            Suite::Srsvd => "srsvd",
        }
    }

    /// Spatial dimension of a tensor-rule suite.
    pub fn dim(self) -> Option<usize> {
        match self {
            Suite::Table1 => Some(1),
            Suite::Table2 => Some(2),
            Suite::Table3 => Some(3),
            Suite::Srsvd => None,
        }
    }

    pub fn default_degrees(self) -> Vec<usize> {
        match self {
            Suite::Table1 => (1..=12).collect(),
            Suite::Table2 => (1..=7).collect(),
            Suite::Table3 => (1..=4).collect(),
            Suite::Srsvd => Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    /// Degrees for the tensor suites; `None` uses the suite default.
    pub degrees: Option<Vec<usize>>,
    /// Elements per direction; `None` uses 200 (1D) or 20 (2D, 3D).
    pub divisions: Option<usize>,
    pub params: SolverParams,
    pub seed: u64,
    /// Number of random matrices in the SRSVD suite.
    pub srsvd_cases: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            degrees: None,
            divisions: None,
            params: SolverParams::default(),
            seed: 0,
            srsvd_cases: 20,
        }
    }
}

/// Structured mesh on `[-1, 1]^dim` used by the tensor suites.
///
/// The Gauss order per direction is raised to `ceil((p+1)/2)` when needed so the element
/// quadrature integrates degree-`p` data exactly.
pub fn benchmark_mesh(dim: usize, degree: usize, divisions: Option<usize>) -> Result<Mesh> {
    let (kind, div, q_default) = match dim {
        1 => (ElementKind::LineLinear, 200, 4),
        2 => (ElementKind::QuadBilinear, 20, 2),
        3 => (ElementKind::HexTrilinear, 20, 2),
        _ => return Err(Error::param("dim", "must be 1, 2 or 3")),
    };
    let div = divisions.unwrap_or(div);
    let q = q_default.max(degree.div_ceil(2).max(1));
    Mesh::structured(kind, &vec![-1.0; dim], &vec![1.0; dim], &vec![div; dim], q)
}

/// Tensor Gauss-Legendre rule with `n` points per direction on `[-1, 1]^dim`, first coordinate fastest.
pub fn gauss_tensor_rule(dim: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let total = n.pow(dim as u32);
    let mut points = Vec::with_capacity(total * dim);
    let mut weights = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rest = idx;
        let mut wt = 1.0;
        for _ in 0..dim {
            let i = rest % n;
            rest /= n;
            points.push(x[i]);
            wt *= w[i];
        }
        weights.push(wt);
    }
    (points, weights)
}

/// Relative deviation `e` between two rules with the same number of points.
///
/// `e² = (‖X − X_ref‖² + ‖w − w_ref‖²) / (‖X_ref‖² + ‖w_ref‖²)`, after pairing each reference
/// point with its nearest unused counterpart. Returns `None` when the point counts differ.
pub fn rule_deviation(dim: usize, points: &[f64], weights: &[f64], ref_points: &[f64], ref_weights: &[f64]) -> Option<f64> {
    let n = ref_weights.len();
    if weights.len() != n || points.len() != n * dim || ref_points.len() != n * dim {
        return None;
    }
    let mut used = vec![false; n];
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let xr = &ref_points[i * dim..(i + 1) * dim];
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for j in (0..n).filter(|&j| !used[j]) {
            let d: f64 = points[j * dim..(j + 1) * dim]
                .iter()
                .zip(xr)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d < best_d {
                best_d = d;
                best = Some(j);
            }
        }
        let j = best?;
        used[j] = true;
        num += best_d + (weights[j] - ref_weights[i]).powi(2);
        den += xr.iter().map(|v| v * v).sum::<f64>() + ref_weights[i] * ref_weights[i];
    }
    Some((num / den).sqrt())
}

/// One degree of a tensor-rule suite.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub degree: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub expected_points: usize,
    /// Deviation from the tensor Gauss rule; odd degrees only.
    pub deviation: Option<f64>,
    pub decm_points: usize,
    pub residual_norm: f64,
    pub quadrature_error: f64,
    pub seconds: f64,
}

impl TableRow {
    pub fn count_matches(&self) -> bool {
        self.weights.len() == self.expected_points
    }
}

/// A table row plus the sparsification history behind it.
pub struct TableRun {
    pub row: TableRow,
    pub trace: Vec<ContinuousRule>,
}

/// Run tensor Lagrange data of one degree through the full pipeline.
pub fn tensor_case(dim: usize, degree: usize, divisions: Option<usize>, params: SolverParams, seed: u64) -> Result<TableRun> {
    let t0 = Instant::now();
    let mesh = benchmark_mesh(dim, degree, divisions)?;
    let cfg = PipelineConfig {
        eps_svd: 0.0,
        seed,
        params,
        ..Default::default()
    };
    let f = Arc::new(Lagrange::new(dim, degree)?);
    let run = Pipeline::new(mesh, SnapshotSource::Analytic(f), cfg)?.run()?;
    let rule = run.cecm.rule.compact();
    let deviation = if degree % 2 == 1 {
        let (gx, gw) = gauss_tensor_rule(dim, degree.div_ceil(2));
        rule_deviation(dim, &rule.points, &rule.weights, &gx, &gw)
    } else {
        None
    };
    let mut trace = Vec::with_capacity(run.cecm.trace.len() + 1);
    trace.push(run.decm_rule.clone());
    trace.extend(run.cecm.trace.iter().cloned());
    let row = TableRow {
        degree,
        points: rule.points.chunks(dim).map(|c| c.to_vec()).collect(),
        weights: rule.weights.clone(),
        expected_points: expected_point_count(dim, degree),
        deviation,
        decm_points: run.report.decm_points,
        residual_norm: run.report.cecm_residual,
        quadrature_error: run.report.quadrature_error,
        seconds: t0.elapsed().as_secs_f64(),
    };
    Ok(TableRun { row, trace })
}

/// Per-point table: one line per rule point, deviation repeated on each line of its degree.
pub fn table_csv(dim: usize, rows: &[TableRow]) -> String {
    let mut s = String::from("degree,point");
    for k in 0..dim {
        let _ = write!(s, ",x{}", k + 1);
    }
    s.push_str(",weight,deviation\n");
    for row in rows {
        let dev = row.deviation.map(|e| format!("{e:.4e}")).unwrap_or_default();
        for (i, (x, w)) in row.points.iter().zip(&row.weights).enumerate() {
            let _ = write!(s, "{},{}", row.degree, i);
            for v in x {
                let _ = write!(s, ",{v:.15e}");
            }
            let _ = writeln!(s, ",{w:.15e},{dev}");
        }
    }
    s
}

/// One line per degree: counts, errors and timing.
pub fn summary_csv(rows: &[TableRow]) -> String {
    let mut s = String::from("degree,decm_points,cecm_points,expected_points,deviation,residual_norm,quadrature_error,seconds\n");
    for r in rows {
        let dev = r.deviation.map(|e| format!("{e:.4e}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.4e},{:.4e},{:.3}",
            r.degree,
            r.decm_points,
            r.weights.len(),
            r.expected_points,
            dev,
            r.residual_norm,
            r.quadrature_error,
            r.seconds
        );
    }
    s
}

/// Positions and weight magnitudes of the active points after every committed step.
pub fn trace_csv(trace: &[ContinuousRule]) -> String {
    let dim = trace.first().map_or(1, |r| r.dim);
    let mut s = String::from("step,active,point");
    for k in 0..dim {
        let _ = write!(s, ",x{}", k + 1);
    }
    s.push_str(",weight\n");
    for (step, rule) in trace.iter().enumerate() {
        let act = rule.active();
        for &g in &act {
            let _ = write!(s, "{step},{},{g}", act.len());
            for v in rule.point(g) {
                let _ = write!(s, ",{v:.15e}");
            }
            let _ = writeln!(s, ",{:.15e}", rule.weights[g]);
        }
    }
    s
}

/// Random `n × m` matrix of rank `rank` with singular values log-spaced from 1 down to `1/cond`.
pub fn random_low_rank(n: usize, m: usize, rank: usize, cond: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let rank = rank.min(n).min(m);
    if rank == 0 {
        return DMatrix::zeros(n, m);
    }
    let gauss = |r: usize, c: usize, rng: &mut dyn rand::RngCore| DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal));
    let u = gauss(n, rank, rng).qr().q();
    let v = gauss(m, rank, rng).qr().q();
    let s = DVector::from_fn(rank, |i, _| {
        let t = if rank > 1 { i as f64 / (rank - 1) as f64 } else { 0.0 };
        cond.powf(-t)
    });
    let mut us = u;
    for (j, sj) in s.iter().enumerate() {
        us.column_mut(j).scale_mut(*sj);
    }
    us * v.transpose()
}

/// Random widths of `p` non-empty column blocks summing to `m` (`p` is capped at `m`).
pub fn random_partition(m: usize, p: usize, rng: &mut impl Rng) -> Vec<usize> {
    let p = p.clamp(1, m.max(1));
    let mut cuts: Vec<usize> = rand::seq::index::sample(rng, m - 1, p - 1).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    let mut widths = Vec::with_capacity(p);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(m)) {
        widths.push(c - prev);
        prev = c;
    }
    widths
}

/// Split `a` into consecutive column blocks of the given widths.
pub fn split_columns(a: &DMatrix<f64>, widths: &[usize]) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(widths.len());
    let mut start = 0;
    for &w in widths {
        out.push(a.columns(start, w).into_owned());
        start += w;
    }
    out
}

/// `‖s − ŝ‖ / ‖s‖` with the shorter spectrum padded by zeros.
pub fn singular_value_difference(s: &DVector<f64>, s_hat: &DVector<f64>) -> f64 {
    let k = s.len().max(s_hat.len());
    let at = |v: &DVector<f64>, i: usize| if i < v.len() { v[i] } else { 0.0 };
    let num: f64 = (0..k).map(|i| (at(s, i) - at(s_hat, i)).powi(2)).sum();
    let den = s.norm();
    if den > 0.0 {
        num.sqrt() / den
    } else {
        num.sqrt()
    }
}

/// Outcome of one SRSVD-vs-dense comparison.
#[derive(Debug, Clone, Serialize)]
pub struct SrsvdCase {
    pub rows: usize,
    pub cols: usize,
    pub true_rank: usize,
    pub cond: f64,
    pub blocks: usize,
    pub rank_dense: usize,
    pub rank_srsvd: usize,
    /// `‖s − ŝ‖ / ‖s‖`, see [`singular_value_difference`].
    pub singular_value_diff: f64,
    pub mean_iterations: f64,
    pub seconds_srsvd: f64,
    pub seconds_dense: f64,
}

impl SrsvdCase {
    pub fn passes(&self, tol: f64) -> bool {
        self.rank_dense == self.rank_srsvd && self.singular_value_diff <= tol
    }
}

/// Compare `srsvd` on the given blocks against `svd_truncated` of the assembled matrix.
pub fn compare_srsvd(blocks: Vec<DMatrix<f64>>, eps: f64, seed: u64) -> Result<SrsvdCase> {
    let src = MemoryBlocks::new(blocks)?;
    let a = src.assemble()?;
    let t0 = Instant::now();
    let (fs, stats) = srsvd(&src, eps, seed)?;
    let seconds_srsvd = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let fd = svd_truncated(&a, eps * a.norm(), None)?;
    let seconds_dense = t1.elapsed().as_secs_f64();
    let diff = singular_value_difference(&fd.singular, &fs.singular);
    let mean_iterations = if stats.iterations.is_empty() {
        0.0
    } else {
        stats.iterations.iter().sum::<usize>() as f64 / stats.iterations.len() as f64
    };
    Ok(SrsvdCase {
        rows: a.nrows(),
        cols: a.ncols(),
        true_rank: 0,
        cond: 0.0,
        blocks: src.block_count(),
        rank_dense: fd.rank,
        rank_srsvd: fs.rank,
        singular_value_diff: diff,
        mean_iterations,
        seconds_srsvd,
        seconds_dense,
    })
}

/// Random matrices up to 2000×600, ranks 5–150, condition up to 1e8, split into 1–10 blocks.
pub fn srsvd_suite(cases: usize, seed: u64) -> Result<Vec<SrsvdCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(cases);
    for c in 0..cases {
        let n = rng.random_range(200..=2000);
        let m = rng.random_range(100..=600);
        let rank = rng.random_range(5..=150usize).min(n).min(m);
        let cond = 10f64.powf(rng.random_range(0.0..=8.0));
        let p = rng.random_range(1..=10);
        let a = random_low_rank(n, m, rank, cond, &mut rng);
        let widths = random_partition(m, p, &mut rng);
        let mut case = compare_srsvd(split_columns(&a, &widths), 0.0, seed.wrapping_add(c as u64))?;
        case.true_rank = rank;
        case.cond = cond;
        out.push(case);
    }
    Ok(out)
}

pub fn srsvd_csv(cases: &[SrsvdCase]) -> String {
    let mut s = String::from(
        "case,rows,cols,true_rank,cond,blocks,rank_dense,rank_srsvd,singular_value_diff,mean_iterations,seconds_srsvd,seconds_dense\n",
    );
    for (i, c) in cases.iter().enumerate() {
        let _ = writeln!(
            s,
            "{i},{},{},{},{:.3e},{},{},{},{:.3e},{:.2},{:.3},{:.3}",
            c.rows,
            c.cols,
            c.true_rank,
            c.cond,
            c.blocks,
            c.rank_dense,
            c.rank_srsvd,
            c.singular_value_diff,
            c.mean_iterations,
            c.seconds_srsvd,
            c.seconds_dense
        );
    }
    s
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Regenerate a suite and write its CSV files into `out`; returns the paths written.
pub fn run_suite(suite: Suite, opts: &BenchOptions, out: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    let name = suite.name();
    let mut written = Vec::new();
    let Some(dim) = suite.dim() else {
        let cases = srsvd_suite(opts.srsvd_cases, opts.seed)?;
        let path = out.join(format!("{name}.csv"));
        write_file(&path, &srsvd_csv(&cases))?;
        written.push(path);
        return Ok(written);
    };
    let degrees = opts.degrees.clone().unwrap_or_else(|| suite.default_degrees());
    let mut rows = Vec::with_capacity(degrees.len());
    for p in degrees {
        let run = tensor_case(dim, p, opts.divisions, opts.params, opts.seed)?;
        let path = out.join(format!("{name}_p{p}_steps.csv"));
        write_file(&path, &trace_csv(&run.trace))?;
        written.push(path);
        rows.push(run.row);
    }
    let path = out.join(format!("{name}.csv"));
    write_file(&path, &table_csv(dim, &rows))?;
    written.push(path);
    let path = out.join(format!("{name}_summary.csv"));
    write_file(&path, &summary_csv(&rows))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_rule_weights_sum_to_volume() {
        let (_, w) = gauss_tensor_rule(3, 2);
        assert_eq!(w.len(), 8);
        assert!((w.iter().sum::<f64>() - 8.0).abs() < 1e-13);
    }

    #[test]
    fn deviation_is_order_independent() {
        let (x, w) = gauss_tensor_rule(2, 2);
        let mut xr = x.clone();
        xr.rotate_left(2);
        let mut wr = w.clone();
        wr.rotate_left(1);
        assert!(rule_deviation(2, &xr, &wr, &x, &w).unwrap() < 1e-15);
        assert!(rule_deviation(2, &x[..6], &w[..3], &x, &w).is_none());
    }

    #[test]
    fn partition_covers_all_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in 1..=10 {
            let w = random_partition(37, p, &mut rng);
            assert_eq!(w.len(), p);
            assert_eq!(w.iter().sum::<usize>(), 37);
            assert!(w.iter().all(|&c| c > 0));
        }
    }

    #[test]
    fn low_rank_has_requested_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_low_rank(40, 30, 6, 1e4, &mut rng);
        let f = svd_truncated(&a, 0.0, None).unwrap();
        assert_eq!(f.rank, 6);
        assert!((f.singular[0] - 1.0).abs() < 1e-12);
        assert!((f.singular[5] - 1e-4).abs() < 1e-14);
    }
}
