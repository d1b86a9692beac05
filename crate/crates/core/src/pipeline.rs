//! End-to-end orchestration: snapshots → basis → DECM → CECM, plus verification and rule files.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{append_constant_column, sample_integrand, AnalyticIntegrand, BasisModel, Snapshots, WithConstant};
use crate::cecm::{sparsify_global, Backend, CecmOutcome, ContinuousRule, CubatureModel, Elimination, SolverParams};
use crate::decm::{decm, DiscreteRule};
use crate::error::{Error, Result};
use crate::mesh::{GaussField, InterpolantCache, LocateOptions, Mesh};
use crate::svdkit::BlockSource;

/// Where the integrand samples come from.
pub enum SnapshotSource {
    /// Closed-form integrand; enables the analytic backend.
    Analytic(Arc<dyn AnalyticIntegrand>),
    /// Dense snapshot matrix `A_FE`.
    Dense(DMatrix<f64>),
    /// Column-partitioned snapshot matrix.
    Blocks(Box<dyn BlockSource>),
}

/// Which evaluator the sparsification uses off the Gauss points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendChoice {
    Analytic,
    Interpolatory,
}

/// How constants are brought into the span of the basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Augmentation {
    /// Prepend the W-normalized component of the all-ones vector orthogonal to `range(U)`.
    Basis,
    /// Append a constant column `c·1` to the snapshots; `None` uses `‖A‖_W / sqrt(ΣW)`.
    Column(Option<f64>),
}

#[derive(Debug, Clone, Copy)]
pub struct PipelineConfig {
    pub eps_svd: f64,
    pub seed: u64,
    pub params: SolverParams,
    pub backend: BackendChoice,
    pub augmentation: Augmentation,
    pub global_fallback: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            eps_svd: 1e-6,
            seed: 0,
            params: SolverParams::default(),
            backend: BackendChoice::Analytic,
            augmentation: Augmentation::Basis,
            global_fallback: false,
        }
    }
}

/// Summary of one pipeline run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleReport {
    pub gauss_points: usize,
    pub snapshot_columns: usize,
    pub basis_size: usize,
    pub constant_added: bool,
    pub decm_points: usize,
    pub decm_residual: f64,
    pub cecm_points: usize,
    pub cecm_residual: f64,
    pub stage_removed: [usize; 2],
    pub sum_weights: f64,
    pub total_weight: f64,
    /// `‖Σ A(x_i)·w_i − A_FEᵀ·W_FE‖ / ‖A_FEᵀ·W_FE‖` of the final rule.
    pub quadrature_error: f64,
    pub no_positive_intermediate: bool,
    pub seconds_basis: f64,
    pub seconds_decm: f64,
    pub seconds_cecm: f64,
}

/// Artifacts of [`Pipeline::run`].
pub struct RuleRun {
    pub model: CubatureModel,
    pub decm: DiscreteRule,
    pub decm_rule: ContinuousRule,
    pub cecm: CecmOutcome,
    pub report: RuleReport,
}

/// A mesh plus snapshot source, ready to produce cubature rules.
pub struct Pipeline {
    pub mesh: Arc<Mesh>,
    pub field: Arc<GaussField>,
    pub source: SnapshotSource,
    pub config: PipelineConfig,
}

impl Pipeline {
    pub fn new(mesh: Mesh, source: SnapshotSource, config: PipelineConfig) -> Result<Self> {
        let field = mesh.gauss_field()?;
        let rows = match &source {
            SnapshotSource::Analytic(f) => {
                if f.dim() != mesh.dim() {
                    return Err(Error::input(format!(
                        "integrand is {}-dimensional but the mesh is {}-dimensional",
                        f.dim(),
                        mesh.dim()
                    )));
                }
                field.len()
            }
            SnapshotSource::Dense(a) => a.nrows(),
            SnapshotSource::Blocks(b) => b.nrows(),
        };
        if rows != field.len() {
            return Err(Error::input(format!(
                "snapshots have {rows} rows but the mesh has {} Gauss points",
                field.len()
            )));
        }
        if config.backend == BackendChoice::Analytic && !matches!(source, SnapshotSource::Analytic(_)) {
            return Err(Error::input("the analytic backend needs a closed-form integrand"));
        }
        if !(0.0..=1.0).contains(&config.eps_svd) {
            return Err(Error::param("eps_svd", "must lie in [0, 1]"));
        }
        config.params.validate()?;
        Ok(Pipeline {
            mesh: Arc::new(mesh),
            field: Arc::new(field),
            source,
            config,
        })
    }

    fn snapshot_columns(&self) -> usize {
        match &self.source {
            SnapshotSource::Analytic(f) => f.ncols(),
            SnapshotSource::Dense(a) => a.ncols(),
            SnapshotSource::Blocks(b) => b.total_cols(),
        }
    }

    /// Weighted SVD and constant augmentation; returns the basis and the evaluation backend.
    pub fn basis(&self) -> Result<(BasisModel, Backend)> {
        let w = &self.field.weights;
        let seed = self.config.seed;
        let eps = self.config.eps_svd;
        let column = match self.config.augmentation {
            Augmentation::Column(c) => Some(c),
            Augmentation::Basis => None,
        };
        let (basis, integrand): (BasisModel, Option<Arc<dyn AnalyticIntegrand>>) = match &self.source {
            SnapshotSource::Analytic(f) => {
                let a = sample_integrand(f.as_ref(), &self.field);
                match column {
                    Some(c) => {
                        let aug = append_constant_column(&a, w, c);
                        let value = aug[(0, a.ncols())];
                        let wrapped: Arc<dyn AnalyticIntegrand> = Arc::new(WithConstant {
                            inner: SharedIntegrand(f.clone()),
                            value,
                        });
                        (BasisModel::compute(Snapshots::Dense(&aug), w, eps, seed)?, Some(wrapped))
                    }
                    None => (BasisModel::compute(Snapshots::Dense(&a), w, eps, seed)?, Some(f.clone())),
                }
            }
            SnapshotSource::Dense(a) => match column {
                Some(c) => {
                    let aug = append_constant_column(a, w, c);
                    (BasisModel::compute(Snapshots::Dense(&aug), w, eps, seed)?, None)
                }
                None => (BasisModel::compute(Snapshots::Dense(a), w, eps, seed)?, None),
            },
            SnapshotSource::Blocks(b) => match column {
                Some(c) => {
                    let ext = WithConstantBlock::new(b.as_ref(), w, c)?;
                    (BasisModel::compute(Snapshots::Blocks(&ext), w, eps, seed)?, None)
                }
                None => (BasisModel::compute(Snapshots::Blocks(b.as_ref()), w, eps, seed)?, None),
            },
        };
        let basis = basis.augment_constant();
        let backend = match (self.config.backend, integrand) {
            (BackendChoice::Analytic, Some(f)) => Backend::Analytic(f),
            _ => Backend::Interpolatory,
        };
        Ok((basis, backend))
    }

    /// Steps up to and including the discrete rule.
    pub fn run_decm(&self) -> Result<(CubatureModel, DiscreteRule, f64, f64)> {
        let t0 = Instant::now();
        let (basis, backend) = self.basis()?;
        let t_basis = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let (model, rule) = self.discrete_stage(basis, backend)?;
        Ok((model, rule, t_basis, t1.elapsed().as_secs_f64()))
    }

    /// DECM on a computed basis; also builds the evaluation model for the continuous stage.
    pub fn discrete_stage(&self, basis: BasisModel, backend: Backend) -> Result<(CubatureModel, DiscreteRule)> {
        let rule = decm(&basis.u, &self.field.weights)?;
        let mut model = CubatureModel::new(self.mesh.clone(), self.field.clone(), Arc::new(basis), backend)?;
        model.locate = LocateOptions {
            global_fallback: self.config.global_fallback,
        };
        Ok((model, rule))
    }

    /// Two-stage CECM from a discrete rule, plus the final report.
    pub fn continuous_stage(&self, model: CubatureModel, drule: DiscreteRule, t_basis: f64, t_decm: f64) -> Result<RuleRun> {
        let start = ContinuousRule::from_discrete(&drule, &self.field);
        let t2 = Instant::now();
        let out = sparsify_global(&start, &self.config.params, &model)?;
        let t_cecm = t2.elapsed().as_secs_f64();
        let final_rule = out.rule.compact();
        let qerr = self.quadrature_error(&final_rule.points, &final_rule.weights)?;
        let (_, r0) = crate::cecm::newton::evaluate_active(&start, &model)?;
        let report = RuleReport {
            gauss_points: self.field.len(),
            snapshot_columns: self.snapshot_columns(),
            basis_size: model.basis.len(),
            constant_added: model.basis.constant_column.is_some(),
            decm_points: drule.indices.len(),
            decm_residual: r0.norm(),
            cecm_points: final_rule.len(),
            cecm_residual: out.residual_norm,
            stage_removed: out.stage_removed,
            sum_weights: final_rule.sum_weights(),
            total_weight: self.field.total_weight(),
            quadrature_error: qerr,
            no_positive_intermediate: out.no_positive_intermediate,
            seconds_basis: t_basis,
            seconds_decm: t_decm,
            seconds_cecm: t_cecm,
        };
        Ok(RuleRun {
            model,
            decm: drule,
            decm_rule: start,
            cecm: out,
            report,
        })
    }

    /// Full pipeline: basis, DECM and two-stage CECM.
    pub fn run(&self) -> Result<RuleRun> {
        let (model, drule, t_basis, t_decm) = self.run_decm()?;
        self.continuous_stage(model, drule, t_basis, t_decm)
    }

    /// Relative error of the rule `(points, weights)` on the full snapshot set.
    pub fn quadrature_error(&self, points: &[f64], weights: &[f64]) -> Result<f64> {
        quadrature_error(&self.mesh, &self.field, &self.source, points, weights)
    }
}

/// Adapter so an `Arc<dyn AnalyticIntegrand>` can be wrapped generically.
struct SharedIntegrand(Arc<dyn AnalyticIntegrand>);

impl AnalyticIntegrand for SharedIntegrand {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn ncols(&self) -> usize {
        self.0.ncols()
    }
    fn eval(&self, x: &[f64], values: &mut [f64], grads: &mut [f64]) {
        self.0.eval(x, values, grads)
    }
}

/// Block source with an extra one-column block `c·1` appended.
struct WithConstantBlock<'a> {
    inner: &'a dyn BlockSource,
    value: f64,
}

impl<'a> WithConstantBlock<'a> {
    fn new(inner: &'a dyn BlockSource, w: &[f64], c: Option<f64>) -> Result<Self> {
        let value = match c {
            Some(c) => c,
            None => {
                let mut norm2 = 0.0;
                for i in 0..inner.block_count() {
                    let b = inner.load(i)?;
                    for (g, wg) in w.iter().enumerate() {
                        norm2 += wg * b.row(g).norm_squared();
                    }
                }
                let vol: f64 = w.iter().sum();
                let v = (norm2 / vol).sqrt();
                if v > 0.0 {
                    v
                } else {
                    1.0
                }
            }
        };
        Ok(WithConstantBlock { inner, value })
    }
}

impl BlockSource for WithConstantBlock<'_> {
    fn nrows(&self) -> usize {
        self.inner.nrows()
    }
    fn block_count(&self) -> usize {
        self.inner.block_count() + 1
    }
    fn block_cols(&self, i: usize) -> usize {
        if i < self.inner.block_count() {
            self.inner.block_cols(i)
        } else {
            1
        }
    }
    fn load(&self, i: usize) -> Result<DMatrix<f64>> {
        if i < self.inner.block_count() {
            self.inner.load(i)
        } else {
            Ok(DMatrix::from_element(self.nrows(), 1, self.value))
        }
    }
}

/// `‖Σ_i A(x_i)·w_i − A_FEᵀ·W_FE‖ / ‖A_FEᵀ·W_FE‖`.
///
/// Data snapshots are evaluated off the Gauss points by element-wise interpolation of `A_FE`.
pub fn quadrature_error(
    mesh: &Mesh,
    field: &GaussField,
    source: &SnapshotSource,
    points: &[f64],
    weights: &[f64],
) -> Result<f64> {
    let d = mesh.dim();
    if points.len() != weights.len() * d {
        return Err(Error::input(format!(
            "rule has {} coordinates for {} weights in dimension {d}",
            points.len(),
            weights.len()
        )));
    }
    let w_fe = DVector::from_column_slice(&field.weights);
    match source {
        SnapshotSource::Analytic(f) => {
            let n = f.ncols();
            let mut exact = DVector::zeros(n);
            let mut approx = DVector::zeros(n);
            let mut vals = vec![0.0; n];
            let mut grads = vec![0.0; n * d];
            for g in 0..field.len() {
                f.eval(field.point(g), &mut vals, &mut grads);
                exact.axpy(field.weights[g], &DVector::from_column_slice(&vals), 1.0);
            }
            for (i, wi) in weights.iter().enumerate() {
                f.eval(&points[i * d..(i + 1) * d], &mut vals, &mut grads);
                approx.axpy(*wi, &DVector::from_column_slice(&vals), 1.0);
            }
            Ok((approx - &exact).norm() / exact.norm())
        }
        SnapshotSource::Dense(a) => {
            let shapes = rule_shapes(mesh, field, points, weights.len())?;
            let exact = a.transpose() * &w_fe;
            let approx = interpolated_integral(a, field, &shapes, weights);
            Ok((approx - &exact).norm() / exact.norm())
        }
        SnapshotSource::Blocks(b) => {
            let shapes = rule_shapes(mesh, field, points, weights.len())?;
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..b.block_count() {
                let a = b.load(i)?;
                let exact = a.transpose() * &w_fe;
                let approx = interpolated_integral(&a, field, &shapes, weights);
                num += (approx - &exact).norm_squared();
                den += exact.norm_squared();
            }
            Ok((num / den).sqrt())
        }
    }
}

fn rule_shapes(mesh: &Mesh, field: &GaussField, points: &[f64], n: usize) -> Result<Vec<(usize, DVector<f64>)>> {
    let d = mesh.dim();
    let cache = InterpolantCache::new();
    (0..n)
        .map(|i| {
            let x = &points[i * d..(i + 1) * d];
            let e = mesh
                .locate(x, None, 0.0, LocateOptions::default())
                .ok_or_else(|| Error::input(format!("rule point {i} lies outside the mesh")))?;
            Ok((e, cache.get(mesh, field, e)?.shape_at(x)))
        })
        .collect()
}

fn interpolated_integral(
    a: &DMatrix<f64>,
    field: &GaussField,
    shapes: &[(usize, DVector<f64>)],
    weights: &[f64],
) -> DVector<f64> {
    let mut out = DVector::zeros(a.ncols());
    for ((e, n), w) in shapes.iter().zip(weights) {
        let rows = field.element_rows(*e);
        let ae = a.rows(rows.start, rows.len());
        out += (ae.transpose() * n) * *w;
    }
    out
}

/// On-disk cubature rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleFile {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub sum_weights: f64,
    pub residual_norm: f64,
    pub eliminations: Vec<Elimination>,
}

impl RuleFile {
    pub fn from_rule(rule: &ContinuousRule, residual_norm: f64, eliminations: &[Elimination]) -> Self {
        let r = rule.compact();
        RuleFile {
            dim: r.dim,
            points: r.points.chunks(r.dim).map(|c| c.to_vec()).collect(),
            weights: r.weights.clone(),
            sum_weights: r.sum_weights(),
            residual_norm,
            eliminations: eliminations.to_vec(),
        }
    }

    pub fn flat_points(&self) -> Vec<f64> {
        self.points.iter().flatten().copied().collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let rule: RuleFile = serde_json::from_str(&text)?;
        if rule.points.len() != rule.weights.len() || rule.points.iter().any(|p| p.len() != rule.dim) {
            return Err(Error::input(format!("{}: inconsistent point/weight arrays", path.display())));
        }
        Ok(rule)
    }
}

pub const WEIGHTS_MAGIC: &[u8; 4] = b"CUBW";

/// Write a `CUBW` weight vector.
pub fn write_weights(path: &Path, w: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(12 + 8 * w.len());
    bytes.extend_from_slice(WEIGHTS_MAGIC);
    bytes.extend_from_slice(&(w.len() as u64).to_le_bytes());
    for v in w {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Read a `CUBW` weight vector.
pub fn read_weights(path: &Path) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let fmt = |offset: u64, reason: &str| Error::Format {
        path: path.display().to_string(),
        offset,
        reason: reason.to_string(),
    };
    if bytes.len() < 12 {
        return Err(fmt(bytes.len() as u64, "truncated header"));
    }
    if &bytes[..4] != WEIGHTS_MAGIC {
        return Err(fmt(0, "bad magic, expected CUBW"));
    }
    let n = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
    if bytes.len() != 12 + 8 * n {
        return Err(fmt(12, "payload length does not match the declared count"));
    }
    Ok(bytes[12..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Number of points the sparsification is expected to reach for tensor Lagrange data of
/// degree `p` in dimension `d`: `((p+1)/2)^d` for odd `p`, `((p+2)/2)^d` for even `p`.
pub fn expected_point_count(d: usize, p: usize) -> usize {
    let per_dir = if p % 2 == 1 { p.div_ceil(2) } else { (p + 2) / 2 };
    per_dir.pow(d as u32)
}
