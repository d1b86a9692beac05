//! Command-line front end for building, checking and benchmarking empirical cubature rules.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::Serialize;

use cecm::basis::AnalyticIntegrand;
use cecm::bench::{self, BenchOptions, Suite};
use cecm::cecm::{ContinuousRule, SolverParams};
use cecm::mesh::{ElementKind, Mesh};
use cecm::pipeline::{
    quadrature_error, read_weights, Augmentation, BackendChoice, Pipeline, PipelineConfig, RuleFile, SnapshotSource,
};
use cecm::registry::{ExpSin3d, Lagrange};
use cecm::svdkit::{read_block, srsvd, svd_truncated, write_block, BlockSource, FileBlocks};
use cecm::Error;

#[derive(Parser)]
#[command(name = "cecm", version, about = "Sparse positive cubature rules from snapshot data")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Relative SVD truncation tolerance.
    #[arg(long, global = true, default_value_t = 1e-6)]
    eps_svd: f64,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Threads for dense factorizations (0 = all cores).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Newton iteration budget per elimination attempt.
    #[arg(long, global = true)]
    kmax: Option<usize>,
    /// Newton tolerance on the residual norm.
    #[arg(long, global = true)]
    eps_nr: Option<f64>,
    /// Allowed consecutive negative-weight iterations.
    #[arg(long, global = true)]
    nneg: Option<usize>,
    /// Continuation steps per elimination.
    #[arg(long, global = true)]
    nsteps: Option<usize>,
    /// Skip the final all-points Newton refinement.
    #[arg(long, global = true)]
    no_polish: bool,
}

impl GlobalArgs {
    fn params(&self) -> SolverParams {
        let mut p = SolverParams::default();
        if let Some(k) = self.kmax {
            p.k_max = k;
        }
        if let Some(e) = self.eps_nr {
            p.eps_nr = e;
        }
        if let Some(n) = self.nneg {
            p.n_neg = n;
        }
        if let Some(n) = self.nsteps {
            p.n_steps = n;
        }
        p.polish = !self.no_polish;
        p
    }
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: snapshots, basis, DECM, CECM.
    Rule(RuleArgs),
    /// Sequential randomized SVD of a block manifest.
    Svd(SvdArgs),
    /// Discrete rule only.
    Decm(PipelineArgs),
    /// Integration error of a rule on a snapshot set.
    Verify(VerifyArgs),
    /// Regenerate a benchmark suite.
    Bench(BenchArgs),
    /// Write a structured mesh.
    Meshgen(MeshgenArgs),
}

#[derive(Args, Clone)]
struct SourceArgs {
    /// Built-in integrand: lagrange1d, lagrange2d, lagrange3d or expsin3d.
    #[arg(long, conflicts_with_all = ["manifest", "dense"])]
    function: Option<String>,
    /// Polynomial degree of the Lagrange families.
    #[arg(long, default_value_t = 3)]
    degree: usize,
    /// Parameter samples per direction for expsin3d.
    #[arg(long, default_value_t = 8)]
    grid: usize,
    /// Block manifest (JSON) of the snapshot matrix.
    #[arg(long, conflicts_with = "dense")]
    manifest: Option<PathBuf>,
    /// Single snapshot block file.
    #[arg(long)]
    dense: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct MeshArgs {
    /// Mesh file (JSON).
    #[arg(long, conflicts_with = "box")]
    mesh: Option<PathBuf>,
    /// Box extents, e.g. `-1..1,-1..1`.
    #[arg(long = "box", allow_hyphen_values = true)]
    r#box: Option<String>,
    /// Elements per direction, one value or one per axis.
    #[arg(long, value_delimiter = ',')]
    divisions: Option<Vec<usize>>,
    /// Element kind, e.g. quad-bilinear.
    #[arg(long)]
    kind: Option<String>,
    /// Gauss points per direction.
    #[arg(long)]
    q: Option<usize>,
    /// Full-size 30³ mesh with 3×3×3 Gauss points for expsin3d.
    #[arg(long)]
    full: bool,
}

#[derive(Args, Clone)]
struct PipelineArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    mesh: MeshArgs,
    /// analytic or interpolatory; defaults to analytic for built-in integrands.
    #[arg(long)]
    backend: Option<String>,
    /// basis, column or column=<value>.
    #[arg(long, default_value = "basis")]
    augment: String,
    /// Search the whole mesh when neighbor search fails to locate a point.
    #[arg(long)]
    global_fallback: bool,
}

#[derive(Args)]
struct RuleArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct SvdArgs {
    /// Block manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    /// Compare against the dense SVD of the assembled matrix.
    #[arg(long)]
    check_dense: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Rule file written by `rule` or `decm`.
    #[arg(long)]
    rule: PathBuf,
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    mesh: MeshArgs,
    /// Replacement Gauss weights (CUBW file).
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Exit with status 3 when the relative error exceeds this value.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    /// table1, table2, table3 or srsvd.
    suite: String,
    /// Degrees to run, comma separated.
    #[arg(long, value_delimiter = ',')]
    degrees: Option<Vec<usize>>,
    /// Elements per direction.
    #[arg(long)]
    divisions: Option<usize>,
    /// Random matrices in the srsvd suite.
    #[arg(long, default_value_t = 20)]
    cases: usize,
}

#[derive(Args)]
struct MeshgenArgs {
    /// Box extents, e.g. `0..2,0..1`.
    #[arg(long = "box", allow_hyphen_values = true)]
    r#box: String,
    /// Elements per direction, one value or one per axis.
    #[arg(long, value_delimiter = ',')]
    divisions: Vec<usize>,
    /// Element kind; defaults to the linear kind of the box dimension.
    #[arg(long)]
    kind: Option<String>,
    /// Gauss points per direction.
    #[arg(long, default_value_t = 2)]
    q: usize,
    /// Output file name inside `--out`.
    #[arg(long, default_value = "mesh.json")]
    name: String,
}

/// An error tagged with the pipeline stage it came from.
struct Failure {
    stage: &'static str,
    error: Error,
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure>;
}

impl<T> Stage<T> for cecm::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|error| Failure { stage, error })
    }
}

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_NO_POSITIVE: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    cecm::linalg::set_threads(cli.global.threads);
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error [{}]: {}", f.stage, f.error);
            ExitCode::from(if f.error.is_input_error() { EXIT_INPUT } else { EXIT_NUMERICAL })
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8, Failure> {
    let g = &cli.global;
    g.params().validate().stage("arguments")?;
    match &cli.command {
        Command::Rule(a) => cmd_rule(g, &a.pipeline),
        Command::Svd(a) => cmd_svd(g, a),
        Command::Decm(a) => cmd_decm(g, a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(g, a),
        Command::Meshgen(a) => cmd_meshgen(g, a),
    }
}

fn parse_box(spec: &str) -> cecm::Result<(Vec<f64>, Vec<f64>)> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for axis in spec.split(',') {
        let (a, b) = axis
            .split_once("..")
            .ok_or_else(|| Error::input(format!("box axis `{axis}` is not of the form lo..hi")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::input(format!("box bound `{t}` is not a number")))
        };
        lo.push(parse(a)?);
        hi.push(parse(b)?);
    }
    Ok((lo, hi))
}

fn default_kind(dim: usize) -> cecm::Result<ElementKind> {
    match dim {
        1 => Ok(ElementKind::LineLinear),
        2 => Ok(ElementKind::QuadBilinear),
        3 => Ok(ElementKind::HexTrilinear),
        _ => Err(Error::input(format!("box has {dim} axes; expected 1, 2 or 3"))),
    }
}

fn structured(spec: &str, divisions: &[usize], kind: Option<&str>, q: usize) -> cecm::Result<Mesh> {
    let (lo, hi) = parse_box(spec)?;
    let kind = match kind {
        Some(k) => ElementKind::parse(k).ok_or_else(|| Error::input(format!("unknown element kind `{k}`")))?,
        None => default_kind(lo.len())?,
    };
    let div = match divisions {
        [] => return Err(Error::input("--divisions is required")),
        [n] => vec![*n; lo.len()],
        list => list.to_vec(),
    };
    Mesh::structured(kind, &lo, &hi, &div, q)
}

/// Mesh from a file, a box spec, or the default mesh of a built-in integrand.
fn build_mesh(m: &MeshArgs, src: &SourceArgs) -> cecm::Result<Mesh> {
    if let Some(path) = &m.mesh {
        return Mesh::load(path);
    }
    if let Some(spec) = &m.r#box {
        let div = m.divisions.clone().unwrap_or_default();
        return structured(spec, &div, m.kind.as_deref(), m.q.unwrap_or(2));
    }
    let Some(name) = &src.function else {
        return Err(Error::input("snapshot files need --mesh or --box"));
    };
    let div = m.divisions.as_ref().and_then(|d| d.first().copied());
    match name.as_str() {
        "lagrange1d" | "lagrange2d" | "lagrange3d" => {
            let dim = function_dim(name)?;
            match m.q {
                Some(q) => {
                    let d = div.unwrap_or(if dim == 1 { 200 } else { 20 });
                    Mesh::structured(default_kind(dim)?, &vec![-1.0; dim], &vec![1.0; dim], &vec![d; dim], q)
                }
                None => bench::benchmark_mesh(dim, src.degree, div),
            }
        }
        "expsin3d" => {
            let d = div.unwrap_or(if m.full { 30 } else { 10 });
            Mesh::structured(ElementKind::HexTrilinear, &[-1.0; 3], &[1.0; 3], &[d; 3], m.q.unwrap_or(3))
        }
        other => Err(Error::input(format!("unknown function `{other}`"))),
    }
}

fn function_dim(name: &str) -> cecm::Result<usize> {
    match name {
        "lagrange1d" => Ok(1),
        "lagrange2d" => Ok(2),
        "lagrange3d" | "expsin3d" => Ok(3),
        other => Err(Error::input(format!("unknown function `{other}`"))),
    }
}

fn build_source(src: &SourceArgs) -> cecm::Result<SnapshotSource> {
    if let Some(name) = &src.function {
        let f: Arc<dyn AnalyticIntegrand> = match name.as_str() {
            "expsin3d" => Arc::new(ExpSin3d::grid(src.grid)?),
            other => Arc::new(Lagrange::new(function_dim(other)?, src.degree)?),
        };
        return Ok(SnapshotSource::Analytic(f));
    }
    if let Some(path) = &src.manifest {
        return Ok(SnapshotSource::Blocks(Box::new(FileBlocks::open(path)?)));
    }
    if let Some(path) = &src.dense {
        return Ok(SnapshotSource::Dense(read_block(path)?));
    }
    Err(Error::input("one of --function, --manifest or --dense is required"))
}

fn parse_augment(s: &str) -> cecm::Result<Augmentation> {
    match s {
        "basis" => Ok(Augmentation::Basis),
        "column" => Ok(Augmentation::Column(None)),
        _ => {
            let v = s
                .strip_prefix("column=")
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| Error::input(format!("--augment `{s}`: expected basis, column or column=<value>")))?;
            Ok(Augmentation::Column(Some(v)))
        }
    }
}

fn build_pipeline(g: &GlobalArgs, a: &PipelineArgs) -> Result<Pipeline, Failure> {
    let mesh = build_mesh(&a.mesh, &a.source).stage("mesh")?;
    let source = build_source(&a.source).stage("snapshots")?;
    let backend = match a.backend.as_deref() {
        Some("analytic") => BackendChoice::Analytic,
        Some("interpolatory") => BackendChoice::Interpolatory,
        Some(other) => return Err(Error::input(format!("unknown backend `{other}`"))).stage("arguments"),
        None if matches!(source, SnapshotSource::Analytic(_)) => BackendChoice::Analytic,
        None => BackendChoice::Interpolatory,
    };
    let config = PipelineConfig {
        eps_svd: g.eps_svd,
        seed: g.seed,
        params: g.params(),
        backend,
        augmentation: parse_augment(&a.augment).stage("arguments")?,
        global_fallback: a.global_fallback,
    };
    Pipeline::new(mesh, source, config).stage("setup")
}

fn ensure_out(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Io {
            path: dir.display().to_string(),
            source: e,
        })
        .stage("output")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from).stage("output")?;
    std::fs::write(path, text)
        .map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })
        .stage("output")
}

fn cmd_rule(g: &GlobalArgs, a: &PipelineArgs) -> Result<u8, Failure> {
    let pl = build_pipeline(g, a)?;
    let t0 = Instant::now();
    let (basis, backend) = pl.basis().stage("basis")?;
    let t_basis = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let (model, drule) = pl.discrete_stage(basis, backend).stage("decm")?;
    let t_decm = t1.elapsed().as_secs_f64();
    let run = pl.continuous_stage(model, drule, t_basis, t_decm).stage("cecm")?;
    ensure_out(&g.out)?;
    let rule = RuleFile::from_rule(&run.cecm.rule, run.cecm.residual_norm, &run.cecm.eliminations);
    rule.save(&g.out.join("rule.json")).stage("output")?;
    write_json(&g.out.join("report.json"), &run.report)?;
    let r = &run.report;
    println!(
        "gauss points {}, basis {}, DECM {} -> CECM {} points",
        r.gauss_points, r.basis_size, r.decm_points, r.cecm_points
    );
    println!(
        "residual {:.3e}, quadrature error {:.3e}, sum of weights {:.12} / {:.12}",
        r.cecm_residual, r.quadrature_error, r.sum_weights, r.total_weight
    );
    if r.no_positive_intermediate {
        eprintln!("warning: no all-positive intermediate rule; wrote the discrete rule");
        return Ok(EXIT_NO_POSITIVE);
    }
    Ok(0)
}

#[derive(Serialize)]
struct DecmOutput {
    indices: Vec<usize>,
    #[serde(flatten)]
    rule: RuleFile,
}

fn cmd_decm(g: &GlobalArgs, a: &PipelineArgs) -> Result<u8, Failure> {
    let pl = build_pipeline(g, a)?;
    let (basis, backend) = pl.basis().stage("basis")?;
    let (model, drule) = pl.discrete_stage(basis, backend).stage("decm")?;
    let cr = ContinuousRule::from_discrete(&drule, &pl.field);
    let residual = cecm::cecm::residual(&cr, &model).stage("decm")?.norm();
    ensure_out(&g.out)?;
    let out = DecmOutput {
        indices: drule.indices.clone(),
        rule: RuleFile::from_rule(&cr, residual, &[]),
    };
    write_json(&g.out.join("decm.json"), &out)?;
    println!(
        "basis {}, DECM {} points, residual {:.3e}",
        model.basis.len(),
        drule.indices.len(),
        residual
    );
    Ok(0)
}

#[derive(Serialize)]
struct SvdReport {
    rows: usize,
    cols: usize,
    blocks: usize,
    rank: usize,
    singular_values: Vec<f64>,
    truncation_error: f64,
    added: Vec<usize>,
    iterations: Vec<usize>,
    seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dense_rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dense_singular_value_diff: Option<f64>,
}

fn cmd_svd(g: &GlobalArgs, a: &SvdArgs) -> Result<u8, Failure> {
    let blocks = FileBlocks::open(&a.manifest).stage("input")?;
    let t0 = Instant::now();
    let (f, stats) = srsvd(&blocks, g.eps_svd, g.seed).stage("srsvd")?;
    let seconds = t0.elapsed().as_secs_f64();
    let mut report = SvdReport {
        rows: blocks.nrows(),
        cols: blocks.total_cols(),
        blocks: blocks.block_count(),
        rank: f.rank,
        singular_values: f.singular.iter().copied().collect(),
        truncation_error: f.truncation_error,
        added: stats.added.clone(),
        iterations: stats.iterations.clone(),
        seconds,
        dense_rank: None,
        dense_singular_value_diff: None,
    };
    if a.check_dense {
        let m = blocks.assemble().stage("input")?;
        let d = svd_truncated(&m, g.eps_svd * m.norm(), None).stage("dense svd")?;
        report.dense_rank = Some(d.rank);
        report.dense_singular_value_diff = Some(bench::singular_value_difference(&d.singular, &f.singular));
    }
    ensure_out(&g.out)?;
    write_block(&g.out.join("U.cubb"), &f.left).stage("output")?;
    write_block(&g.out.join("S.cubb"), &DMatrix::from_column_slice(f.rank, 1, f.singular.as_slice())).stage("output")?;
    write_block(&g.out.join("V.cubb"), &f.right).stage("output")?;
    write_json(&g.out.join("svd_report.json"), &report)?;
    println!(
        "{}x{} in {} blocks: rank {}, iterations per block {:?}, {:.3}s",
        report.rows, report.cols, report.blocks, report.rank, report.iterations, seconds
    );
    if let (Some(r), Some(d)) = (report.dense_rank, report.dense_singular_value_diff) {
        println!("dense check: rank {r}, relative singular value difference {d:.3e}");
    }
    Ok(0)
}

fn cmd_verify(a: &VerifyArgs) -> Result<u8, Failure> {
    let rule = RuleFile::load(&a.rule).stage("input")?;
    let mesh = build_mesh(&a.mesh, &a.source).stage("mesh")?;
    let source = build_source(&a.source).stage("snapshots")?;
    if rule.dim != mesh.dim() {
        return Err(Error::input(format!(
            "rule is {}-dimensional but the mesh is {}-dimensional",
            rule.dim,
            mesh.dim()
        )))
        .stage("input");
    }
    let mut field = mesh.gauss_field().stage("mesh")?;
    if let Some(path) = &a.weights {
        let w = read_weights(path).stage("input")?;
        if w.len() != field.len() {
            return Err(Error::input(format!(
                "weight file has {} entries but the mesh has {} Gauss points",
                w.len(),
                field.len()
            )))
            .stage("input");
        }
        field.weights = w;
    }
    let err = quadrature_error(&mesh, &field, &source, &rule.flat_points(), &rule.weights).stage("verify")?;
    let sum_w: f64 = rule.weights.iter().sum();
    println!("relative integration error {err:.6e}");
    println!("sum of weights {sum_w:.15} vs Gauss total {:.15}", field.total_weight());
    match a.tol {
        Some(tol) if err.is_nan() || err > tol => {
            eprintln!("error exceeds tolerance {tol:e}");
            Ok(EXIT_NUMERICAL)
        }
        _ => Ok(0),
    }
}

fn cmd_bench(g: &GlobalArgs, a: &BenchArgs) -> Result<u8, Failure> {
    let suite = Suite::parse(&a.suite)
        .ok_or_else(|| Error::input(format!("unknown suite `{}`; expected table1, table2, table3 or srsvd", a.suite)))
        .stage("arguments")?;
    let opts = BenchOptions {
        degrees: a.degrees.clone(),
        divisions: a.divisions,
        params: g.params(),
        seed: g.seed,
        srsvd_cases: a.cases,
    };
    let files = bench::run_suite(suite, &opts, &g.out).stage(suite.name())?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(0)
}

fn cmd_meshgen(g: &GlobalArgs, a: &MeshgenArgs) -> Result<u8, Failure> {
    let mesh = structured(&a.r#box, &a.divisions, a.kind.as_deref(), a.q).stage("mesh")?;
    ensure_out(&g.out)?;
    let path = g.out.join(&a.name);
    mesh.save(&path).stage("output")?;
    println!(
        "{}: {} elements, {} nodes, {} Gauss points per element",
        path.display(),
        mesh.element_count(),
        mesh.node_count(),
        mesh.points_per_element()
    );
    Ok(0)
}
