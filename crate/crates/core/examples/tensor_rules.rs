//! Sparsify tensor-product Lagrange data on 2D quads or 3D hexahedra.
//!
//! `cargo run --release --example tensor_rules -- <dim> <degree> [divisions] [backend]`
//! where `backend` is `analytic` (default) or `interpolatory`.

use std::sync::Arc;

use cecm::mesh::{ElementKind, Mesh};
use cecm::pipeline::{expected_point_count, BackendChoice, Pipeline, PipelineConfig, SnapshotSource};
use cecm::registry::Lagrange;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let dim: usize = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(2);
    let degree: usize = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(3);
    let div: usize = args.get(3).map(|s| s.parse()).transpose()?.unwrap_or(if dim == 3 { 10 } else { 20 });
    let backend = match args.get(4).map(String::as_str) {
        Some("interpolatory") => BackendChoice::Interpolatory,
        _ => BackendChoice::Analytic,
    };
    let kind = match dim {
        1 => ElementKind::LineLinear,
        2 => ElementKind::QuadBilinear,
        _ => ElementKind::HexTrilinear,
    };
    let lo = vec![-1.0; dim];
    let hi = vec![1.0; dim];
    let q = if backend == BackendChoice::Interpolatory { (degree + 1).max(2) } else { 2 };
    let mesh = Mesh::structured(kind, &lo, &hi, &vec![div; dim], q)?;
    let cfg = PipelineConfig {
        eps_svd: 0.0,
        backend,
        ..Default::default()
    };
    let run = Pipeline::new(mesh, SnapshotSource::Analytic(Arc::new(Lagrange::new(dim, degree)?)), cfg)?.run()?;
    let r = &run.report;
    println!(
        "d={dim} p={degree}: {} Gauss points, basis {}, DECM {} -> CECM {} (expected {}), residual {:.2e}",
        r.gauss_points,
        r.basis_size,
        r.decm_points,
        r.cecm_points,
        expected_point_count(dim, degree),
        r.cecm_residual
    );
    println!(
        "timings: basis {:.2}s, DECM {:.2}s, CECM {:.2}s; quadrature error {:.2e}",
        r.seconds_basis, r.seconds_decm, r.seconds_cecm, r.quadrature_error
    );
    let rule = run.cecm.rule.compact();
    for (x, w) in rule.points.chunks(dim).zip(&rule.weights) {
        let coords: Vec<String> = x.iter().map(|v| format!("{v:+.12}")).collect();
        println!("  [{}]  w = {w:.12}", coords.join(", "));
    }
    Ok(())
}
