//! Sparsify data known only at Gauss points, using element-wise polynomial interpolation.
//!
//! Snapshots of 2D Lagrange polynomials are sampled on a quadratic-quad mesh and handed to the
//! pipeline as a plain matrix, so off-Gauss-point values come from the interpolatory backend.
//!
//! `cargo run --release --example interpolatory_backend -- [degree] [divisions]`

use cecm::basis::sample_integrand;
use cecm::mesh::{ElementKind, Mesh};
use cecm::pipeline::{BackendChoice, Pipeline, PipelineConfig, SnapshotSource};
use cecm::registry::Lagrange;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let degree: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3);
    let div: usize = std::env::args().nth(2).map(|s| s.parse()).transpose()?.unwrap_or(8);
    // q points per direction interpolate tensor polynomials of degree q-1 exactly.
    let q = (degree + 1).max(2);
    let mesh = Mesh::structured(ElementKind::QuadQuadratic, &[-1.0, -1.0], &[1.0, 1.0], &[div, div], q)?;
    let field = mesh.gauss_field()?;
    let a = sample_integrand(&Lagrange::new(2, degree)?, &field);
    println!("snapshot matrix {}x{} on {} elements", a.nrows(), a.ncols(), mesh.element_count());

    let cfg = PipelineConfig {
        eps_svd: 0.0,
        backend: BackendChoice::Interpolatory,
        ..Default::default()
    };
    let run = Pipeline::new(mesh, SnapshotSource::Dense(a), cfg)?.run()?;
    let r = &run.report;
    println!(
        "DECM {} -> CECM {} points, residual {:.2e}, quadrature error {:.2e}, {:.2}s",
        r.decm_points, r.cecm_points, r.cecm_residual, r.quadrature_error, r.seconds_cecm
    );
    let rule = run.cecm.rule.compact();
    for (x, w) in rule.points.chunks(2).zip(&rule.weights) {
        println!("  ({:+.10}, {:+.10})  w = {w:.10}", x[0], x[1]);
    }
    Ok(())
}
