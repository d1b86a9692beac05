//! Exponential-sinusoidal family on a structured hexahedral mesh: DECM versus CECM point counts.
//!
//! `cargo run --release --example expsin_pipeline -- [divisions] [grid] [eps_svd] [q]`

use std::sync::Arc;

use cecm::mesh::{ElementKind, Mesh};
use cecm::pipeline::{Pipeline, PipelineConfig, SnapshotSource};
use cecm::registry::ExpSin3d;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let div: usize = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(10);
    let grid: usize = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(8);
    let eps_svd: f64 = args.get(3).map(|s| s.parse()).transpose()?.unwrap_or(1e-4);
    let q: usize = args.get(4).map(|s| s.parse()).transpose()?.unwrap_or(3);

    let mesh = Mesh::structured(ElementKind::HexTrilinear, &[-1.0; 3], &[1.0; 3], &[div; 3], q)?;
    let cfg = PipelineConfig {
        eps_svd,
        ..Default::default()
    };
    let f = Arc::new(ExpSin3d::grid(grid)?);
    let run = Pipeline::new(mesh, SnapshotSource::Analytic(f), cfg)?.run()?;
    let r = &run.report;
    println!(
        "{} Gauss points, {} snapshot columns, basis {} (constant added: {})",
        r.gauss_points, r.snapshot_columns, r.basis_size, r.constant_added
    );
    println!(
        "DECM {} points -> CECM {} points (stage 1 removed {}, stage 2 removed {})",
        r.decm_points, r.cecm_points, r.stage_removed[0], r.stage_removed[1]
    );
    println!(
        "residual {:.2e}, quadrature error {:.2e}, sum of weights {:.12} (domain {:.12})",
        r.cecm_residual, r.quadrature_error, r.sum_weights, r.total_weight
    );
    println!(
        "timings: basis {:.2}s, DECM {:.2}s, CECM {:.2}s",
        r.seconds_basis, r.seconds_decm, r.seconds_cecm
    );
    Ok(())
}
