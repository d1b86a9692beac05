//! Recover Gauss–Legendre rules from 1D Lagrange polynomial data.
//!
//! `cargo run --release --example gauss_recovery_1d -- [max_degree]`

use std::sync::Arc;

use cecm::mesh::{ElementKind, Mesh};
use cecm::pipeline::{Pipeline, PipelineConfig, SnapshotSource};
use cecm::registry::Lagrange;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let max_degree: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(12);
    for p in 1..=max_degree {
        let mesh = Mesh::structured(ElementKind::LineLinear, &[-1.0], &[1.0], &[200], 4)?;
        let source = SnapshotSource::Analytic(Arc::new(Lagrange::new(1, p)?));
        let cfg = PipelineConfig {
            eps_svd: 0.0,
            ..Default::default()
        };
        let run = Pipeline::new(mesh, source, cfg)?.run()?;
        let rule = run.cecm.rule.compact();
        let mut pts: Vec<(f64, f64)> = rule.points.iter().copied().zip(rule.weights.iter().copied()).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        println!(
            "degree {p:2}: DECM {} -> CECM {} points, residual {:.2e}, {:.2}s",
            run.report.decm_points, run.report.cecm_points, run.report.cecm_residual, run.report.seconds_cecm
        );
        for (x, w) in pts {
            println!("    x = {x:+.15}  w = {w:.15}");
        }
        let el: Vec<String> = run
            .cecm
            .eliminations
            .iter()
            .map(|e| format!("(t={},k={})", e.candidate_trials, e.newton_iters))
            .collect();
        println!("    eliminations: {}", el.join(" "));
    }
    Ok(())
}
