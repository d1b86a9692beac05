use std::sync::Arc;

use cecm::basis::sample_integrand;
use cecm::cecm::ContinuousRule;
use cecm::mesh::{ElementKind, Mesh};
use cecm::pipeline::{
    expected_point_count, quadrature_error, read_weights, write_weights, Augmentation, BackendChoice, Pipeline,
    PipelineConfig, RuleFile, SnapshotSource,
};
use cecm::registry::{ExpSin3d, Lagrange};
use cecm::svdkit::MemoryBlocks;
use cecm::Error;

fn line(n: usize, q: usize) -> Mesh {
    Mesh::structured(ElementKind::LineLinear, &[-1.0], &[1.0], &[n], q).unwrap()
}

fn analytic(mesh: Mesh, f: Lagrange, eps: f64) -> Pipeline {
    let cfg = PipelineConfig {
        eps_svd: eps,
        ..PipelineConfig::default()
    };
    Pipeline::new(mesh, SnapshotSource::Analytic(Arc::new(f)), cfg).unwrap()
}

#[test]
fn gauss_rule_integrates_degree_five_snapshots() {
    let pl = analytic(line(30, 4), Lagrange::new(1, 5).unwrap(), 0.0);
    let a = 0.6f64.sqrt();
    let err = pl.quadrature_error(&[-a, 0.0, a], &[5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0]).unwrap();
    assert!(err <= 1e-12, "{err}");
}

#[test]
fn zeroed_weight_breaks_the_rule() {
    let pl = analytic(line(30, 4), Lagrange::new(1, 5).unwrap(), 0.0);
    let a = 0.6f64.sqrt();
    let err = pl.quadrature_error(&[-a, 0.0, a], &[5.0 / 9.0, 0.0, 5.0 / 9.0]).unwrap();
    assert!(err > 1e-2, "{err}");
}

#[test]
fn decm_rule_error_is_of_order_eps_svd() {
    let mesh = Mesh::structured(ElementKind::HexTrilinear, &[-1.0; 3], &[1.0; 3], &[4, 4, 4], 2).unwrap();
    let eps = 1e-3;
    let cfg = PipelineConfig {
        eps_svd: eps,
        ..PipelineConfig::default()
    };
    let pl = Pipeline::new(mesh, SnapshotSource::Analytic(Arc::new(ExpSin3d::grid(3).unwrap())), cfg).unwrap();
    let (_, drule, _, _) = pl.run_decm().unwrap();
    let start = ContinuousRule::from_discrete(&drule, &pl.field);
    let err = pl.quadrature_error(&start.points, &start.weights).unwrap();
    assert!(err < 10.0 * eps, "{err}");
}

#[test]
fn dense_and_block_sources_agree() {
    let mesh = Mesh::structured(ElementKind::QuadQuadratic, &[-1.0, -1.0], &[1.0, 1.0], &[2, 2], 4).unwrap();
    let field = mesh.gauss_field().unwrap();
    let a = sample_integrand(&Lagrange::new(2, 3).unwrap(), &field);
    let cfg = PipelineConfig {
        eps_svd: 0.0,
        backend: BackendChoice::Interpolatory,
        ..PipelineConfig::default()
    };
    let dense = Pipeline::new(mesh.clone(), SnapshotSource::Dense(a.clone()), cfg).unwrap().run().unwrap();
    let blocks = Pipeline::new(mesh, SnapshotSource::Blocks(Box::new(MemoryBlocks::split(&a, 3))), cfg)
        .unwrap()
        .run()
        .unwrap();
    assert_eq!(dense.report.basis_size, blocks.report.basis_size);
    assert_eq!(dense.report.cecm_points, 4);
    assert_eq!(blocks.report.cecm_points, 4);
    assert!(dense.report.quadrature_error < 1e-10);
    assert!(blocks.report.quadrature_error < 1e-10);
    let mut xd = dense.cecm.rule.compact().points;
    let mut xb = blocks.cecm.rule.compact().points;
    xd.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    for (p, q) in xd.iter().zip(&xb) {
        assert!((p - q).abs() < 1e-8);
    }
}

#[test]
fn column_augmentation_matches_basis_augmentation() {
    let mesh = line(40, 4);
    let f = Arc::new(Lagrange::new(1, 3).unwrap());
    let mut cfg = PipelineConfig {
        eps_svd: 0.0,
        augmentation: Augmentation::Column(None),
        ..PipelineConfig::default()
    };
    let col = Pipeline::new(mesh.clone(), SnapshotSource::Analytic(f.clone()), cfg).unwrap().run().unwrap();
    cfg.augmentation = Augmentation::Basis;
    let bas = Pipeline::new(mesh, SnapshotSource::Analytic(f), cfg).unwrap().run().unwrap();
    assert_eq!(col.report.cecm_points, 2);
    assert_eq!(bas.report.cecm_points, 2);
    assert!(!col.report.constant_added);
}

#[test]
fn reruns_write_identical_rule_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for k in 0..2 {
        let pl = analytic(Mesh::structured(ElementKind::QuadBilinear, &[-1.0, -1.0], &[1.0, 1.0], &[5, 5], 2).unwrap(), Lagrange::new(2, 3).unwrap(), 0.0);
        let run = pl.run().unwrap();
        let path = dir.path().join(format!("rule{k}.json"));
        RuleFile::from_rule(&run.cecm.rule, run.cecm.residual_norm, &run.cecm.eliminations).save(&path).unwrap();
        bytes.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn rule_file_round_trip_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let pl = analytic(line(20, 4), Lagrange::new(1, 5).unwrap(), 0.0);
    let run = pl.run().unwrap();
    let rf = RuleFile::from_rule(&run.cecm.rule, run.cecm.residual_norm, &run.cecm.eliminations);
    assert_eq!(rf.points.len(), 3);
    assert!((rf.sum_weights - 2.0).abs() < 1e-10);
    let path = dir.path().join("rule.json");
    rf.save(&path).unwrap();
    let back = RuleFile::load(&path).unwrap();
    assert_eq!(back, rf);
    let err = quadrature_error(&pl.mesh, &pl.field, &pl.source, &back.flat_points(), &back.weights).unwrap();
    assert!(err < 1e-10);

    std::fs::write(&path, r#"{"dim":2,"points":[[0.0]],"weights":[1.0],"sum_weights":1.0,"residual_norm":0.0,"eliminations":[]}"#).unwrap();
    assert!(matches!(RuleFile::load(&path), Err(Error::Input(_))));
    std::fs::write(&path, "{").unwrap();
    assert!(RuleFile::load(&path).unwrap_err().is_input_error());
}

#[test]
fn weight_file_round_trip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.bin");
    let w = vec![0.25, 1.5, -3.0, 1e-300];
    write_weights(&path, &w).unwrap();
    assert_eq!(read_weights(&path).unwrap(), w);

    let mut bytes = std::fs::read(&path).unwrap();
    bytes.pop();
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(read_weights(&path), Err(Error::Format { offset: 12, .. })));
    bytes[0] = b'Z';
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(read_weights(&path), Err(Error::Format { offset: 0, .. })));
    std::fs::write(&path, b"CUB").unwrap();
    assert!(matches!(read_weights(&path), Err(Error::Format { .. })));
}

#[test]
fn mismatched_inputs_are_rejected() {
    let mesh = line(4, 2);
    let f = Arc::new(Lagrange::new(2, 2).unwrap());
    assert!(Pipeline::new(mesh.clone(), SnapshotSource::Analytic(f), PipelineConfig::default()).is_err());
    let dense = SnapshotSource::Dense(nalgebra::DMatrix::zeros(5, 2));
    assert!(Pipeline::new(mesh.clone(), dense, PipelineConfig::default()).is_err());
    let dense = SnapshotSource::Dense(nalgebra::DMatrix::zeros(8, 2));
    // the analytic backend needs a closed-form integrand
    assert!(Pipeline::new(mesh, dense, PipelineConfig::default()).is_err());
}

#[test]
fn expected_counts_follow_the_tensor_law() {
    assert_eq!(expected_point_count(1, 5), 3);
    assert_eq!(expected_point_count(1, 4), 3);
    assert_eq!(expected_point_count(2, 7), 16);
    assert_eq!(expected_point_count(2, 6), 16);
    assert_eq!(expected_point_count(3, 3), 8);
    assert_eq!(expected_point_count(3, 4), 27);
}
