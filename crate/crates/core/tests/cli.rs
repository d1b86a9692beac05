use std::path::Path;
use std::process::{Command, Output};

use cecm::basis::sample_integrand;
use cecm::mesh::{ElementKind, Mesh};
use cecm::pipeline::RuleFile;
use cecm::registry::Lagrange;
use cecm::svdkit::{read_block, write_block, write_manifest};
use nalgebra::DMatrix;

fn cecm(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cecm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn rule_writes_gauss_rule_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = cecm(dir.path(), &["rule", "--function", "lagrange1d", "--degree", "5", "--divisions", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rule = RuleFile::load(&dir.path().join("rule.json")).unwrap();
    assert_eq!(rule.weights.len(), 3);
    let mut x: Vec<f64> = rule.points.iter().map(|p| p[0]).collect();
    x.sort_by(f64::total_cmp);
    assert!((x[2] - 0.6f64.sqrt()).abs() < 1e-10);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["cecm_points"], 3);
    assert_eq!(report["decm_points"], 6);
}

#[test]
fn rule_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["--function", "lagrange2d", "--degree", "3", "--divisions", "6"];
    let o = cecm(dir.path(), &[&["rule"][..], &common].concat());
    assert_eq!(o.status.code(), Some(0));
    let rule = dir.path().join("rule.json");
    let rule_s = rule.to_str().unwrap();
    let o = cecm(dir.path(), &[&["verify", "--rule", rule_s, "--tol", "1e-10"][..], &common].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("relative integration error"));

    // zero one weight without re-solving: verify must flag it
    let mut broken = RuleFile::load(&rule).unwrap();
    broken.weights[0] = 0.0;
    broken.save(&rule).unwrap();
    let o = cecm(dir.path(), &[&["verify", "--rule", rule_s, "--tol", "1e-10"][..], &common].concat());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["rule", "--function", "lagrange2d", "--degree", "2", "--divisions", "5", "--seed", "7"];
    assert_eq!(cecm(a.path(), &args).status.code(), Some(0));
    assert_eq!(cecm(b.path(), &args).status.code(), Some(0));
    let ra = std::fs::read(a.path().join("rule.json")).unwrap();
    let rb = std::fs::read(b.path().join("rule.json")).unwrap();
    assert_eq!(ra, rb);
}

#[test]
fn decm_subcommand_writes_discrete_rule() {
    let dir = tempfile::tempdir().unwrap();
    let o = cecm(dir.path(), &["decm", "--function", "lagrange1d", "--degree", "4", "--divisions", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("decm.json")).unwrap()).unwrap();
    assert_eq!(v["indices"].as_array().unwrap().len(), 5);
}

#[test]
fn svd_with_dense_check() {
    let dir = tempfile::tempdir().unwrap();
    let a = DMatrix::from_fn(60, 24, |i, j| ((i * j) as f64 * 0.37).sin() + (i as f64 - j as f64) * 0.01);
    let blocks: Vec<DMatrix<f64>> = (0..4).map(|k| a.columns(6 * k, 6).into_owned()).collect();
    let man = dir.path().join("data.json");
    write_manifest(&man, &blocks).unwrap();
    let o = cecm(dir.path(), &["svd", "--manifest", man.to_str().unwrap(), "--check-dense", "--eps-svd", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("svd_report.json")).unwrap()).unwrap();
    assert_eq!(rep["rank"], rep["dense_rank"]);
    assert!(rep["dense_singular_value_diff"].as_f64().unwrap() <= 1e-10);
    let u = read_block(&dir.path().join("U.cubb")).unwrap();
    assert_eq!(u.nrows(), 60);
    assert_eq!(u.ncols() as u64, rep["rank"].as_u64().unwrap());
}

#[test]
fn duplicated_blocks_keep_single_block_rank() {
    let dir = tempfile::tempdir().unwrap();
    let a = DMatrix::from_fn(40, 5, |i, j| (i as f64 + 1.0).powi(j as i32 % 3) * (j as f64 + 1.0));
    let man = dir.path().join("dup.json");
    write_manifest(&man, &[a.clone(), a.clone(), a]).unwrap();
    let o = cecm(dir.path(), &["svd", "--manifest", man.to_str().unwrap(), "--eps-svd", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("svd_report.json")).unwrap()).unwrap();
    assert_eq!(rep["rank"], 3);
    assert_eq!(rep["added"], serde_json::json!([3, 0, 0]));
}

#[test]
fn meshgen_writes_a_loadable_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let o = cecm(dir.path(), &["meshgen", "--box", "0..2,-1..1", "--divisions", "4,3", "--q", "3", "--name", "m.json"]);
    assert_eq!(o.status.code(), Some(0));
    let mesh = Mesh::load(&dir.path().join("m.json")).unwrap();
    assert_eq!(mesh.element_count(), 12);
    assert!((mesh.gauss_field().unwrap().total_weight() - 4.0).abs() < 1e-13);
}

#[test]
fn bench_table1_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = cecm(dir.path(), &["bench", "table1", "--degrees", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("table1.csv")).unwrap();
    assert!(table.lines().count() >= 3);
    assert!(dir.path().join("table1_summary.csv").exists());
    assert!(dir.path().join("table1_p3_steps.csv").exists());
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = cecm(dir.path(), &["rule", "--function", "nosuchfunction"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error ["));
    let o = cecm(dir.path(), &["verify", "--rule", "/nonexistent/rule.json", "--function", "lagrange1d"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cecm(dir.path(), &["bench", "table9"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cecm(dir.path(), &["rule", "--function", "lagrange1d", "--eps-svd", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cecm(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // Degree-3 data with three Gauss points per direction is not interpolated exactly and the
    // discrete rule ends with a non-positive weight.
    let mesh = Mesh::structured(ElementKind::QuadQuadratic, &[-1.0, -1.0], &[1.0, 1.0], &[3, 3], 3).unwrap();
    let a = sample_integrand(&Lagrange::new(2, 3).unwrap(), &mesh.gauss_field().unwrap());
    let data = dir.path().join("a.cubb");
    write_block(&data, &a).unwrap();
    let o = cecm(
        dir.path(),
        &[
            "rule", "--dense", data.to_str().unwrap(), "--box", "-1..1,-1..1", "--divisions", "3",
            "--kind", "quad-quadratic", "--q", "3", "--backend", "interpolatory", "--eps-svd", "0",
        ],
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error [decm]"));
}
