use cecm::mesh::{gauss_legendre, ElementInterpolant, ElementKind, LocateOptions, Mesh};
use cecm::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Structured quad mesh of the unit square with interior nodes jittered by up to `amp·h`.
fn distorted_quads(n: usize, amp: f64, seed: u64, q: usize) -> Mesh {
    let base = Mesh::structured(ElementKind::QuadBilinear, &[0.0, 0.0], &[1.0, 1.0], &[n, n], q).unwrap();
    let mut f = base.to_file_data();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1.0 / n as f64;
    for x in f.nodes.iter_mut() {
        let interior = x.iter().all(|v| *v > 1e-12 && *v < 1.0 - 1e-12);
        if interior {
            x[0] += amp * h * rng.random_range(-1.0..1.0);
            x[1] += amp * h * rng.random_range(-1.0..1.0);
        }
    }
    Mesh::from_file_data(f).unwrap()
}

fn shoelace(pts: &[[f64; 2]]) -> f64 {
    let n = pts.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

#[test]
fn gauss_legendre_closed_forms() {
    let (x, w) = gauss_legendre(2);
    let a = 1.0 / 3f64.sqrt();
    let mut xs = x.clone();
    xs.sort_by(f64::total_cmp);
    assert!((xs[0] + a).abs() < 1e-15 && (xs[1] - a).abs() < 1e-15);
    assert!(w.iter().all(|v| (v - 1.0).abs() < 1e-15));

    let (x, w) = gauss_legendre(3);
    let b = (0.6f64).sqrt();
    let mut pairs: Vec<(f64, f64)> = x.into_iter().zip(w).collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    assert!((pairs[0].0 + b).abs() < 1e-15 && pairs[1].0.abs() < 1e-15 && (pairs[2].0 - b).abs() < 1e-15);
    assert!((pairs[0].1 - 5.0 / 9.0).abs() < 1e-15);
    assert!((pairs[1].1 - 8.0 / 9.0).abs() < 1e-15);
}

#[test]
fn bilinear_element_areas_match_shoelace() {
    let mesh = distorted_quads(6, 0.3, 1, 2);
    let field = mesh.gauss_field().unwrap();
    for e in 0..mesh.element_count() {
        let conn = mesh.element(e);
        let corners: Vec<[f64; 2]> = conn.iter().map(|&a| [mesh.node(a)[0], mesh.node(a)[1]]).collect();
        let area: f64 = field.element_rows(e).map(|g| field.weights[g]).sum();
        assert!((area - shoelace(&corners)).abs() < 1e-14, "element {e}");
    }
    assert!((field.total_weight() - 1.0).abs() < 1e-13);
}

#[test]
fn quadratic_and_hex_volumes() {
    let q9 = Mesh::structured(ElementKind::QuadQuadratic, &[0.0, -1.0], &[2.0, 0.5], &[3, 4], 3).unwrap();
    assert!((q9.gauss_field().unwrap().total_weight() - 3.0).abs() < 1e-13);
    let hex = Mesh::structured(ElementKind::HexTrilinear, &[0.0; 3], &[1.0, 2.0, 0.5], &[2, 3, 4], 2).unwrap();
    assert!((hex.gauss_field().unwrap().total_weight() - 1.0).abs() < 1e-13);
    let line = Mesh::structured(ElementKind::LineQuadratic, &[-2.0], &[1.0], &[7], 3).unwrap();
    assert!((line.gauss_field().unwrap().total_weight() - 3.0).abs() < 1e-13);
}

#[test]
fn gauss_field_integrates_polynomials() {
    // ∫∫ x²y³ over [0,2]×[-1,1] is (8/3)·0; ∫∫ x²y² is (8/3)·(2/3).
    let mesh = Mesh::structured(ElementKind::QuadBilinear, &[0.0, -1.0], &[2.0, 1.0], &[5, 3], 2).unwrap();
    let f = mesh.gauss_field().unwrap();
    let int = |p: i32, q: i32| -> f64 {
        (0..f.len())
            .map(|g| f.weights[g] * f.point(g)[0].powi(p) * f.point(g)[1].powi(q))
            .sum()
    };
    assert!(int(2, 3).abs() < 1e-14);
    assert!((int(2, 2) - 16.0 / 9.0).abs() < 1e-13);
}

#[test]
fn inverted_element_is_a_geometry_error() {
    let nodes = vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
    let mesh = Mesh::new(ElementKind::QuadBilinear, 2, nodes, vec![vec![0, 3, 2, 1]]).unwrap();
    assert!(matches!(mesh.gauss_field(), Err(Error::Geometry { element: 0, .. })));
}

#[test]
fn bad_connectivity_is_rejected() {
    let nodes = vec![0.0, 1.0];
    assert!(Mesh::new(ElementKind::LineLinear, 2, nodes.clone(), vec![vec![0, 2]]).is_err());
    assert!(Mesh::new(ElementKind::LineLinear, 2, nodes.clone(), vec![vec![0]]).is_err());
    assert!(Mesh::new(ElementKind::LineLinear, 0, nodes, vec![vec![0, 1]]).is_err());
}

#[test]
fn mesh_file_round_trip() {
    let mesh = distorted_quads(3, 0.2, 4, 3);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.json");
    mesh.save(&p).unwrap();
    let back = Mesh::load(&p).unwrap();
    assert_eq!(back.to_file_data(), mesh.to_file_data());
}

#[test]
fn neighbors_are_symmetric() {
    let mesh = Mesh::structured(ElementKind::HexTrilinear, &[0.0; 3], &[1.0; 3], &[3, 3, 3], 2).unwrap();
    for e in 0..mesh.element_count() {
        for &o in mesh.neighbors(e) {
            assert!(mesh.neighbors(o).contains(&e));
        }
    }
    // the centre element of a 3×3×3 block touches all others
    assert_eq!(mesh.neighbors(13).len(), 26);
}

#[test]
fn located_points_are_inside_their_element() {
    let mesh = distorted_quads(8, 0.25, 7, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let x = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        let e = mesh.locate(&x, None, 0.0, LocateOptions::default()).expect("point in the unit square");
        let xi = mesh.inverse_map(e, &x).unwrap();
        assert!(xi[..2].iter().all(|v| v.abs() <= 1.0 + 1e-10));
        let (y, _) = mesh.map(e, &xi[..2]);
        assert!((y[0] - x[0]).abs() < 1e-12 && (y[1] - x[1]).abs() < 1e-12);
        let hinted = mesh.locate(&x, Some(0), 2.0, LocateOptions::default()).unwrap();
        assert!(mesh.contains(hinted, &x));
    }
    assert_eq!(mesh.locate(&[1.5, 0.5], None, 0.0, LocateOptions::default()), None);
}

#[test]
fn hint_search_respects_radius_and_fallback() {
    let mesh = Mesh::structured(ElementKind::QuadBilinear, &[0.0, 0.0], &[10.0, 1.0], &[10, 1], 2).unwrap();
    let far = [9.5, 0.5];
    assert_eq!(mesh.locate(&far, Some(0), 0.1, LocateOptions::default()), None);
    let opts = LocateOptions { global_fallback: true };
    assert_eq!(mesh.locate(&far, Some(0), 0.1, opts), Some(9));
    assert_eq!(mesh.locate(&far, Some(0), 10.0, LocateOptions::default()), Some(9));
}

#[test]
fn interpolant_reproduces_tensor_polynomials() {
    let mesh = distorted_quads(3, 0.2, 11, 3);
    let field = mesh.gauss_field().unwrap();
    let f = |x: &[f64]| 1.0 + x[0] - 2.0 * x[1] + x[0] * x[0] * x[1] * x[1] - 0.5 * x[1] * x[1];
    let e = 4;
    let itp = ElementInterpolant::build(&mesh, &field, e).unwrap();
    let rows = field.element_rows(e);
    let vals: Vec<f64> = rows.clone().map(|g| f(field.point(g))).collect();
    let c = mesh.centroid(e).to_vec();
    let n = itp.shape_at(&c);
    let approx: f64 = n.iter().zip(&vals).map(|(a, b)| a * b).sum();
    assert!((approx - f(&c)).abs() < 1e-11);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gauss_rule_is_exact_to_degree_2q_minus_1(q in 1usize..24) {
        let (x, w) = gauss_legendre(q);
        for k in 0..(2 * q) {
            let num: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            prop_assert!((num - exact).abs() < 1e-13, "q={} k={}", q, k);
        }
        prop_assert!(w.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn interpolants_partition_unity(seed in 0u64..500, q in 2usize..5, s in -1.0f64..1.0, t in -1.0f64..1.0) {
        let mesh = distorted_quads(3, 0.25, seed, q);
        let field = mesh.gauss_field().unwrap();
        let e = (seed as usize) % mesh.element_count();
        let (x, _) = mesh.map(e, &[s, t]);
        let itp = ElementInterpolant::build(&mesh, &field, e).unwrap();
        let n = itp.shape_at(&x[..2]);
        prop_assert!((n.sum() - 1.0).abs() < 1e-10);
        let g = itp.shape_grad_at(&x[..2]);
        for i in 0..2 {
            prop_assert!(g.row(i).sum().abs() < 1e-8);
        }
    }

    #[test]
    fn inverse_map_inverts_map(seed in 0u64..500, s in -1.0f64..1.0, t in -1.0f64..1.0, u in -1.0f64..1.0) {
        let mesh = Mesh::structured(ElementKind::HexTrilinear, &[0.0; 3], &[1.0, 2.0, 3.0], &[2, 2, 2], 2).unwrap();
        let e = (seed as usize) % mesh.element_count();
        let (x, _) = mesh.map(e, &[s, t, u]);
        let xi = mesh.inverse_map(e, &x[..3]).unwrap();
        prop_assert!((xi[0] - s).abs() < 1e-10 && (xi[1] - t).abs() < 1e-10 && (xi[2] - u).abs() < 1e-10);
        prop_assert_eq!(mesh.locate(&x[..3], Some(0), 0.0, LocateOptions { global_fallback: true }).map(|f| mesh.contains(f, &x[..3])), Some(true));
    }
}
