//! Structured meshes, point location and local interpolation.
//!
//! Locates a few points in a 6×2 quadratic-quad mesh, maps them back to the parent element
//! and checks that the element interpolant reproduces a smooth field.

use cecm::mesh::{ElementKind, InterpolantCache, LocateOptions, Mesh};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = Mesh::structured(ElementKind::QuadQuadratic, &[0.0, 0.0], &[3.0, 1.0], &[6, 2], 3)?;
    let field = mesh.gauss_field()?;
    println!(
        "{} elements, {} nodes, {} Gauss points, total weight {:.12}",
        mesh.element_count(),
        mesh.node_count(),
        field.len(),
        field.total_weight()
    );
    let f = |x: &[f64]| x[0] * x[0] - 2.0 * x[0] * x[1] + 0.5 * x[1];
    let values: Vec<f64> = (0..field.len()).map(|g| f(field.point(g))).collect();
    let cache = InterpolantCache::new();
    for x in [[0.1, 0.1], [1.49, 0.77], [2.999, 0.5], [3.5, 0.5]] {
        match mesh.locate(&x, None, 0.0, LocateOptions::default()) {
            Some(e) => {
                let xi = mesh.inverse_map(e, &x).expect("located points have parent coordinates");
                let itp = cache.get(&mesh, &field, e)?;
                let n = itp.shape_at(&x);
                let rows = field.element_rows(e);
                let approx: f64 = rows.clone().zip(n.iter()).map(|(g, s)| values[g] * s).sum();
                println!(
                    "x = {x:?}: element {e}, parent ({:+.4}, {:+.4}), shape sum {:.15}, f = {:.12} vs {:.12}",
                    xi[0],
                    xi[1],
                    n.sum(),
                    approx,
                    f(&x)
                );
            }
            None => println!("x = {x:?}: outside the mesh"),
        }
    }
    Ok(())
}
