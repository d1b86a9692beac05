//! Greedy discrete selection on a single element: two functions, six Gauss points.
//!
//! Integrating `sqrt(3/2)·x` and `sqrt(1/2)` over `[-1, 1]` needs only two of the six points.

use cecm::decm::decm;
use cecm::mesh::{ElementKind, Mesh};
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = Mesh::new(ElementKind::LineLinear, 6, vec![-1.0, 1.0], vec![vec![0, 1]])?;
    let field = mesh.gauss_field()?;
    let u = DMatrix::from_fn(field.len(), 2, |g, j| {
        if j == 0 {
            1.5f64.sqrt() * field.points[g]
        } else {
            0.5f64.sqrt()
        }
    });
    let rule = decm(&u, &field.weights)?;
    for (g, w) in rule.indices.iter().zip(&rule.weights) {
        println!("point {g}: x = {:+.4}, w = {w:.4}", field.points[*g]);
    }
    println!("residual history {:?}", rule.residual_history);
    Ok(())
}
