//! Finite element geometry, Gauss fields, point location and Gauss-point interpolants.

pub mod element;
pub mod gauss;
pub mod interp;
pub mod locate;
#[allow(clippy::module_inception)]
pub mod mesh;

pub use element::ElementKind;
pub use gauss::gauss_legendre;
pub use interp::{ElementInterpolant, InterpolantCache};
pub use locate::LocateOptions;
pub use mesh::{GaussField, Mesh, MeshFile};
