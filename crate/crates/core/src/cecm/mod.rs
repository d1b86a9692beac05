//! Continuous empirical cubature: sparsification of a discrete rule by moving points
//! and driving weights to zero one at a time.

pub mod model;
pub mod newton;
pub mod rule;
pub mod sparsify;

pub use model::{Backend, CubatureModel, PointEval};
pub use newton::{jacobian, newton_mod, polish, NewtonOutcome, SolverParams};
pub use rule::{residual, ContinuousRule, Elimination};
pub use sparsify::{make_one_zero, solve_res, sparsify, sparsify_global, CecmOutcome, SparsifyOutcome};
