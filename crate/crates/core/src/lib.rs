#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod basis;
pub mod bench;
pub mod cecm;
pub mod decm;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod pipeline;
pub mod registry;
pub mod svdkit;

pub use error::{Error, Result};
