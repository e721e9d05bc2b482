#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distances;
pub mod error;
pub mod estimation;
pub mod exec;
pub mod image;
pub mod model;
pub mod montecarlo;
pub mod quadrature;
pub mod special;
pub mod testing;

pub use error::{Error, Result};
