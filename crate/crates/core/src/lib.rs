#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod density;
pub mod error;
pub mod exprparse;
pub mod fpe;
pub mod kernels;
pub mod levy;
pub mod paths;
pub mod quadrature;
pub mod sampling;

pub use error::{Error, Result};
