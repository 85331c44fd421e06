#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod harness;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod solver;

pub use error::{Error, Result};
