//! Training-free bias mitigation for linear graph models through certified
//! unlearning of features, edges and nodes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fairness;
pub mod graph;
pub mod model;
pub mod synthetic;
pub mod unlearn;

pub use error::{Error, Result};
