//! Tree-ordered nets, padded decompositions, and covers for graphs of bounded treewidth.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod covers;
pub mod decomposition;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod net;
pub mod pipeline;
pub mod tree;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{Vertex, VertexSet, WeightedGraph, EPS};
pub use pipeline::Pipeline;
