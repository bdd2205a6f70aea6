//! Fair graph cuts: protect vertices from a source by deleting edges, under
//! group coverage or per-vertex probability constraints.
//!
//! All arithmetic is exact ([`rational::Q`]). Trees are solved by dynamic
//! programs; general graphs go through a [`embed::TreeEmbedding`] whose
//! stretch is measured on the instance. The [`oracle`] module holds
//! brute-force references for small graphs.

pub mod auxcut;
pub mod demfair;
pub mod embed;
pub mod error;
pub mod graph;
pub mod indfair;
pub mod instances;
pub mod lp;
pub mod oracle;
pub mod rational;
pub mod rng;
pub mod tree;

pub use error::{Error, Result};
pub use graph::{parse_graph, CutSolution, EdgeId, VertexId, WeightedGraph};
pub use rational::Q;
pub use tree::RootedTree;
