//! Exact computation in graph wreath products `G(Δ) ⋊ Γ`.
//!
//! The crate covers the vertex groups ([`groups`]), graphs with a `ℤⁿ`-action
//! ([`gamma_graph`]), the graph product word problem ([`graph_product`]),
//! semidirect product arithmetic with separation certificates and non-residual
//! finiteness witnesses ([`wreath`]), the residual finiteness classifier
//! ([`rf`]), LEF-action certificates ([`lef`]) and the file formats ([`format`]).

pub mod gamma_graph;
pub mod groups;
pub mod graph_product;
pub mod wreath;
pub mod rf;
pub mod lef;
pub mod format;
