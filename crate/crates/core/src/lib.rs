//! Learned estimation of graph algebraic connectivity with a message-passing
//! neural network.
//!
//! The crate covers the whole pipeline: random connected graphs and an exact
//! spectral oracle ([`graph`], [`spectrum`]), labeled datasets ([`dataset`]),
//! the GRU message-passing model with hand-written reverse-mode gradients
//! ([`model`]), Adam training and evaluation harnesses ([`train`]), and a
//! round-synchronous multi-agent executor of the local model ([`sim`]).

pub mod dataset;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod numfmt;
pub mod sim;
pub mod spectrum;
pub mod train;

pub use dataset::{generate_dataset, Dataset, LabeledGraph};
pub use graph::{generate_connected_graph, Graph, GraphGenConfig};
pub use model::{forward, init_params, Estimates, ModelParams, ReadoutMode};
pub use spectrum::{algebraic_connectivity, LaplacianSpectrum};
