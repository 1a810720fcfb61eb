//! Synthetic graph benchmarks and feature-leakage studies.
//!
//! The crate generates Watts-Strogatz graph datasets whose node features are
//! either independent of the graph or derived from it by breadth-first
//! parental dependence, trains feature-only (MLP) and graph-aware (GCN)
//! baselines from scratch, and runs the tuning sweeps and feature studies
//! that measure how much a dataset really needs its graph.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod features;
pub mod graph;
pub mod io;
pub mod kv;
pub mod nn;
pub mod report;
pub mod rng;
pub mod split;
pub mod sweep;
pub mod train;

pub use dataset::{slice_features, GraphDataset, Provenance};
pub use error::{Error, Result};
pub use features::{FeatureMatrix, GaussianSpec, SynthParams, WsFamily};
pub use graph::{BfsTree, Graph, WsParams};
