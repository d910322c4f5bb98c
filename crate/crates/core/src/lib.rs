//! Information-bottleneck guided neuron-campaign initialization for MLPs.
//!
//! Each layer is initialized by drawing an overcomplete bank of candidate
//! neurons from a classical initializer (Xavier or He), scoring every
//! candidate on real data by how much input variance it keeps and how well
//! it separates classes, and greedily keeping the best candidates while
//! favouring directions orthogonal to those already kept.
//!
//! Modules:
//!
//! * [`data`]: MNIST IDX loader, synthetic Gaussian classes, partitions;
//! * [`scoring`]: per-neuron criteria and their alpha-weighted mix;
//! * [`campaign`]: candidate banks and the greedy orthogonal selection;
//! * [`init`]: Xavier, He, LSUV and the layer-sequential campaign;
//! * [`network`]: the MLP, backprop and SGD training;
//! * [`bench`], [`config`], [`cli`]: experiment harness and command line.

pub mod bench;
pub mod campaign;
pub mod cli;
pub mod config;
pub mod data;
pub mod dump;
pub mod error;
pub mod init;
pub mod network;
pub mod scoring;
pub mod seed;

pub use error::{Error, Result};
