//! Sequence classification on sequence hypergraphs.
//!
//! Sequences become hyperedges over the distinct subsequences they contain
//! (k-mers or ESPF tokens), and a two-level attention network learns
//! hyperedge representations from which sequence labels are predicted:
//!
//! 1. [`corpus`] loads labeled sequences and draws reproducible splits.
//! 2. [`tokenize`] decomposes sequences into subsequences.
//! 3. [`hypergraph`] builds the incidence structure.
//! 4. [`model`] runs hyperedge-level then node-level attention and projects to class logits.
//! 5. [`trainer`] trains transductively with early stopping, repeats and grid search.
//! 6. [`metrics`] scores predictions.
//!
//! [`numerics`] is the matrix/autodiff substrate and [`cli`] the command-line surface.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod hypergraph;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod seed;
pub mod synth;
pub mod tokenize;
pub mod trainer;

pub use error::{Error, Result};
