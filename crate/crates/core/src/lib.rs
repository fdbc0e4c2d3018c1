//! Global explanations of text-generation evaluation metrics.
//!
//! Metric scores are regressed on four linguistic factors computed per
//! sentence pair (semantics, syntax, lexical overlap, morphology) plus an
//! optional cross-lingual-bias regressor. The crate also builds adversarial
//! paraphrase triples and evaluates score-averaging ensembles.

pub mod adversarial;
pub mod cli;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod factors;
pub mod par;
pub mod regression;

pub use error::{Error, Result};
