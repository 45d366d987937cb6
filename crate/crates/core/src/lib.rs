//! Weakly supervised paraphrase generation: BM25 pseudo-pair expansion, a
//! policy-gradient data selector rewarded by held-out perplexity, a small
//! attention seq2seq generator with exact gradients, and the evaluation
//! harness around them.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod generator;
pub mod meta;
pub mod metrics;
pub mod optim;
pub mod retrieval;
pub mod selector;

pub use error::{Error, Result};
