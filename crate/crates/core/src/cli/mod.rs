//! Batch pipeline behind the `paraselect` binary. Each subcommand reads and
//! writes under one output directory and stamps every artifact with the hash
//! of the run configuration.

mod backend;
mod commands;
mod config;

pub use backend::{Backend, BackendSnapshot};
pub use commands::{
    Command, Run, CONFIG, DATA, GENERATOR, GENERATOR_PRETRAINED, HISTORY, INDEX, LR_GRID, PAIRS, POLICY,
    POLICY_PRETRAINED, RANKING, REPORT, SWEEP, VOCAB,
};
pub use config::{Overrides, RunConfig};
