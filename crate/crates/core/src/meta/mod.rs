//! Meta-learned data selection: episodes scored by the generator's dev
//! perplexity change, REINFORCE with an EMA baseline, and the periodic
//! main-generator update.

mod config;
mod episode;
mod pipeline;
mod trainer;

pub use config::{EpisodeBudget, Mode, TrainerConfig, UpdateBudget};
pub use episode::{
    build_train_set, episode_gradient, materialize, policy_update, run_episode, selection_precision, Acting, Episode,
    PseudoItem,
};
pub use pipeline::{
    ablation, build_index, build_vocab, initial_generator, prepare, pretrain_policy, ranking_groups, resolve,
    run_local, run_with, warm_up, PipelineConfig, Prepared, RunResult,
};
pub use trainer::{train, Boundary, BoundaryHook, EpochRecord, TrainOutcome};
