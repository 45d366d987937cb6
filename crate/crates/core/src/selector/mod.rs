//! The data selector: pair features, the select/skip policy over
//! incremental states, and its BM25 ranking warm start.

mod features;
mod policy;
mod ranking;

pub use features::{encode_pair, feat, PairEncoding, F};
pub use policy::{
    greedy_action, sample_action, select_prob, PolicyOptimizer, PolicyParams, SelectionState, StateBuilder, N_PARAMS, STATE_DIM,
};
pub use ranking::{group_loss, kendall_tau, pretrain_ranking, recentre, select_logit, RankGroup, RankingConfig};
