//! Evaluation protocols: test-set generation metrics, the candidate
//! ranking study, the expansion-width sweep and report emission.

mod generation;
mod ranking_study;
mod report;
mod sweep;

pub use generation::{evaluate_generation, generate_all};
pub use ranking_study::{
    candidates, ordered_relevance, ranking_study, standard_study, Bm25Ranker, Curves, OracleRanker, Ranker,
    RankingStudy, SelectorRanker, StudyCandidate, STUDY_DEPTH, STUDY_KS,
};
pub use report::{emit_report, metric_map, MetricMap, Report, SweepRow};
pub use sweep::{k_sweep, sweep_budget, SweepPoint, DEFAULT_SWEEP_KS};
