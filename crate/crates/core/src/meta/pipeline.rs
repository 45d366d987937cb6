//! End-to-end stages shared by the CLI, the examples and the evaluation
//! harness: vocabulary and index, expansion, warm starts, training.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{SplitBundle, Vocabulary, DEFAULT_MAX_LEN, DEFAULT_VOCAB_CAP};
use crate::error::Result;
use crate::eval::evaluate_generation;
use crate::generator::{steps_for_pass, GeneratorConfig, GeneratorHandle, IdPair, Seq2Seq};
use crate::meta::config::{Mode, TrainerConfig};
use crate::meta::episode::{materialize, PseudoItem};
use crate::meta::trainer::{train, BoundaryHook, TrainOutcome};
use crate::metrics::{MetricReport, DEFAULT_ALPHA};
use crate::retrieval::{expand, Bm25Params, InvertedIndex, WeakPair};
use crate::selector::{pretrain_ranking, recentre, PolicyParams, RankGroup, RankingConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub trainer: TrainerConfig,
    pub generator: GeneratorConfig,
    pub bm25: Bm25Params,
    pub vocab_cap: usize,
    pub max_len: usize,
    pub alpha: f64,
    /// Warm-up passes of the generator over the whole weak pool.
    pub pretrain_epochs: usize,
    pub pretrain_lr: f64,
    pub ranking_margin: f64,
    pub ranking_epochs: usize,
    pub ranking_lr: f64,
    /// Standardize the policy input with weak-pool feature statistics.
    pub standardize_policy_input: bool,
    pub decode_max_len: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            trainer: TrainerConfig::default(),
            generator: GeneratorConfig::default(),
            bm25: Bm25Params::default(),
            vocab_cap: DEFAULT_VOCAB_CAP,
            max_len: DEFAULT_MAX_LEN,
            alpha: DEFAULT_ALPHA,
            pretrain_epochs: 1,
            pretrain_lr: 1e-3,
            ranking_margin: 0.5,
            ranking_epochs: 5,
            ranking_lr: 0.01,
            standardize_policy_input: false,
            decode_max_len: DEFAULT_MAX_LEN,
        }
    }
}

impl PipelineConfig {
    /// Settings that train a corpus of a few thousand sentences on one core
    /// in minutes. Smaller batches give the policy many more updates, fixed
    /// episode fine-tunes keep the reward about the selection rather than
    /// its size, and standardized input lets one learning rate suit every
    /// feature.
    pub fn desk(seed: u64) -> Self {
        let mut cfg = Self::default();
        let t = &mut cfg.trainer;
        t.seed = seed;
        t.epochs = 1000;
        t.period = 200;
        t.batch_size = 128;
        t.fixed_episode_steps = true;
        t.episode_steps = 8;
        t.lr_policy = 0.02;
        t.patience = 10_000;
        cfg.pretrain_epochs = 3;
        cfg.ranking_lr = 0.1;
        cfg.standardize_policy_input = true;
        cfg
    }

    pub fn seed(&self) -> u64 {
        self.trainer.seed
    }

    pub fn ranking(&self) -> RankingConfig {
        RankingConfig {
            margin: self.ranking_margin,
            epochs: self.ranking_epochs,
            lr: self.ranking_lr,
            seed: self.seed(),
            ..RankingConfig::default()
        }
    }
}

/// Everything derived from a bundle before any training.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub vocab: Vocabulary,
    pub index: InvertedIndex,
    pub weak: Vec<WeakPair>,
    pub items: Vec<PseudoItem>,
    pub dev: Vec<IdPair>,
}

pub fn build_vocab(bundle: &SplitBundle, cfg: &PipelineConfig) -> Result<Vocabulary> {
    Vocabulary::build(bundle.training_side(), cfg.vocab_cap)
}

pub fn build_index(bundle: &SplitBundle, cfg: &PipelineConfig) -> Result<InvertedIndex> {
    InvertedIndex::build_with(&bundle.corpus, cfg.bm25)
}

/// Resolves expansion output into trainable items plus the dev id pairs.
pub fn resolve(bundle: &SplitBundle, vocab: &Vocabulary, weak: &[WeakPair]) -> Result<(Vec<PseudoItem>, Vec<IdPair>)> {
    let pool = bundle.pool_by_id();
    let items = materialize(weak, &pool, vocab)?;
    let dev = bundle.dev.iter().map(|p| IdPair::from_pair(vocab, p)).collect();
    Ok((items, dev))
}

pub fn prepare(bundle: &SplitBundle, cfg: &PipelineConfig) -> Result<Prepared> {
    let vocab = build_vocab(bundle, cfg)?;
    let index = build_index(bundle, cfg)?;
    let weak = expand(&index, &bundle.train_sources, cfg.trainer.k);
    let (items, dev) = resolve(bundle, &vocab, &weak)?;
    Ok(Prepared {
        vocab,
        index,
        weak,
        items,
        dev,
    })
}

/// Candidates grouped by source, keyed in source-id order.
pub fn ranking_groups(items: &[PseudoItem]) -> Vec<RankGroup> {
    let mut groups: BTreeMap<u64, RankGroup> = BTreeMap::new();
    for it in items {
        groups.entry(it.weak.src_id).or_default().push((it.z, it.weak.rank));
    }
    groups.into_values().collect()
}

/// Ranking warm start followed by log-odds recentring.
pub fn pretrain_policy(cfg: &PipelineConfig, items: &[PseudoItem]) -> Result<PolicyParams> {
    let mut policy = PolicyParams::new();
    policy.optimizer = cfg.trainer.policy_optimizer;
    policy.baseline_decay = cfg.trainer.baseline_decay;
    let zs: Vec<_> = items.iter().map(|it| it.z).collect();
    if cfg.standardize_policy_input {
        policy.fit_input(&zs);
    }
    pretrain_ranking(&mut policy, &ranking_groups(items), &cfg.ranking())?;
    recentre(&mut policy, &zs);
    Ok(policy)
}

/// Random init, warmed up on the whole weak pool unless the mode skips it.
pub fn initial_generator(cfg: &PipelineConfig, vocab_size: usize, items: &[PseudoItem], mode: Mode) -> Result<Seq2Seq> {
    let mut gen = Seq2Seq::new(vocab_size, cfg.generator, cfg.seed());
    if mode != Mode::NoPretrainGenerator {
        warm_up(cfg, &mut gen, items)?;
    }
    Ok(gen)
}

pub fn warm_up<G: GeneratorHandle + ?Sized>(cfg: &PipelineConfig, gen: &mut G, items: &[PseudoItem]) -> Result<()> {
    if cfg.pretrain_epochs == 0 {
        return Ok(());
    }
    let pairs: Vec<IdPair> = items.iter().map(|it| it.ids.clone()).collect();
    if pairs.is_empty() {
        return Err(crate::error::Error::Empty("warm-up pairs"));
    }
    let budget = cfg.trainer.update_budget.pairs(pairs.len(), pairs.len());
    let steps = cfg.pretrain_epochs * steps_for_pass(budget, gen.batch_size(), None);
    gen.fine_tune(&pairs, steps, cfg.pretrain_lr)
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub policy: PolicyParams,
    pub generator: Seq2Seq,
    pub outcome: TrainOutcome,
    pub metrics: MetricReport,
    pub dev_ppl: f64,
}

/// Warm starts, training and test evaluation in one process.
pub fn run_local(bundle: &SplitBundle, prepared: &Prepared, cfg: &PipelineConfig, mode: Mode) -> Result<RunResult> {
    let mut policy = pretrain_policy(cfg, &prepared.items)?;
    let mut generator = initial_generator(cfg, prepared.vocab.len(), &prepared.items, mode)?;
    let outcome = train(
        &cfg.trainer,
        mode,
        &mut policy,
        &mut generator,
        &prepared.items,
        &prepared.dev,
        &mut |_| Ok(()) as Result<()>,
    )?;
    let dev_ppl = generator.perplexity(&prepared.dev)?;
    let metrics = evaluate_generation(&generator, &prepared.vocab, &bundle.test, cfg.alpha, cfg.decode_max_len)?;
    Ok(RunResult {
        policy,
        generator,
        outcome,
        metrics,
        dev_ppl,
    })
}

/// Trains under `mode` with a caller-supplied generator and checkpoint hook.
pub fn run_with<G: GeneratorHandle + ?Sized>(
    cfg: &PipelineConfig,
    mode: Mode,
    prepared: &Prepared,
    policy: &mut PolicyParams,
    gen: &mut G,
    hook: &mut BoundaryHook<'_, G>,
) -> Result<TrainOutcome> {
    train(&cfg.trainer, mode, policy, gen, &prepared.items, &prepared.dev, hook)
}

/// Test metrics of one ablation mode; seeds and budgets come from `cfg`
/// unchanged, so runs under different modes are paired.
pub fn ablation(mode: Mode, cfg: &PipelineConfig, bundle: &SplitBundle) -> Result<MetricReport> {
    let prepared = prepare(bundle, cfg)?;
    Ok(run_local(bundle, &prepared, cfg, mode)?.metrics)
}
