//! Meta-selection episodes and the REINFORCE update they drive.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{SentenceRecord, Vocabulary};
use crate::error::{Error, Result};
use crate::generator::{GeneratorHandle, IdPair};
use crate::meta::config::EpisodeBudget;
use crate::retrieval::WeakPair;
use crate::selector::{
    encode_pair, greedy_action, sample_action, PairEncoding, PolicyParams, SelectionState, StateBuilder, N_PARAMS,
};

/// A weak pair with everything the loop needs precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoItem {
    pub weak: WeakPair,
    pub z: PairEncoding,
    pub ids: IdPair,
}

/// Resolves weak pairs against the pool, encodes and vocabulary-maps them.
pub fn materialize(
    pairs: &[WeakPair],
    pool: &HashMap<u64, &SentenceRecord>,
    vocab: &Vocabulary,
) -> Result<Vec<PseudoItem>> {
    pairs
        .iter()
        .map(|w| {
            let lookup = |id: u64| {
                pool.get(&id)
                    .copied()
                    .ok_or_else(|| Error::InvalidArgument(format!("weak pair refers to unknown sentence {id}")))
            };
            let (src, cand) = (lookup(w.src_id)?, lookup(w.cand_id)?);
            Ok(PseudoItem {
                weak: w.clone(),
                z: encode_pair(&src.tokens, &cand.tokens, w.bm25_score),
                ids: IdPair::from_records(vocab, src, cand),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    /// Indices into the weak pool.
    pub batch: Vec<usize>,
    pub states: Vec<SelectionState>,
    pub actions: Vec<u8>,
    pub probs: Vec<f64>,
    pub reward: f64,
    pub baseline_at_time: f64,
    /// Nothing was selected, so no fine-tune happened and the reward is 0.
    pub degenerate: bool,
}

impl Episode {
    pub fn n_selected(&self) -> usize {
        self.actions.iter().filter(|&&a| a == 1).count()
    }

    /// Fraction of selected pairs that are planted paraphrases, when every
    /// selected pair carries a label.
    pub fn precision(&self, items: &[PseudoItem]) -> Option<f64> {
        selection_precision(self.batch.iter().zip(&self.actions).filter(|(_, &a)| a == 1).map(|(&i, _)| i), items)
    }
}

pub fn selection_precision(selected: impl Iterator<Item = usize>, items: &[PseudoItem]) -> Option<f64> {
    let (mut hits, mut n) = (0usize, 0usize);
    for i in selected {
        hits += usize::from(items[i].weak.is_true_paraphrase?);
        n += 1;
    }
    (n > 0).then(|| hits as f64 / n as f64)
}

/// How an episode reaches its actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Acting {
    Sample,
    Greedy,
}

/// Rolls the policy over `batch`, then fine-tunes the generator on the
/// selection and measures `R = PPL_before − PPL_after` on `dev`. The
/// generator is restored before returning, also on error.
///
/// `ppl_before` may carry the generator's cached dev perplexity.
#[allow(clippy::too_many_arguments)]
pub fn run_episode<G: GeneratorHandle + ?Sized, R: Rng + ?Sized>(
    policy: &PolicyParams,
    gen: &mut G,
    items: &[PseudoItem],
    batch: &[usize],
    dev: &[IdPair],
    ppl_before: Option<f64>,
    budget: EpisodeBudget,
    lr: f64,
    acting: Acting,
    rng: &mut R,
) -> Result<Episode> {
    if batch.is_empty() {
        return Err(Error::Empty("episode batch"));
    }
    if dev.is_empty() {
        return Err(Error::Empty("episode dev set"));
    }
    let mut builder = StateBuilder::new();
    let mut states = Vec::with_capacity(batch.len());
    let mut actions = Vec::with_capacity(batch.len());
    let mut probs = Vec::with_capacity(batch.len());
    let mut selected = Vec::new();
    for &i in batch {
        let item = &items[i];
        let state = builder.state(&item.z);
        let v = policy.select_prob(&state);
        let a = match acting {
            Acting::Sample => sample_action(v, rng),
            Acting::Greedy => greedy_action(v),
        };
        if a == 1 {
            builder.push_selected(&item.z);
            selected.push(item.ids.clone());
        }
        states.push(state);
        actions.push(a);
        probs.push(v[1]);
    }

    let mut episode = Episode {
        batch: batch.to_vec(),
        states,
        actions,
        probs,
        reward: 0.0,
        baseline_at_time: policy.baseline,
        degenerate: selected.is_empty(),
    };
    if selected.is_empty() {
        return Ok(episode);
    }
    let before = match ppl_before {
        Some(p) => p,
        None => gen.perplexity(dev)?,
    };
    let snapshot = gen.snapshot()?;
    let steps = budget.steps(selected.len(), gen.batch_size());
    let after = gen.fine_tune(&selected, steps, lr).and_then(|()| gen.perplexity(dev));
    gen.restore(&snapshot)?;
    episode.reward = before - after?;
    Ok(episode)
}

/// `Σ_t r_t ∇θ log π(a_t | s_t)` with every `r_t = R − baseline`.
pub fn episode_gradient(policy: &PolicyParams, episode: &Episode, baseline: f64) -> Vec<f64> {
    let r = episode.reward - baseline;
    let mut grad = vec![0.0; N_PARAMS];
    if r != 0.0 {
        for (s, &a) in episode.states.iter().zip(&episode.actions) {
            policy.accumulate_grad_log_prob(s, a, r, &mut grad);
        }
    }
    grad
}

/// Policy-gradient ascent on one finished episode, then the baseline EMA
/// update. A non-finite gradient leaves the policy untouched.
pub fn policy_update(policy: &mut PolicyParams, episode: &Episode, lr: f64, use_baseline: bool) -> Result<Vec<f64>> {
    let baseline = if use_baseline { policy.baseline } else { 0.0 };
    let grad = episode_gradient(policy, episode, baseline);
    policy.ascend(&grad, lr)?;
    policy.update_baseline(episode.reward);
    Ok(grad)
}

/// Greedy selection over the whole pool in order, with the same
/// incremental states as an episode. Returns selected indices.
pub fn build_train_set(policy: &PolicyParams, items: &[PseudoItem]) -> Vec<usize> {
    let mut builder = StateBuilder::new();
    let mut out = Vec::new();
    for (i, item) in items.iter().enumerate() {
        if greedy_action(policy.select_prob(&builder.state(&item.z))) == 1 {
            builder.push_selected(&item.z);
            out.push(i);
        }
    }
    if out.is_empty() {
        log::warn!("policy selected no training pairs");
    }
    out
}
