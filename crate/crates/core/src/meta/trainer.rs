//! The outer loop: episodes and policy updates every epoch, a greedy
//! rebuild of the training set and one generator epoch every `period`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{steps_for_pass, GeneratorHandle, IdPair};
use crate::meta::config::{Mode, TrainerConfig};
use crate::meta::episode::{build_train_set, policy_update, run_episode, selection_precision, Acting, PseudoItem};
use crate::selector::PolicyParams;

/// One line of the training history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Episode reward; absent in modes without episodes.
    pub reward: Option<f64>,
    pub baseline: f64,
    /// Dev perplexity of the main generator after this epoch.
    pub dev_ppl: f64,
    pub n_selected: usize,
    pub precision: Option<f64>,
    pub generator_updated: bool,
    /// Size of the rebuilt training set, at update epochs.
    pub n_train: Option<usize>,
    pub train_precision: Option<f64>,
    /// Weak pairs fed to the main generator this epoch.
    pub weak_pairs_consumed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_dev_ppl: f64,
    pub stopped_early: bool,
}

impl TrainOutcome {
    pub fn weak_pairs_consumed(&self) -> usize {
        self.history.iter().map(|r| r.weak_pairs_consumed).sum()
    }
}

/// What a checkpoint hook sees at each update epoch.
pub struct Boundary<'a, G: ?Sized> {
    pub epoch: usize,
    pub generator: &'a G,
    pub policy: &'a PolicyParams,
    pub history: &'a [EpochRecord],
}

pub type BoundaryHook<'h, G> = dyn FnMut(Boundary<'_, G>) -> Result<()> + 'h;

/// Trains `policy` and `gen` in place. On return `gen` holds the state with
/// the best dev perplexity seen at an update epoch (or the initial one).
pub fn train<G: GeneratorHandle + ?Sized>(
    cfg: &TrainerConfig,
    mode: Mode,
    policy: &mut PolicyParams,
    gen: &mut G,
    items: &[PseudoItem],
    dev: &[IdPair],
    hook: &mut BoundaryHook<'_, G>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dev.is_empty() {
        return Err(Error::Empty("dev pairs"));
    }
    policy.baseline_decay = cfg.baseline_decay;
    policy.optimizer = cfg.policy_optimizer;
    let initial_ppl = gen.perplexity(dev)?;
    let record0 = EpochRecord {
        epoch: 0,
        reward: None,
        baseline: policy.baseline,
        dev_ppl: initial_ppl,
        n_selected: 0,
        precision: None,
        generator_updated: false,
        n_train: None,
        train_precision: None,
        weak_pairs_consumed: 0,
    };
    let mut outcome = TrainOutcome {
        history: vec![record0],
        best_epoch: 0,
        best_dev_ppl: initial_ppl,
        stopped_early: false,
    };
    if mode == Mode::PlainGenerator || cfg.epochs == 0 {
        return Ok(outcome);
    }
    if items.is_empty() {
        return Err(Error::Empty("weak pair pool"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dev_order: Vec<usize> = (0..dev.len()).collect();
    dev_order.shuffle(&mut rng);
    dev_order.truncate(cfg.reward_dev_size);
    dev_order.sort_unstable();
    let reward_dev: Vec<IdPair> = dev_order.iter().map(|&i| dev[i].clone()).collect();

    let episodes = mode != Mode::NoSelection;
    let b = cfg.batch_size.min(items.len());
    let mut perm: Vec<usize> = (0..items.len()).collect();
    perm.shuffle(&mut rng);
    let mut cursor = 0;

    let mut ppl_before: Option<f64> = None;
    let mut dev_ppl = initial_ppl;
    let mut best = gen.snapshot()?;

    for epoch in 1..=cfg.epochs {
        let mut rec = EpochRecord {
            epoch,
            reward: None,
            baseline: policy.baseline,
            dev_ppl,
            n_selected: 0,
            precision: None,
            generator_updated: false,
            n_train: None,
            train_precision: None,
            weak_pairs_consumed: 0,
        };

        if episodes {
            if cursor + b > perm.len() {
                perm.shuffle(&mut rng);
                cursor = 0;
            }
            let batch = &perm[cursor..cursor + b];
            cursor += b;
            if ppl_before.is_none() {
                ppl_before = Some(gen.perplexity(&reward_dev)?);
            }
            let ep = run_episode(
                policy,
                gen,
                items,
                batch,
                &reward_dev,
                ppl_before,
                cfg.episode_budget(),
                cfg.lr_generator,
                Acting::Sample,
                &mut rng,
            )?;
            policy_update(policy, &ep, cfg.lr_policy, cfg.use_baseline)?;
            rec.reward = Some(ep.reward);
            rec.baseline = policy.baseline;
            rec.n_selected = ep.n_selected();
            rec.precision = ep.precision(items);
        }

        if epoch % cfg.period == 0 {
            let selected: Vec<usize> = if episodes {
                build_train_set(policy, items)
            } else {
                (0..items.len()).collect()
            };
            let pairs: Vec<IdPair> = selected.iter().map(|&i| items[i].ids.clone()).collect();
            let budget = cfg.update_budget.pairs(pairs.len(), items.len());
            let steps = steps_for_pass(budget, gen.batch_size(), None);
            gen.fine_tune(&pairs, steps, cfg.lr_generator)?;
            ppl_before = None;
            dev_ppl = gen.perplexity(dev)?;
            rec.dev_ppl = dev_ppl;
            rec.generator_updated = true;
            rec.n_train = Some(selected.len());
            rec.train_precision = selection_precision(selected.iter().copied(), items);
            rec.weak_pairs_consumed = pairs.len();
            log::info!(
                "epoch {epoch}: |D_train| = {}, dev ppl {dev_ppl:.4}, baseline {:.4}",
                selected.len(),
                policy.baseline
            );
            if dev_ppl < outcome.best_dev_ppl {
                outcome.best_dev_ppl = dev_ppl;
                outcome.best_epoch = epoch;
                best = gen.snapshot()?;
            }
            outcome.history.push(rec);
            hook(Boundary {
                epoch,
                generator: gen,
                policy,
                history: &outcome.history,
            })?;
            if epoch - outcome.best_epoch >= cfg.patience {
                outcome.stopped_early = true;
                break;
            }
        } else {
            outcome.history.push(rec);
        }
    }
    gen.restore(&best)?;
    Ok(outcome)
}
