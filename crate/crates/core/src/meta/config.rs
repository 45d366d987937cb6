use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::steps_for_pass;
use crate::selector::PolicyOptimizer;

/// Knobs of the selection/generation training loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    /// Weak pairs per meta-selection episode (`B`).
    pub batch_size: usize,
    /// Expansion width used to build the weak pool.
    pub k: usize,
    /// Main generator update period in epochs (`T`).
    pub period: usize,
    pub epochs: usize,
    pub lr_policy: f64,
    pub policy_optimizer: PolicyOptimizer,
    pub lr_generator: f64,
    /// Cap on episode fine-tune steps; an episode runs one pass over its
    /// selection, at most this many steps.
    pub episode_steps: usize,
    /// Always run exactly `episode_steps` steps, cycling over the selection,
    /// so the reward does not depend on how many pairs were picked.
    pub fixed_episode_steps: bool,
    /// How many pairs one generator pass is sized for, at warm-up and at
    /// every period boundary.
    pub update_budget: UpdateBudget,
    /// Size of the fixed dev subsample used for episode rewards.
    pub reward_dev_size: usize,
    pub patience: usize,
    pub use_baseline: bool,
    pub baseline_decay: f64,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            batch_size: 512,
            k: 5,
            period: 10,
            epochs: 100,
            lr_policy: 0.01,
            policy_optimizer: PolicyOptimizer::Sgd,
            lr_generator: 1e-3,
            episode_steps: 32,
            fixed_episode_steps: false,
            update_budget: UpdateBudget::Pool,
            reward_dev_size: 256,
            patience: 50,
            use_baseline: true,
            baseline_decay: 0.9,
            seed: 0,
        }
    }
}

impl TrainerConfig {
    pub fn episode_budget(&self) -> EpisodeBudget {
        if self.fixed_episode_steps {
            EpisodeBudget::Fixed(self.episode_steps)
        } else {
            EpisodeBudget::Pass { cap: self.episode_steps }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("batch_size", self.batch_size),
            ("k", self.k),
            ("period", self.period),
            ("episode_steps", self.episode_steps),
            ("reward_dev_size", self.reward_dev_size),
            ("patience", self.patience),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidArgument(format!("{name} must be positive")));
        }
        if self.epochs > 0 && self.period > self.epochs {
            return Err(Error::InvalidArgument(format!(
                "period {} exceeds epochs {}",
                self.period, self.epochs
            )));
        }
        if !(self.lr_policy > 0.0 && self.lr_generator > 0.0) {
            return Err(Error::InvalidArgument("learning rates must be positive".into()));
        }
        if !(self.baseline_decay > 0.0 && self.baseline_decay < 1.0) {
            return Err(Error::InvalidArgument("baseline_decay must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Fine-tune steps an episode spends on its selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeBudget {
    /// One pass over the selection, capped.
    Pass { cap: usize },
    Fixed(usize),
}

impl EpisodeBudget {
    pub fn steps(self, n_selected: usize, batch_size: usize) -> usize {
        match self {
            EpisodeBudget::Pass { cap } => steps_for_pass(n_selected, batch_size, Some(cap)),
            EpisodeBudget::Fixed(n) => n,
        }
    }
}

/// Size of one generator pass in pairs. `Pool` and `Pairs` give every mode
/// the same number of optimizer steps whatever the selector keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateBudget {
    /// One pass over the pairs actually trained on.
    Selection,
    /// One pass over the whole weak pool.
    Pool,
    Pairs(usize),
}

impl UpdateBudget {
    pub fn pairs(self, n_train: usize, n_pool: usize) -> usize {
        match self {
            UpdateBudget::Selection => n_train,
            UpdateBudget::Pool => n_pool,
            UpdateBudget::Pairs(n) => n,
        }
    }
}

/// Training regimes compared in the ablation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Full,
    NoSelection,
    NoPretrainGenerator,
    PlainGenerator,
}

impl Mode {
    pub const ALL: [Mode; 4] = [
        Mode::Full,
        Mode::NoSelection,
        Mode::NoPretrainGenerator,
        Mode::PlainGenerator,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::NoSelection => "no_selection",
            Mode::NoPretrainGenerator => "no_pretrain_generator",
            Mode::PlainGenerator => "plain_generator",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownMode(s.to_string()))
    }
}
