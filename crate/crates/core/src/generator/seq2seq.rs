use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::model::{backward_into, forward_nll, greedy_decode};
use crate::generator::params::{Dims, GeneratorParams};
use crate::generator::{GeneratorHandle, IdPair};
use crate::optim::{clip_global_norm, Adam};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub embed: usize,
    pub hidden: usize,
    pub batch_size: usize,
    pub clip_norm: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            embed: 32,
            hidden: 64,
            batch_size: 8,
            clip_norm: 5.0,
        }
    }
}

/// Full mutable state of a [`Seq2Seq`]: weights, Adam moments and the
/// shuffling stream position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seq2SeqState {
    pub params: GeneratorParams,
    pub adam: Adam,
    pub seed: u64,
    pub calls: u64,
}

/// The in-process generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Seq2Seq {
    pub(crate) state: Seq2SeqState,
    pub config: GeneratorConfig,
}

impl Seq2Seq {
    pub fn new(vocab_size: usize, config: GeneratorConfig, seed: u64) -> Self {
        let dims = Dims::new(vocab_size, config.embed, config.hidden);
        Self::from_params(GeneratorParams::init(dims, seed), config, seed)
    }

    pub fn from_params(params: GeneratorParams, config: GeneratorConfig, seed: u64) -> Self {
        let n = params.data.len();
        Self {
            state: Seq2SeqState {
                params,
                adam: Adam::new(n),
                seed,
                calls: 0,
            },
            config,
        }
    }

    pub fn from_state(state: Seq2SeqState, config: GeneratorConfig) -> Self {
        Self { state, config }
    }

    pub fn params(&self) -> &GeneratorParams {
        &self.state.params
    }

    pub fn params_mut(&mut self) -> &mut GeneratorParams {
        &mut self.state.params
    }

    pub fn state(&self) -> &Seq2SeqState {
        &self.state
    }

    pub fn dims(&self) -> Dims {
        self.state.params.dims
    }

    /// Summed NLL and token count over `pairs`.
    pub fn total_nll(&self, pairs: &[IdPair]) -> Result<(f64, usize)> {
        let mut nll = 0.0;
        let mut tokens = 0;
        for p in pairs {
            let (l, cache) = forward_nll(&self.state.params, &p.src, &p.tgt)?;
            nll += l;
            tokens += cache.n_tokens();
        }
        Ok((nll, tokens))
    }

    /// Mean per-pair loss and its gradient over a mini-batch.
    pub fn batch_gradient(&self, batch: &[&IdPair]) -> Result<(f64, Vec<f64>)> {
        let params = &self.state.params;
        let mut grad = vec![0.0; params.data.len()];
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for p in batch {
            let (l, cache) = forward_nll(params, &p.src, &p.tgt)?;
            loss += l * scale;
            backward_into(params, &cache, scale, &mut grad)?;
        }
        Ok((loss, grad))
    }
}

impl GeneratorHandle for Seq2Seq {
    type Snapshot = Seq2SeqState;

    fn fine_tune(&mut self, pairs: &[IdPair], steps: usize, lr: f64) -> Result<()> {
        if pairs.is_empty() || steps == 0 {
            return Ok(());
        }
        let before = self.state.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(self.state.seed);
        rng.set_stream(self.state.calls);
        self.state.calls += 1;

        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.shuffle(&mut rng);
        let mut cursor = 0;
        let bs = self.config.batch_size.max(1);
        for step in 0..steps {
            let mut batch = Vec::with_capacity(bs);
            while batch.len() < bs.min(pairs.len()) {
                if cursor == order.len() {
                    order.shuffle(&mut rng);
                    cursor = 0;
                }
                batch.push(&pairs[order[cursor]]);
                cursor += 1;
            }
            let (loss, mut grad) = match self.batch_gradient(&batch) {
                Ok(v) => v,
                Err(e) => {
                    self.state = before;
                    return Err(e);
                }
            };
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                self.state = before;
                return Err(Error::NonFinite(format!(
                    "generator loss {loss} at step {step}; parameters restored"
                )));
            }
            clip_global_norm(&mut grad, self.config.clip_norm);
            let Seq2SeqState { params, adam, .. } = &mut self.state;
            adam.step(&mut params.data, &grad, lr);
        }
        Ok(())
    }

    fn perplexity(&self, pairs: &[IdPair]) -> Result<f64> {
        if pairs.is_empty() {
            return Err(Error::Empty("perplexity pairs"));
        }
        let (nll, tokens) = self.total_nll(pairs)?;
        Ok((nll / tokens as f64).exp())
    }

    fn generate(&self, src: &[u32], max_len: usize) -> Result<Vec<u32>> {
        greedy_decode(&self.state.params, src, max_len)
    }

    fn snapshot(&self) -> Result<Self::Snapshot> {
        Ok(self.state.clone())
    }

    fn restore(&mut self, snapshot: &Self::Snapshot) -> Result<()> {
        if snapshot.params.dims != self.state.params.dims {
            return Err(Error::Shape("snapshot dims differ from generator".into()));
        }
        self.state.clone_from(snapshot);
        Ok(())
    }

    fn batch_size(&self) -> usize {
        self.config.batch_size
    }
}
