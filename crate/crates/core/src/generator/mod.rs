//! The paraphrase generator: a gated-recurrent encoder-decoder with
//! dot-product attention, and the [`GeneratorHandle`] contract that lets a
//! remote model stand in for it.

mod checkpoint;
pub mod loopback;
mod model;
mod params;
pub mod remote;
mod seq2seq;

use serde::{Deserialize, Serialize};

use crate::corpus::{ParallelPair, SentenceRecord, Vocabulary};
use crate::error::Result;

pub use model::{backward, backward_into, forward_nll, greedy_decode, Cache};
pub use params::{Dims, GeneratorParams};
pub use loopback::LoopbackServer;
pub use remote::RemoteGenerator;
pub use seq2seq::{GeneratorConfig, Seq2Seq, Seq2SeqState};

/// A source/target pair as vocabulary ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdPair {
    pub src: Vec<u32>,
    pub tgt: Vec<u32>,
}

impl IdPair {
    pub fn from_records(vocab: &Vocabulary, src: &SentenceRecord, tgt: &SentenceRecord) -> Self {
        Self {
            src: vocab.encode(&src.tokens),
            tgt: vocab.encode(&tgt.tokens),
        }
    }

    pub fn from_pair(vocab: &Vocabulary, pair: &ParallelPair) -> Self {
        Self::from_records(vocab, &pair.src, &pair.reference)
    }
}

/// Capability set shared by the built-in generator and remote adapters.
///
/// `restore(snapshot())` must leave every later output unchanged, and
/// `fine_tune` on an empty pair list must be a no-op.
pub trait GeneratorHandle {
    type Snapshot: Clone;

    /// `steps` optimizer steps over shuffled mini-batches of `pairs`.
    fn fine_tune(&mut self, pairs: &[IdPair], steps: usize, lr: f64) -> Result<()>;

    /// Token-level perplexity under teacher forcing, EOS included.
    fn perplexity(&self, pairs: &[IdPair]) -> Result<f64>;

    fn generate(&self, src: &[u32], max_len: usize) -> Result<Vec<u32>>;

    fn snapshot(&self) -> Result<Self::Snapshot>;

    fn restore(&mut self, snapshot: &Self::Snapshot) -> Result<()>;

    /// Mini-batch size used by `fine_tune`.
    fn batch_size(&self) -> usize;
}

/// Steps needed for one pass over `n` pairs, optionally capped.
pub fn steps_for_pass(n: usize, batch_size: usize, cap: Option<usize>) -> usize {
    let steps = n.div_ceil(batch_size.max(1));
    cap.map_or(steps, |c| steps.min(c))
}

/// Warm-up training on the weak pairs: `epochs` full passes.
pub fn pretrain<G: GeneratorHandle + ?Sized>(gen: &mut G, pairs: &[IdPair], epochs: usize, lr: f64) -> Result<()> {
    if pairs.is_empty() {
        return Err(crate::error::Error::Empty("pretraining pairs"));
    }
    let steps = epochs * steps_for_pass(pairs.len(), gen.batch_size(), None);
    gen.fine_tune(pairs, steps, lr)
}
