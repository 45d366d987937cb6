//! Generation and ranking metrics.

mod overlap;
mod ranking;

use serde::{Deserialize, Serialize};

use crate::corpus::ParallelPair;
use crate::error::{Error, Result};
use crate::generator::{GeneratorHandle, IdPair};
use crate::corpus::Vocabulary;

pub use overlap::{bleu, ibleu, rouge_n, sentence_bleu};
pub use ranking::{ndcg_at_k, recall_at_k};

/// Default iBLEU balance.
pub const DEFAULT_ALPHA: f64 = 0.9;

/// Overlap metrics of a candidate set, all on the 0-100 scale.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    pub bleu2: f64,
    pub bleu4: f64,
    pub rouge1: f64,
    pub rouge2: f64,
    pub ibleu: f64,
    pub bleu: f64,
    pub n_pairs: usize,
}

impl MetricReport {
    pub fn compute(
        candidates: &[Vec<String>],
        references: &[Vec<String>],
        sources: &[Vec<String>],
        alpha: f64,
    ) -> Result<Self> {
        let bleu4 = bleu(candidates, references, 4)?;
        Ok(Self {
            bleu2: bleu(candidates, references, 2)?,
            bleu4,
            rouge1: rouge_n(candidates, references, 1)?,
            rouge2: rouge_n(candidates, references, 2)?,
            ibleu: ibleu(candidates, references, sources, alpha)?,
            bleu: bleu4,
            n_pairs: candidates.len(),
        })
    }

    /// Copy with every real rounded to four decimals.
    pub fn rounded(&self) -> Self {
        Self {
            bleu2: round4(self.bleu2),
            bleu4: round4(self.bleu4),
            rouge1: round4(self.rouge1),
            rouge2: round4(self.rouge2),
            ibleu: round4(self.ibleu),
            bleu: round4(self.bleu),
            n_pairs: self.n_pairs,
        }
    }
}

pub fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// Token-level perplexity of `pairs` under `gen`, EOS included.
pub fn perplexity<G: GeneratorHandle + ?Sized>(
    gen: &G,
    vocab: &Vocabulary,
    pairs: &[ParallelPair],
) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("perplexity pairs"));
    }
    let ids: Vec<IdPair> = pairs.iter().map(|p| IdPair::from_pair(vocab, p)).collect();
    gen.perplexity(&ids)
}
