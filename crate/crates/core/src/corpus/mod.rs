//! Dataset ingestion, normalization, vocabulary and synthetic corpora.

mod dataset;
pub mod synth;
mod tokenize;
mod vocab;

pub use dataset::{DatasetLine, ParallelPair, SentenceRecord, Split, SplitBundle};
pub use synth::{synth_corpus, synth_lines, SynthSpec};
pub use tokenize::{tokenize, DEFAULT_MAX_LEN};
pub use vocab::{Vocabulary, BOS, DEFAULT_VOCAB_CAP, EOS, PAD, RESERVED, UNK};
