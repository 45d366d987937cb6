//! In-process BM25 index and pseudo-paraphrase expansion.

mod expand;
mod index;

pub use expand::{expand, expand_with, neighbours, read_pairs_jsonl, write_pairs_jsonl, Exclusion, WeakPair};
pub use index::{fingerprint, Bm25Params, InvertedIndex};
