use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::SentenceRecord;
use crate::error::{Error, Result};
use crate::retrieval::index::{fingerprint, InvertedIndex};

/// A source sentence and one retrieved pseudo-paraphrase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakPair {
    #[serde(rename = "src")]
    pub src_id: u64,
    #[serde(rename = "cand")]
    pub cand_id: u64,
    #[serde(rename = "score")]
    pub bm25_score: f64,
    pub rank: usize,
    #[serde(rename = "gold", default, skip_serializing_if = "Option::is_none")]
    pub is_true_paraphrase: Option<bool>,
}

/// Which candidates a source may not retrieve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exclusion {
    pub self_id: Option<u64>,
    pub duplicate_of: Option<u64>,
}

impl Exclusion {
    pub fn for_source(src: &SentenceRecord, exclude_duplicates: bool) -> Self {
        Self {
            self_id: Some(src.id),
            duplicate_of: exclude_duplicates.then(|| fingerprint(&src.tokens)),
        }
    }
}

/// Ranked neighbours of `src` with the self match (and by default exact
/// text duplicates) removed.
/// Results are document positions in the index.
pub fn neighbours(
    index: &InvertedIndex,
    src: &SentenceRecord,
    k: usize,
    exclude_duplicates: bool,
) -> Vec<(usize, f64)> {
    let ex = Exclusion::for_source(src, exclude_duplicates);
    index.retrieve_positions(&src.tokens, k, |doc| {
        Some(index.doc_ids[doc]) != ex.self_id
            && Some(index.doc_fingerprint(doc)) != ex.duplicate_of
    })
}

/// Up to `k` weak pairs per source, in (source order, rank) order.
pub fn expand(index: &InvertedIndex, sources: &[SentenceRecord], k: usize) -> Vec<WeakPair> {
    expand_with(index, sources, k, true)
}

pub fn expand_with(
    index: &InvertedIndex,
    sources: &[SentenceRecord],
    k: usize,
    exclude_duplicates: bool,
) -> Vec<WeakPair> {
    let mut out = Vec::with_capacity(sources.len() * k);
    for src in sources {
        for (rank, (doc, score)) in neighbours(index, src, k, exclude_duplicates)
            .into_iter()
            .enumerate()
        {
            let gold = match (src.cluster_id, index.doc_clusters[doc]) {
                (Some(a), Some(b)) => Some(a == b),
                (Some(_), None) => Some(false),
                (None, _) => None,
            };
            out.push(WeakPair {
                src_id: src.id,
                cand_id: index.doc_ids[doc],
                bm25_score: score,
                rank: rank + 1,
                is_true_paraphrase: gold,
            });
        }
    }
    out
}

pub fn write_pairs_jsonl(pairs: &[WeakPair], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for p in pairs {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_pairs_jsonl(path: impl AsRef<Path>) -> Result<Vec<WeakPair>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
