use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::SentenceRecord;
use crate::error::{Error, Result};

const INDEX_FORMAT: &str = "paraselect-bm25-index";
const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

/// Term postings over a fixed pool of sentences. Documents are addressed by
/// position; `doc_ids` maps positions back to record ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    pub postings: BTreeMap<String, Vec<(u32, u32)>>,
    pub doc_lengths: Vec<u32>,
    pub doc_ids: Vec<u64>,
    doc_fingerprints: Vec<u64>,
    pub doc_clusters: Vec<Option<i64>>,
    pub n_docs: usize,
    pub avg_doc_len: f64,
    pub params: Bm25Params,
}

/// Stable 64-bit digest of a token sequence.
pub fn fingerprint(tokens: &[String]) -> u64 {
    let mut h = Sha256::new();
    for t in tokens {
        h.update(t.as_bytes());
        h.update([0u8]);
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

impl InvertedIndex {
    pub fn build(corpus: &[SentenceRecord]) -> Result<Self> {
        Self::build_with(corpus, Bm25Params::default())
    }

    pub fn build_with(corpus: &[SentenceRecord], params: Bm25Params) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::Empty("index corpus"));
        }
        let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        for (doc, rec) in corpus.iter().enumerate() {
            let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
            for t in &rec.tokens {
                *tf.entry(t.as_str()).or_default() += 1;
            }
            for (t, n) in tf {
                postings.entry(t.to_string()).or_default().push((doc as u32, n));
            }
        }
        let doc_lengths: Vec<u32> = corpus.iter().map(|r| r.tokens.len() as u32).collect();
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        Ok(Self {
            postings,
            avg_doc_len: total as f64 / corpus.len() as f64,
            doc_lengths,
            doc_ids: corpus.iter().map(|r| r.id).collect(),
            doc_fingerprints: corpus.iter().map(|r| fingerprint(&r.tokens)).collect(),
            doc_clusters: corpus.iter().map(|r| r.cluster_id).collect(),
            n_docs: corpus.len(),
            params,
        })
    }

    pub fn idf(&self, df: usize) -> f64 {
        let n = self.n_docs as f64;
        let df = df as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// Saturated term weight `tf (k1 + 1) / (tf + k1 (1 - b + b |d| / avgdl))`.
    pub fn tf_weight(&self, tf: u32, doc_len: u32) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let tf = f64::from(tf);
        let norm = 1.0 - b + b * f64::from(doc_len) / self.avg_doc_len;
        tf * (k1 + 1.0) / (tf + k1 * norm)
    }

    pub fn position_of(&self, record_id: u64) -> Option<usize> {
        self.doc_ids.iter().position(|&id| id == record_id)
    }

    pub(crate) fn doc_fingerprint(&self, doc: usize) -> u64 {
        self.doc_fingerprints[doc]
    }

    /// BM25 of `query` against the document at position `doc`.
    pub fn score(&self, query: &[String], doc: usize) -> f64 {
        let mut score = 0.0;
        for term in unique_terms(query) {
            let Some(list) = self.postings.get(term) else {
                continue;
            };
            if let Ok(i) = list.binary_search_by_key(&(doc as u32), |&(d, _)| d) {
                score += self.idf(list.len()) * self.tf_weight(list[i].1, self.doc_lengths[doc]);
            }
        }
        score
    }

    /// Top-`k` documents by descending score, ties by ascending position.
    /// Documents with no shared term score zero and still fill the list.
    pub fn retrieve(&self, query: &[String], k: usize, exclude_id: Option<u64>) -> Vec<(u64, f64)> {
        self.retrieve_positions(query, k, |doc| Some(self.doc_ids[doc]) != exclude_id)
            .into_iter()
            .map(|(d, s)| (self.doc_ids[d], s))
            .collect()
    }

    /// Like [`InvertedIndex::retrieve`], returning document positions and
    /// keeping only documents accepted by `keep`.
    pub fn retrieve_positions(
        &self,
        query: &[String],
        k: usize,
        keep: impl Fn(usize) -> bool,
    ) -> Vec<(usize, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let mut scores = vec![0.0f64; self.n_docs];
        let mut touched = vec![false; self.n_docs];
        for term in unique_terms(query) {
            let Some(list) = self.postings.get(term) else {
                continue;
            };
            let idf = self.idf(list.len());
            for &(doc, tf) in list {
                let doc = doc as usize;
                scores[doc] += idf * self.tf_weight(tf, self.doc_lengths[doc]);
                touched[doc] = true;
            }
        }
        let mut hits: Vec<usize> = (0..self.n_docs).filter(|&d| touched[d] && keep(d)).collect();
        let by_rank = |a: &usize, b: &usize| {
            scores[*b]
                .partial_cmp(&scores[*a])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(b))
        };
        if hits.len() > k {
            hits.select_nth_unstable_by(k - 1, by_rank);
            hits.truncate(k);
        }
        hits.sort_unstable_by(by_rank);
        // Untouched documents score exactly zero; a touched one may also
        // land on zero, so merge by the same ordering rule.
        if hits.len() < k {
            let rest = (0..self.n_docs).filter(|&d| !touched[d] && keep(d));
            let mut merged: Vec<usize> = hits.into_iter().chain(rest).collect();
            merged.sort_by(by_rank);
            merged.truncate(k);
            hits = merged;
        }
        hits.into_iter().map(|d| (d, scores[d])).collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = IndexFile {
            format: INDEX_FORMAT.to_string(),
            version: INDEX_VERSION,
            index: self.clone(),
        };
        let json = serde_json::to_vec(&file)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let file: IndexFile = serde_json::from_slice(&bytes)?;
        if file.format != INDEX_FORMAT || file.version != INDEX_VERSION {
            return Err(Error::Checkpoint(format!(
                "{}: expected {INDEX_FORMAT} v{INDEX_VERSION}, found {} v{}",
                path.display(),
                file.format,
                file.version
            )));
        }
        Ok(file.index)
    }
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    format: String,
    version: u32,
    index: InvertedIndex,
}

/// Distinct query terms in first-occurrence order.
pub(crate) fn unique_terms(query: &[String]) -> impl Iterator<Item = &str> {
    query
        .iter()
        .enumerate()
        .filter(move |(i, t)| !query[..*i].contains(t))
        .map(|(_, t)| t.as_str())
}
