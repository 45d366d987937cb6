//! Ranking quality of retrieved candidates under BM25 and the selector.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::SentenceRecord;
use crate::error::{Error, Result};
use crate::metrics::{ndcg_at_k, recall_at_k};
use crate::retrieval::{neighbours, InvertedIndex};
use crate::selector::{encode_pair, greedy_action, PairEncoding, PolicyParams, StateBuilder};

pub const STUDY_DEPTH: usize = 50;
pub const STUDY_KS: [usize; 6] = [1, 3, 5, 10, 20, 50];

/// One retrieved candidate, in BM25 order.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyCandidate {
    pub doc: usize,
    pub bm25: f64,
    pub z: PairEncoding,
    pub relevant: bool,
}

/// Something that reorders a BM25 candidate list.
pub trait Ranker {
    fn name(&self) -> &str;

    /// One score per candidate; higher ranks first, ties keep BM25 order.
    fn scores(&self, src: &SentenceRecord, candidates: &[StudyCandidate]) -> Vec<f64>;
}

pub struct Bm25Ranker;

impl Ranker for Bm25Ranker {
    fn name(&self) -> &str {
        "bm25"
    }

    fn scores(&self, _src: &SentenceRecord, candidates: &[StudyCandidate]) -> Vec<f64> {
        candidates.iter().map(|c| c.bm25).collect()
    }
}

/// Select probabilities with states built greedily in BM25 order, exactly
/// as when the training set is assembled.
pub struct SelectorRanker<'a>(pub &'a PolicyParams);

impl Ranker for SelectorRanker<'_> {
    fn name(&self) -> &str {
        "selector"
    }

    fn scores(&self, _src: &SentenceRecord, candidates: &[StudyCandidate]) -> Vec<f64> {
        let mut builder = StateBuilder::new();
        candidates
            .iter()
            .map(|c| {
                let v = self.0.select_prob(&builder.state(&c.z));
                if greedy_action(v) == 1 {
                    builder.push_selected(&c.z);
                }
                v[1]
            })
            .collect()
    }
}

/// Scores candidates by their labels.
pub struct OracleRanker;

impl Ranker for OracleRanker {
    fn name(&self) -> &str {
        "oracle"
    }

    fn scores(&self, _src: &SentenceRecord, candidates: &[StudyCandidate]) -> Vec<f64> {
        candidates.iter().map(|c| f64::from(u8::from(c.relevant))).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Curves {
    pub ndcg: BTreeMap<usize, f64>,
    pub recall: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankingStudy {
    pub rankers: BTreeMap<String, Curves>,
    pub n_sources: usize,
    /// Sources whose candidates hold no relevant item; left out of means.
    pub n_without_relevant: usize,
}

/// Candidate list of `src`: its top-50 neighbours, self and exact
/// duplicates excluded, labelled by cluster identity. `corpus` is the
/// record list the index was built from.
pub fn candidates(index: &InvertedIndex, corpus: &[SentenceRecord], src: &SentenceRecord) -> Vec<StudyCandidate> {
    neighbours(index, src, STUDY_DEPTH, true)
        .into_iter()
        .map(|(doc, bm25)| StudyCandidate {
            doc,
            bm25,
            z: encode_pair(&src.tokens, &corpus[doc].tokens, bm25),
            relevant: matches!((src.cluster_id, index.doc_clusters[doc]), (Some(a), Some(b)) if a == b),
        })
        .collect()
}

/// Relevance flags of `candidates` after sorting by `scores`.
pub fn ordered_relevance(candidates: &[StudyCandidate], scores: &[f64]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.into_iter().map(|i| candidates[i].relevant).collect()
}

pub fn ranking_study(
    index: &InvertedIndex,
    corpus: &[SentenceRecord],
    sources: &[SentenceRecord],
    rankers: &[&dyn Ranker],
    ks: &[usize],
) -> Result<RankingStudy> {
    if corpus.len() != index.n_docs {
        return Err(Error::LengthMismatch {
            left: corpus.len(),
            right: index.n_docs,
        });
    }
    let mut study = RankingStudy {
        n_sources: sources.len(),
        ..Default::default()
    };
    let mut sums: Vec<(Vec<f64>, Vec<f64>)> = vec![(vec![0.0; ks.len()], vec![0.0; ks.len()]); rankers.len()];
    let mut used = 0usize;
    for src in sources {
        let cands = candidates(index, corpus, src);
        let total = cands.iter().filter(|c| c.relevant).count();
        if total == 0 {
            study.n_without_relevant += 1;
            continue;
        }
        used += 1;
        for (r, ranker) in rankers.iter().enumerate() {
            let rel = ordered_relevance(&cands, &ranker.scores(src, &cands));
            for (i, &k) in ks.iter().enumerate() {
                sums[r].0[i] += ndcg_at_k(&rel, k);
                sums[r].1[i] += recall_at_k(&rel, k, total)?;
            }
        }
    }
    for (r, ranker) in rankers.iter().enumerate() {
        let mean = |v: &[f64]| -> BTreeMap<usize, f64> {
            ks.iter()
                .zip(v)
                .map(|(&k, &s)| (k, if used == 0 { 0.0 } else { s / used as f64 }))
                .collect()
        };
        study.rankers.insert(
            ranker.name().to_string(),
            Curves {
                ndcg: mean(&sums[r].0),
                recall: mean(&sums[r].1),
            },
        );
    }
    Ok(study)
}

/// BM25 and selector curves over the standard K grid.
pub fn standard_study(
    index: &InvertedIndex,
    corpus: &[SentenceRecord],
    policy: &PolicyParams,
    sources: &[SentenceRecord],
) -> Result<RankingStudy> {
    ranking_study(index, corpus, sources, &[&Bm25Ranker, &SelectorRanker(policy)], &STUDY_KS)
}
