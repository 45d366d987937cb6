//! Deterministic pair features standing in for a learned pair encoder.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

/// Width of a [`PairEncoding`].
pub const F: usize = 12;

/// Indices into a [`PairEncoding`].
pub mod feat {
    pub const UNIGRAM_JACCARD: usize = 0;
    pub const BIGRAM_JACCARD: usize = 1;
    pub const PRECISION_X: usize = 2;
    pub const PRECISION_Y: usize = 3;
    pub const LENGTH_RATIO: usize = 4;
    pub const LENGTH_GAP: usize = 5;
    pub const BM25: usize = 6;
    pub const EDIT_DISTANCE: usize = 7;
    pub const EXACT_MATCH: usize = 8;
    pub const CONTENT_JACCARD: usize = 9;
    pub const BIAS: usize = 10;
    pub const RESERVED: usize = 11;
}

const STOPWORDS: &[&str] = &[
    "a", "an", "the", "and", "or", "but", "of", "to", "in", "on", "at", "by", "for", "with", "from", "as",
    "is", "are", "was", "were", "be", "been", "has", "have", "had", "do", "does", "did", "it", "its", "this",
    "that", "who", "which", "what", "i", "you", "he", "she", "we", "they", "my", "your", "his", "her", "our",
    "their", "me", "him", "us", "them", "not", "no", "so", "if", "than", "then", "there", "how", "why",
    "when", "where", "can", "will", "would", "should", "could", "more", "once", "any", "all",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairEncoding {
    pub z: [f64; F],
}

impl PairEncoding {
    pub fn is_finite(&self) -> bool {
        self.z.iter().all(|v| v.is_finite())
    }
}

fn is_punct(tok: &str) -> bool {
    !tok.chars().any(char::is_alphanumeric)
}

/// Set Jaccard; two empty sets score 1 only when the sequences are equal.
fn jaccard<T: Eq + std::hash::Hash>(a: &HashSet<T>, b: &HashSet<T>, equal: bool) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return if equal { 1.0 } else { 0.0 };
    }
    a.intersection(b).count() as f64 / union as f64
}

fn levenshtein(a: &[String], b: &[String]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ta) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, tb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ta != tb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Encodes a (source, candidate) pair given its BM25 score.
pub fn encode_pair(x: &[String], y: &[String], bm25_score: f64) -> PairEncoding {
    let equal = x == y;
    let ux: HashSet<&str> = x.iter().map(String::as_str).collect();
    let uy: HashSet<&str> = y.iter().map(String::as_str).collect();
    let bx: HashSet<(&str, &str)> = x.windows(2).map(|w| (w[0].as_str(), w[1].as_str())).collect();
    let by: HashSet<(&str, &str)> = y.windows(2).map(|w| (w[0].as_str(), w[1].as_str())).collect();
    let content = |s: &HashSet<&str>| -> HashSet<String> {
        s.iter()
            .filter(|t| !is_punct(t) && !STOPWORDS.contains(t))
            .map(|t| t.to_string())
            .collect()
    };
    let shared = ux.intersection(&uy).count() as f64;
    let (lx, ly) = (x.len() as f64, y.len() as f64);
    let longest = lx.max(ly);

    let mut z = [0.0; F];
    z[feat::UNIGRAM_JACCARD] = jaccard(&ux, &uy, equal);
    z[feat::BIGRAM_JACCARD] = jaccard(&bx, &by, equal);
    z[feat::PRECISION_X] = if ux.is_empty() { 0.0 } else { shared / ux.len() as f64 };
    z[feat::PRECISION_Y] = if uy.is_empty() { 0.0 } else { shared / uy.len() as f64 };
    z[feat::LENGTH_RATIO] = if longest == 0.0 { 1.0 } else { lx.min(ly) / longest };
    z[feat::LENGTH_GAP] = ((lx - ly).abs() / 20.0).min(1.0);
    let s = bm25_score.max(0.0);
    z[feat::BM25] = s / (s + 1.0);
    z[feat::EDIT_DISTANCE] = if longest == 0.0 { 0.0 } else { levenshtein(x, y) as f64 / longest };
    z[feat::EXACT_MATCH] = f64::from(u8::from(equal));
    z[feat::CONTENT_JACCARD] = jaccard(&content(&ux), &content(&uy), equal);
    z[feat::BIAS] = 1.0;
    PairEncoding { z }
}
