//! Oracles shared by several test targets.
#![allow(dead_code)]

use paraselect::corpus::SentenceRecord;
use paraselect::generator::{forward_nll, Dims, GeneratorParams};
use paraselect::selector::{encode_pair, PairEncoding, PolicyParams, StateBuilder, N_PARAMS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

/// Scores every document from raw token counts; terms are visited in
/// first-occurrence order so sums agree bit for bit with the index.
pub fn bm25_scan(corpus: &[SentenceRecord], query: &[String], k1: f64, b: f64) -> Vec<f64> {
    let n = corpus.len() as f64;
    let avg = corpus.iter().map(|r| r.tokens.len()).sum::<usize>() as f64 / n;
    let mut terms: Vec<&String> = Vec::new();
    for t in query {
        if !terms.contains(&t) {
            terms.push(t);
        }
    }
    let df: Vec<f64> = terms
        .iter()
        .map(|t| corpus.iter().filter(|d| d.tokens.contains(t)).count() as f64)
        .collect();
    corpus
        .iter()
        .map(|doc| {
            let mut s = 0.0;
            for (t, &df) in terms.iter().zip(&df) {
                let tf = doc.tokens.iter().filter(|x| x == t).count();
                if tf == 0 {
                    continue;
                }
                let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                let tf = tf as f64;
                let norm = 1.0 - b + b * doc.tokens.len() as f64 / avg;
                s += idf * (tf * (k1 + 1.0) / (tf + k1 * norm));
            }
            s
        })
        .collect()
}

/// Positions of the `k` best kept documents: score descending, then position.
pub fn top_k(scores: &[f64], k: usize, keep: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).filter(|&d| keep(d)).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

pub fn random_corpus(rng: &mut impl Rng, n_docs: usize, n_words: usize) -> Vec<SentenceRecord> {
    (0..n_docs)
        .map(|i| {
            let len = rng.gen_range(0..12);
            let text: Vec<String> = (0..len).map(|_| format!("w{}", rng.gen_range(0..n_words))).collect();
            SentenceRecord::new(i as u64 * 3 + 1, text.join(" "), 20, Some((i % 7) as i64))
        })
        .collect()
}

pub const FD_STEP: f64 = 1e-3;
pub const FD_TOL: f64 = 1e-4;

/// `‖a − n‖ / (‖a‖ + ‖n‖)`, zero when both vanish.
pub fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
    let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt() + numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Generator weights large enough that every gate is far from linear.
pub fn tiny_params(seed: u64) -> GeneratorParams {
    let dims = Dims::new(9, 3, 4);
    let mut p = GeneratorParams::init(dims, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
    for x in &mut p.data {
        *x = rng.gen_range(-0.6..0.6);
    }
    p
}

pub fn nll(p: &GeneratorParams, src: &[u32], tgt: &[u32]) -> f64 {
    forward_nll(p, src, tgt).unwrap().0
}

/// Central differences of the loss for every coordinate of one tensor.
pub fn numeric_tensor_grad(p: &GeneratorParams, name: &str, src: &[u32], tgt: &[u32]) -> Vec<f64> {
    let (off, len) = p.dims.range(name).unwrap();
    (0..len)
        .map(|i| {
            let mut plus = p.clone();
            plus.data[off + i] += FD_STEP;
            let mut minus = p.clone();
            minus.data[off + i] -= FD_STEP;
            (nll(&plus, src, tgt) - nll(&minus, src, tgt)) / (2.0 * FD_STEP)
        })
        .collect()
}

pub fn gradient_instances() -> Vec<(u64, Vec<u32>, Vec<u32>)> {
    vec![
        (1, vec![4, 5, 6, 7], vec![7, 6, 5]),
        (2, vec![8, 3], vec![4, 4, 8, 5, 6]),
        (3, vec![5], vec![6]),
    ]
}

#[derive(Deserialize)]
pub struct MetricCase {
    pub name: String,
    pub candidates: Vec<String>,
    pub references: Vec<String>,
    pub sources: Vec<String>,
    pub alpha: f64,
    pub bleu2: f64,
    pub bleu4: f64,
    pub rouge1: f64,
    pub rouge2: f64,
    pub ibleu: f64,
}

#[derive(Deserialize)]
struct Frozen {
    cases: Vec<MetricCase>,
}

/// Values frozen by `tests/oracle/metric_oracle.py`.
pub fn metric_cases() -> Vec<MetricCase> {
    serde_json::from_str::<Frozen>(include_str!("../data/metric_cases.json")).unwrap().cases
}

pub fn split(v: &[String]) -> Vec<Vec<String>> {
    v.iter().map(|s| s.split_whitespace().map(String::from).collect()).collect()
}

fn policy_encodings(n: usize, seed: u64) -> Vec<PairEncoding> {
    let words = ["red", "fox", "the", "runs", "blue", "sky", "a", "cat"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut s = || -> Vec<String> {
                (0..rng.gen_range(1..7)).map(|_| words[rng.gen_range(0..words.len())].to_string()).collect()
            };
            let (x, y) = (s(), s());
            encode_pair(&x, &y, rng.gen_range(0.0..12.0))
        })
        .collect()
}

/// Largest relative error of `∇θ log π(a | s)` against central differences,
/// over both actions, with and without input standardization, along a
/// trajectory whose selection history grows.
pub fn policy_fd_worst() -> f64 {
    let zs = policy_encodings(40, 7);
    let mut worst = 0.0f64;
    for standardize in [false, true] {
        let mut policy = PolicyParams::new();
        if standardize {
            policy.fit_input(&zs);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let theta: Vec<f64> = (0..N_PARAMS).map(|_| rng.gen_range(-0.8..0.8)).collect();
        policy.set_flat(&theta).unwrap();
        let mut builder = StateBuilder::new();
        for (t, z) in zs.iter().take(12).enumerate() {
            let state = builder.state(z);
            for action in [0u8, 1] {
                let analytic = policy.grad_log_prob(&state, action);
                let numeric: Vec<f64> = (0..N_PARAMS)
                    .map(|i| {
                        let mut th = theta.clone();
                        th[i] += FD_STEP;
                        let mut plus = policy.clone();
                        plus.set_flat(&th).unwrap();
                        th[i] -= 2.0 * FD_STEP;
                        let mut minus = policy.clone();
                        minus.set_flat(&th).unwrap();
                        (plus.log_prob(&state, action) - minus.log_prob(&state, action)) / (2.0 * FD_STEP)
                    })
                    .collect();
                worst = worst.max(rel_err(&analytic, &numeric));
            }
            if t % 3 != 1 {
                builder.push_selected(z);
            }
        }
    }
    worst
}
