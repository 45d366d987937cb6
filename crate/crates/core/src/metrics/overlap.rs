use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_default() += 1;
        }
    }
    counts
}

/// Clipped overlap and total candidate n-gram count.
fn clipped<T: Eq + Hash>(cand: &[T], reference: &[T], n: usize) -> (usize, usize) {
    let c = ngram_counts(cand, n);
    let r = ngram_counts(reference, n);
    let overlap = c
        .iter()
        .map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0)))
        .sum();
    (overlap, cand.len().saturating_sub(n - 1))
}

fn check_aligned(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    Ok(())
}

fn check_order(max_n: usize) -> Result<()> {
    if max_n == 0 {
        return Err(Error::InvalidArgument("n-gram order must be positive".into()));
    }
    Ok(())
}

/// Corpus-level BLEU on a 0-100 scale, single reference, no smoothing.
pub fn bleu<T: Eq + Hash>(candidates: &[Vec<T>], references: &[Vec<T>], max_n: usize) -> Result<f64> {
    check_aligned(candidates.len(), references.len())?;
    check_order(max_n)?;
    let mut matches = vec![0usize; max_n];
    let mut totals = vec![0usize; max_n];
    let (mut c_len, mut r_len) = (0usize, 0usize);
    for (c, r) in candidates.iter().zip(references) {
        c_len += c.len();
        r_len += r.len();
        for n in 1..=max_n {
            let (m, t) = clipped(c, r, n);
            matches[n - 1] += m;
            totals[n - 1] += t;
        }
    }
    if c_len == 0 || matches.iter().zip(&totals).any(|(&m, &t)| m == 0 || t == 0) {
        return Ok(0.0);
    }
    let log_p: f64 = matches
        .iter()
        .zip(&totals)
        .map(|(&m, &t)| (m as f64 / t as f64).ln())
        .sum::<f64>()
        / max_n as f64;
    Ok(100.0 * brevity_penalty(c_len, r_len) * log_p.exp())
}

fn brevity_penalty(c_len: usize, r_len: usize) -> f64 {
    if c_len >= r_len {
        1.0
    } else {
        (1.0 - r_len as f64 / c_len as f64).exp()
    }
}

/// Sentence-level BLEU with zero counts replaced by `1e-9`; diagnostics only.
pub fn sentence_bleu<T: Eq + Hash>(candidate: &[T], reference: &[T], max_n: usize) -> f64 {
    const EPS: f64 = 1e-9;
    if candidate.is_empty() || max_n == 0 {
        return 0.0;
    }
    let log_p: f64 = (1..=max_n)
        .map(|n| {
            let (m, t) = clipped(candidate, reference, n);
            let m = if m == 0 { EPS } else { m as f64 };
            let t = if t == 0 { 1.0 } else { t as f64 };
            (m / t).ln()
        })
        .sum::<f64>()
        / max_n as f64;
    100.0 * brevity_penalty(candidate.len(), reference.len()) * log_p.exp()
}

/// Mean per-pair ROUGE-n F1 on a 0-100 scale.
pub fn rouge_n<T: Eq + Hash>(candidates: &[Vec<T>], references: &[Vec<T>], n: usize) -> Result<f64> {
    check_aligned(candidates.len(), references.len())?;
    check_order(n)?;
    if candidates.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = candidates
        .iter()
        .zip(references)
        .map(|(c, r)| {
            let (overlap, c_total) = clipped(c, r, n);
            let r_total = r.len().saturating_sub(n - 1);
            if overlap == 0 || c_total == 0 || r_total == 0 {
                return 0.0;
            }
            let p = overlap as f64 / c_total as f64;
            let rc = overlap as f64 / r_total as f64;
            2.0 * p * rc / (p + rc)
        })
        .sum();
    Ok(100.0 * total / candidates.len() as f64)
}

/// `alpha * BLEU(cand, ref) - (1 - alpha) * BLEU(cand, src)` with BLEU-4.
pub fn ibleu<T: Eq + Hash>(
    candidates: &[Vec<T>],
    references: &[Vec<T>],
    sources: &[Vec<T>],
    alpha: f64,
) -> Result<f64> {
    check_aligned(candidates.len(), sources.len())?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, 1]")));
    }
    let with_ref = bleu(candidates, references, 4)?;
    if alpha == 1.0 {
        return Ok(with_ref);
    }
    Ok(alpha * with_ref - (1.0 - alpha) * bleu(candidates, sources, 4)?)
}
