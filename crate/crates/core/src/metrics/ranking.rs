use crate::error::{Error, Result};

fn dcg(relevance: impl Iterator<Item = bool>) -> f64 {
    relevance
        .enumerate()
        .filter(|(_, r)| *r)
        .map(|(i, _)| 1.0 / ((i + 2) as f64).log2())
        .sum()
}

/// Binary-gain NDCG over the first `k` entries; 0 when nothing is relevant.
pub fn ndcg_at_k(ranking: &[bool], k: usize) -> f64 {
    let n_rel = ranking.iter().filter(|&&r| r).count();
    if n_rel == 0 || k == 0 {
        return 0.0;
    }
    let actual = dcg(ranking.iter().copied().take(k));
    let ideal = dcg((0..k.min(ranking.len())).map(|i| i < n_rel));
    actual / ideal
}

/// Fraction of `total_relevant` found in the first `k` entries. With nothing
/// to find the value is 1.0.
pub fn recall_at_k(ranking: &[bool], k: usize, total_relevant: usize) -> Result<f64> {
    let listed = ranking.iter().filter(|&&r| r).count();
    if total_relevant < listed {
        return Err(Error::InvalidArgument(format!(
            "total_relevant {total_relevant} below the {listed} relevant items listed"
        )));
    }
    if total_relevant == 0 {
        return Ok(1.0);
    }
    let found = ranking.iter().take(k).filter(|&&r| r).count();
    Ok(found as f64 / total_relevant as f64)
}
