//! Pairwise-ranking warm start of the select logit from BM25 order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::selector::features::{PairEncoding, F};
use crate::selector::policy::{PolicyParams, StateBuilder, N_PARAMS, STATE_DIM};

/// Candidates of one source, each with its 1-based BM25 rank.
pub type RankGroup = Vec<(PairEncoding, usize)>;

/// Select logit of the empty-history state `[z ⊕ 0]`.
pub fn select_logit(policy: &PolicyParams, z: &PairEncoding) -> f64 {
    policy.logits(&StateBuilder::new().state(z))[1]
}

/// Hinge loss of one group summed over ordered in-group pairs, and its
/// gradient added into `grad` (flat policy layout).
pub fn group_loss(policy: &PolicyParams, group: &[(PairEncoding, usize)], margin: f64, grad: &mut [f64]) -> (f64, usize) {
    let logits: Vec<f64> = group.iter().map(|(z, _)| select_logit(policy, z)).collect();
    let mut loss = 0.0;
    let mut n = 0;
    for i in 0..group.len() {
        for j in 0..group.len() {
            if group[i].1 >= group[j].1 {
                continue;
            }
            n += 1;
            let gap = margin - (logits[i] - logits[j]);
            if gap <= 0.0 {
                continue;
            }
            loss += gap;
            let row = &mut grad[STATE_DIM..STATE_DIM + F];
            for (k, g) in row.iter_mut().enumerate() {
                *g -= (group[i].0.z[k] - group[j].0.z[k]) / policy.scale[k];
            }
        }
    }
    (loss, n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankingConfig {
    pub margin: f64,
    pub epochs: usize,
    pub lr: f64,
    /// Groups per optimizer step.
    pub groups_per_step: usize,
    pub seed: u64,
}

impl Default for RankingConfig {
    fn default() -> Self {
        Self {
            margin: 0.5,
            epochs: 5,
            lr: 0.01,
            groups_per_step: 64,
            seed: 0,
        }
    }
}

/// Minimizes the pairwise hinge with the policy's own optimizer; groups of
/// fewer than two candidates are skipped. Returns the mean per-pair loss
/// of each epoch.
pub fn pretrain_ranking(policy: &mut PolicyParams, groups: &[RankGroup], cfg: &RankingConfig) -> Result<Vec<f64>> {
    let usable: Vec<&RankGroup> = groups.iter().filter(|g| g.len() >= 2).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..usable.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut total, mut pairs) = (0.0, 0usize);
        for chunk in order.chunks(cfg.groups_per_step.max(1)) {
            let mut grad = vec![0.0; N_PARAMS];
            let mut n = 0;
            for &g in chunk {
                let (l, k) = group_loss(policy, usable[g], cfg.margin, &mut grad);
                total += l;
                n += k;
            }
            pairs += n;
            if n > 0 {
                grad.iter_mut().for_each(|g| *g = -*g / n as f64);
                policy.ascend(&grad, cfg.lr)?;
            }
        }
        history.push(if pairs == 0 { 0.0 } else { total / pairs as f64 });
    }
    Ok(history)
}

/// Shifts `b_s[1]` so the mean select-vs-skip log-odds over `encodings`
/// (empty history) is zero, then clears the optimizer moments.
pub fn recentre(policy: &mut PolicyParams, encodings: &[PairEncoding]) {
    if encodings.is_empty() {
        return;
    }
    let builder = StateBuilder::new();
    let mean = encodings
        .iter()
        .map(|z| {
            let l = policy.logits(&builder.state(z));
            l[1] - l[0]
        })
        .sum::<f64>()
        / encodings.len() as f64;
    policy.b[1] -= mean;
    policy.adam = crate::optim::Adam::new(N_PARAMS);
}

/// Kendall τ-a between two score lists.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n < 2 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += ((a[i] - a[j]) * (b[i] - b[j])).signum();
        }
    }
    s / (n * (n - 1) / 2) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selector::features::feat;

    fn enc(v: f64) -> PairEncoding {
        let mut z = [0.0; F];
        z[feat::BM25] = v;
        z[feat::BIAS] = 1.0;
        PairEncoding { z }
    }

    #[test]
    fn zero_margin_respected_order_has_zero_loss() {
        let mut p = PolicyParams::new();
        p.w[STATE_DIM + feat::BM25] = 1.0;
        let group = vec![(enc(0.9), 1), (enc(0.5), 2), (enc(0.1), 3)];
        let mut g = vec![0.0; N_PARAMS];
        assert_eq!(group_loss(&p, &group, 0.0, &mut g), (0.0, 3));
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hinge_boundary_has_no_gradient() {
        let mut p = PolicyParams::new();
        p.w[STATE_DIM + feat::BM25] = 1.0;
        let group = vec![(enc(1.0), 1), (enc(0.5), 2)];
        let mut g = vec![0.0; N_PARAMS];
        assert_eq!(group_loss(&p, &group, 0.5, &mut g).0, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn learns_bm25_order_and_recentres() {
        let groups: Vec<RankGroup> = (0..50)
            .map(|s| (1..=5).map(|r| (enc(1.0 / (r as f64 + s as f64 * 0.01)), r)).collect())
            .collect();
        let mut p = PolicyParams::new();
        let hist = pretrain_ranking(&mut p, &groups, &RankingConfig { epochs: 20, ..Default::default() }).unwrap();
        assert!(hist.last().unwrap() < &hist[0]);
        let g = &groups[7];
        let logits: Vec<f64> = g.iter().map(|(z, _)| select_logit(&p, z)).collect();
        let neg_rank: Vec<f64> = g.iter().map(|&(_, r)| -(r as f64)).collect();
        assert!(kendall_tau(&logits, &neg_rank) > 0.99);

        let all: Vec<PairEncoding> = groups.iter().flatten().map(|(z, _)| *z).collect();
        recentre(&mut p, &all);
        let builder = StateBuilder::new();
        let mean: f64 = all
            .iter()
            .map(|z| {
                let l = p.logits(&builder.state(z));
                l[1] - l[0]
            })
            .sum::<f64>()
            / all.len() as f64;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn tau_extremes() {
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]), 1.0);
        assert_eq!(kendall_tau(&[1.0, 2.0, 3.0], &[6.0, 5.0, 4.0]), -1.0);
    }
}
