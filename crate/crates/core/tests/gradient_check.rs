//! Analytic gradients of the generator loss and of the policy log-probability
//! against central finite differences.

use paraselect::generator::{backward, forward_nll, GeneratorConfig, GeneratorHandle, IdPair, Seq2Seq};

mod common;
use common::{gradient_instances, numeric_tensor_grad, policy_fd_worst, rel_err, tiny_params, FD_TOL};

#[test]
fn generator_backward_matches_finite_differences() {
    for (seed, src, tgt) in gradient_instances() {
        let p = tiny_params(seed);
        let (_, cache) = forward_nll(&p, &src, &tgt).unwrap();
        let grad = backward(&p, &cache).unwrap();
        for (name, _) in p.dims.tensors() {
            let numeric = numeric_tensor_grad(&p, name, &src, &tgt);
            let err = rel_err(grad.tensor(name), &numeric);
            assert!(err <= FD_TOL, "seed {seed} tensor {name}: relative error {err:e}");
        }
    }
}

#[test]
fn duplicated_pair_counts_twice() {
    let cfg = GeneratorConfig { embed: 3, hidden: 4, batch_size: 3, clip_norm: 5.0 };
    let mut g = Seq2Seq::new(9, cfg, 5);
    *g.params_mut() = tiny_params(5);
    let a = IdPair { src: vec![4, 5], tgt: vec![5, 6, 7] };
    let b = IdPair { src: vec![8], tgt: vec![4] };
    let (l_dup, g_dup) = g.batch_gradient(&[&a, &a, &b]).unwrap();
    let (la, ga) = g.batch_gradient(&[&a]).unwrap();
    let (lb, gb) = g.batch_gradient(&[&b]).unwrap();
    assert!((l_dup - (2.0 * la + lb) / 3.0).abs() < 1e-12);
    for i in 0..g_dup.len() {
        assert!((g_dup[i] - (2.0 * ga[i] + gb[i]) / 3.0).abs() < 1e-12);
    }
}

#[test]
fn perplexity_pools_tokens_across_pairs() {
    let cfg = GeneratorConfig { embed: 3, hidden: 4, batch_size: 2, clip_norm: 5.0 };
    let mut g = Seq2Seq::new(9, cfg, 6);
    *g.params_mut() = tiny_params(6);
    let pairs = [
        IdPair { src: vec![4, 5], tgt: vec![5] },
        IdPair { src: vec![8, 7, 6], tgt: vec![4, 6, 6, 8] },
    ];
    let mut nll = 0.0;
    let mut tokens = 0;
    for p in &pairs {
        nll += common::nll(g.params(), &p.src, &p.tgt);
        // Every target token plus the end marker is predicted.
        tokens += p.tgt.len() + 1;
    }
    let want = (nll / tokens as f64).exp();
    assert!((g.perplexity(&pairs).unwrap() - want).abs() < 1e-12);
}

#[test]
fn policy_grad_log_prob_matches_finite_differences() {
    let worst = policy_fd_worst();
    assert!(worst <= FD_TOL, "worst relative error {worst:e}");
}
