//! Warm-starts the selection policy with the pairwise ranking loss and
//! compares its candidate ordering with raw BM25.
//!
//! cargo run --release --example pretrain_selector

use paraselect::corpus::synth_corpus;
use paraselect::eval::standard_study;
use paraselect::meta::{prepare, pretrain_policy, PipelineConfig};
use paraselect::selector::{kendall_tau, select_logit};

fn main() -> paraselect::Result<()> {
    let bundle = synth_corpus(200, 5, 1000, 0);
    let cfg = PipelineConfig::desk(0);
    let prepared = prepare(&bundle, &cfg)?;
    let policy = pretrain_policy(&cfg, &prepared.items)?;

    let logits: Vec<f64> = prepared.items.iter().map(|it| select_logit(&policy, &it.z)).collect();
    let bm25: Vec<f64> = prepared.items.iter().map(|it| it.weak.bm25_score).collect();
    println!("Kendall tau between selector logits and BM25 scores: {:.3}", kendall_tau(&logits, &bm25));

    let mean_p = logits.iter().map(|&l| sigmoid(l)).sum::<f64>() / logits.len() as f64;
    println!("mean keep probability after recentring: {mean_p:.3}");

    let sources: Vec<_> = bundle.test.iter().map(|p| p.src.clone()).collect();
    let study = standard_study(&prepared.index, &bundle.corpus, &policy, &sources)?;
    for (name, c) in &study.rankers {
        println!("{name:>9}: NDCG@5 {:.3}  Recall@5 {:.3}", c.ndcg[&5], c.recall[&5]);
    }
    Ok(())
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
