//! NDCG@K and Recall@K of BM25, the pretrained selector and the label
//! oracle over the top-50 neighbours of each test source.
//!
//! cargo run --release --example ranking_study

use paraselect::corpus::synth_corpus;
use paraselect::eval::{ranking_study, Bm25Ranker, OracleRanker, SelectorRanker, STUDY_KS};
use paraselect::meta::{prepare, pretrain_policy, PipelineConfig};

fn main() -> paraselect::Result<()> {
    let bundle = synth_corpus(300, 5, 1500, 2);
    let cfg = PipelineConfig::desk(0);
    let prepared = prepare(&bundle, &cfg)?;
    let policy = pretrain_policy(&cfg, &prepared.items)?;
    let sources: Vec<_> = bundle.test.iter().map(|p| p.src.clone()).collect();
    let selector = SelectorRanker(&policy);
    let study = ranking_study(
        &prepared.index,
        &bundle.corpus,
        &sources,
        &[&Bm25Ranker, &selector, &OracleRanker],
        &STUDY_KS,
    )?;
    println!("{} sources ({} without a relevant candidate)", study.n_sources, study.n_without_relevant);
    print!("{:>9}", "");
    for k in STUDY_KS {
        print!("  NDCG@{k:<2} Rec@{k:<2}");
    }
    println!();
    for (name, c) in &study.rankers {
        print!("{name:>9}");
        for k in STUDY_KS {
            print!("  {:7.3} {:6.3}", c.ndcg[&k], c.recall[&k]);
        }
        println!();
    }
    Ok(())
}
