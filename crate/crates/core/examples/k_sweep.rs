//! Expansion width sweep: one independent run per K, each given the same
//! number of generator steps.
//!
//! cargo run --release --example k_sweep -- [k ...]

use paraselect::corpus::synth_corpus;
use paraselect::eval::{k_sweep, DEFAULT_SWEEP_KS};
use paraselect::meta::PipelineConfig;

fn main() -> paraselect::Result<()> {
    let mut ks: Vec<usize> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    if ks.is_empty() {
        ks = DEFAULT_SWEEP_KS.to_vec();
    }
    let bundle = synth_corpus(300, 5, 1500, 0);
    let mut cfg = PipelineConfig::desk(0);
    cfg.trainer.epochs = 400;
    cfg.trainer.period = 100;

    println!("{:>3} {:>7} {:>7} {:>7} {:>8}", "K", "weak", "BLEU-2", "iBLEU", "dev PPL");
    for p in k_sweep(&cfg, &bundle, &ks)? {
        println!("{:>3} {:>7} {:7.2} {:7.2} {:8.3}", p.k, p.n_weak, p.metrics.bleu2, p.metrics.ibleu, p.dev_ppl);
    }
    Ok(())
}
