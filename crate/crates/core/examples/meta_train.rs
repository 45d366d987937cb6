//! The full loop: policy warm start, generator warm-up, then REINFORCE
//! episodes with periodic generator updates on the selected pairs.
//!
//! cargo run --release --example meta_train -- [seed]

use paraselect::corpus::synth_corpus;
use paraselect::eval::evaluate_generation;
use paraselect::generator::GeneratorHandle;
use paraselect::meta::{initial_generator, prepare, pretrain_policy, run_with, Mode, PipelineConfig};

fn main() -> paraselect::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let bundle = synth_corpus(300, 5, 1500, seed);
    let mut cfg = PipelineConfig::desk(seed);
    cfg.trainer.epochs = 400;
    cfg.trainer.period = 100;
    let prepared = prepare(&bundle, &cfg)?;
    let mut policy = pretrain_policy(&cfg, &prepared.items)?;
    let mut gen = initial_generator(&cfg, prepared.vocab.len(), &prepared.items, Mode::Full)?;
    println!("{} weak pairs, dev PPL after warm-up {:.3}", prepared.items.len(), gen.perplexity(&prepared.dev)?);

    let outcome = run_with(&cfg, Mode::Full, &prepared, &mut policy, &mut gen, &mut |b| {
        let last = b.history.last().expect("history holds the boundary epoch");
        println!(
            "epoch {:4}: generator trained on {:5} pairs, dev PPL {:.3}",
            b.epoch,
            last.n_train.unwrap_or(0),
            last.dev_ppl
        );
        Ok(())
    })?;
    println!("\nepoch  reward    baseline  selected  precision");
    for r in outcome.history.iter().filter(|r| r.epoch % 40 == 0 && r.epoch > 0) {
        println!(
            "{:5}  {:8.4}  {:8.4}  {:8}  {}",
            r.epoch,
            r.reward.unwrap_or(0.0),
            r.baseline,
            r.n_selected,
            r.precision.map_or("-".into(), |p| format!("{p:.3}"))
        );
    }
    let m = evaluate_generation(&gen, &prepared.vocab, &bundle.test, cfg.alpha, cfg.decode_max_len)?;
    println!("\nbest epoch {}, test BLEU-2 {:.2}, iBLEU {:.2}", outcome.best_epoch, m.bleu2, m.ibleu);
    Ok(())
}
