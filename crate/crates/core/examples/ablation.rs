//! Test metrics of the four training modes under one seed and one
//! generator step budget.
//!
//! cargo run --release --example ablation -- [seed]

use paraselect::corpus::synth_corpus;
use paraselect::meta::{ablation, Mode, PipelineConfig};

fn main() -> paraselect::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let bundle = synth_corpus(300, 5, 1500, seed);
    let mut cfg = PipelineConfig::desk(seed);
    cfg.trainer.epochs = 400;
    cfg.trainer.period = 100;

    println!("{:<22} {:>7} {:>7} {:>7} {:>7}", "mode", "BLEU-2", "BLEU-4", "ROUGE-2", "iBLEU");
    for mode in Mode::ALL {
        let m = ablation(mode, &cfg, &bundle)?;
        println!(
            "{:<22} {:7.2} {:7.2} {:7.2} {:7.2}",
            mode.to_string(),
            m.bleu2,
            m.bleu4,
            m.rouge2,
            m.ibleu
        );
    }
    Ok(())
}
