//! Fits the attention seq2seq generator on the correct pseudo pairs of a
//! synthetic corpus and decodes a few test sources.
//!
//! cargo run --release --example train_generator

use paraselect::corpus::synth_corpus;
use paraselect::eval::evaluate_generation;
use paraselect::generator::{GeneratorConfig, GeneratorHandle, IdPair, Seq2Seq};
use paraselect::meta::{prepare, PipelineConfig};

fn main() -> paraselect::Result<()> {
    let bundle = synth_corpus(100, 5, 0, 1);
    let prepared = prepare(&bundle, &PipelineConfig::default())?;
    let vocab = &prepared.vocab;
    let train: Vec<IdPair> = prepared
        .items
        .iter()
        .filter(|it| it.weak.is_true_paraphrase == Some(true))
        .map(|it| it.ids.clone())
        .collect();
    let cfg = GeneratorConfig { embed: 24, hidden: 48, ..Default::default() };
    let mut gen = Seq2Seq::new(vocab.len(), cfg, 0);
    println!("{} parameters, {} training pairs", gen.params().data.len(), train.len());

    for round in 0..=4 {
        if round > 0 {
            gen.fine_tune(&train, 150, 5e-3)?;
        }
        println!(
            "after {:4} steps: train PPL {:8.3}  dev PPL {:8.3}",
            round * 150,
            gen.perplexity(&train)?,
            gen.perplexity(&prepared.dev)?
        );
    }

    let m = evaluate_generation(&gen, vocab, &bundle.test, 0.9, 20)?;
    println!("test BLEU-2 {:.2}  iBLEU {:.2}", m.bleu2, m.ibleu);
    for p in bundle.test.iter().take(3) {
        let out = gen.generate(&vocab.encode(&p.src.tokens), 20)?;
        println!("  {}\n    -> {}", p.src.text(), vocab.decode(&out).join(" "));
    }
    Ok(())
}
