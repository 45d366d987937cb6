//! Drives training through the HTTP adapter protocol. A loopback server
//! wraps the built-in generator here; point `--adapter-url` at any service
//! speaking the same protocol to swap in another model.
//!
//! cargo run --release --example remote_adapter

use paraselect::corpus::synth_corpus;
use paraselect::eval::evaluate_generation;
use paraselect::generator::{GeneratorHandle, LoopbackServer, RemoteGenerator, Seq2Seq};
use paraselect::meta::{prepare, pretrain_policy, run_with, warm_up, Mode, PipelineConfig};

fn main() -> paraselect::Result<()> {
    let bundle = synth_corpus(100, 4, 300, 0);
    let mut cfg = PipelineConfig::default();
    cfg.trainer.epochs = 40;
    cfg.trainer.period = 10;
    cfg.trainer.batch_size = 32;
    cfg.trainer.fixed_episode_steps = true;
    cfg.trainer.episode_steps = 2;
    cfg.generator.embed = 16;
    cfg.generator.hidden = 32;
    cfg.pretrain_epochs = 4;
    cfg.standardize_policy_input = true;
    let prepared = prepare(&bundle, &cfg)?;

    let model = Seq2Seq::new(prepared.vocab.len(), cfg.generator, cfg.seed());
    let server = LoopbackServer::spawn(model, prepared.vocab.clone())?;
    let mut gen = RemoteGenerator::new(server.url(), prepared.vocab.clone(), cfg.generator.batch_size);
    println!("adapter at {}: {}", server.url(), gen.health()?);

    warm_up(&cfg, &mut gen, &prepared.items)?;
    let mut policy = pretrain_policy(&cfg, &prepared.items)?;
    let outcome = run_with(&cfg, Mode::Full, &prepared, &mut policy, &mut gen, &mut |_| Ok(()))?;
    let m = evaluate_generation(&gen, &prepared.vocab, &bundle.test, cfg.alpha, cfg.decode_max_len)?;
    println!(
        "{} epochs over the wire, best dev PPL {:.3}, test BLEU-2 {:.2}",
        outcome.history.len() - 1,
        gen.perplexity(&prepared.dev)?,
        m.bleu2
    );
    Ok(())
}
