use crate::corpus::{ParallelPair, Vocabulary};
use crate::error::Result;
use crate::generator::GeneratorHandle;
use crate::metrics::MetricReport;

/// Greedy outputs for `sources`, decoded to tokens.
pub fn generate_all<G: GeneratorHandle + ?Sized>(
    gen: &G,
    vocab: &Vocabulary,
    sources: &[&[String]],
    max_len: usize,
) -> Result<Vec<Vec<String>>> {
    sources
        .iter()
        .map(|src| Ok(vocab.decode(&gen.generate(&vocab.encode(src), max_len)?)))
        .collect()
}

/// Generates from the test sources alone, then scores against references.
pub fn evaluate_generation<G: GeneratorHandle + ?Sized>(
    gen: &G,
    vocab: &Vocabulary,
    test: &[ParallelPair],
    alpha: f64,
    max_len: usize,
) -> Result<MetricReport> {
    let sources: Vec<&[String]> = test.iter().map(|p| p.src.tokens.as_slice()).collect();
    let outputs = generate_all(gen, vocab, &sources, max_len)?;
    let refs: Vec<Vec<String>> = test.iter().map(|p| p.reference.tokens.clone()).collect();
    let srcs: Vec<Vec<String>> = sources.iter().map(|s| s.to_vec()).collect();
    MetricReport::compute(&outputs, &refs, &srcs, alpha)
}
