//! Builds a BM25 index over a synthetic corpus and expands every training
//! source into its top-K neighbours.
//!
//! cargo run --release --example expand_pairs -- [k]

use paraselect::corpus::synth_corpus;
use paraselect::retrieval::{expand, InvertedIndex};

fn main() -> paraselect::Result<()> {
    let k: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let bundle = synth_corpus(200, 5, 1000, 0);
    let index = InvertedIndex::build(&bundle.corpus)?;
    println!(
        "{} documents, {} terms, mean length {:.2}",
        index.n_docs,
        index.postings.len(),
        index.avg_doc_len
    );

    let weak = expand(&index, &bundle.train_sources, k);
    let gold = weak.iter().filter(|w| w.is_true_paraphrase == Some(true)).count();
    println!(
        "{} sources -> {} weak pairs, {:.1}% planted paraphrases",
        bundle.train_sources.len(),
        weak.len(),
        100.0 * gold as f64 / weak.len() as f64
    );

    let pool = bundle.pool_by_id();
    let src = &bundle.train_sources[0];
    println!("\nneighbours of \"{}\":", src.text());
    for w in weak.iter().filter(|w| w.src_id == src.id) {
        let mark = if w.is_true_paraphrase == Some(true) { "+" } else { " " };
        println!("  {mark} #{} {:6.3}  {}", w.rank, w.bm25_score, pool[&w.cand_id].text());
    }
    Ok(())
}
