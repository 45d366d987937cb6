//! Corpus BLEU, ROUGE, iBLEU and the ranking metrics on hand-made inputs.
//!
//! cargo run --example metrics

use paraselect::metrics::{bleu, ibleu, ndcg_at_k, recall_at_k, rouge_n, MetricReport};

fn toks(lines: &[&str]) -> Vec<Vec<String>> {
    lines.iter().map(|l| l.split_whitespace().map(String::from).collect()).collect()
}

fn main() -> paraselect::Result<()> {
    let sources = toks(&["how do i learn to cook rice", "what is the best way to save money"]);
    let references = toks(&["how can i cook rice properly", "how should i save money"]);
    let candidates = toks(&["how can i cook rice well", "what is a good way to save money"]);

    println!("BLEU-2   {:8.4}", bleu(&candidates, &references, 2)?);
    println!("BLEU-4   {:8.4}", bleu(&candidates, &references, 4)?);
    println!("ROUGE-1  {:8.4}", rouge_n(&candidates, &references, 1)?);
    println!("ROUGE-2  {:8.4}", rouge_n(&candidates, &references, 2)?);
    println!("iBLEU    {:8.4}", ibleu(&candidates, &references, &sources, 0.9)?);
    // Copying the input is penalised by the full source overlap.
    println!("copy iBLEU {:6.4}", ibleu(&sources, &references, &sources, 0.9)?);

    let all = MetricReport::compute(&candidates, &references, &sources, 0.9)?;
    println!("\n{}", serde_json::to_string_pretty(&all.rounded())?);

    let ranking = [true, false, true, false, false, true];
    for k in [1, 3, 5] {
        println!(
            "NDCG@{k} {:.4}  Recall@{k} {:.4}",
            ndcg_at_k(&ranking, k),
            recall_at_k(&ranking, k, 3)?
        );
    }
    Ok(())
}
