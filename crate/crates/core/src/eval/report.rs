//! JSON and plain-text run reports, rounded to four decimals.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::ranking_study::{Curves, RankingStudy};
use crate::eval::sweep::SweepPoint;
use crate::metrics::{round4, MetricReport};

pub type MetricMap = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "K")]
    pub k: usize,
    pub metrics: MetricMap,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub metrics: MetricMap,
    pub ranking: BTreeMap<String, Curves>,
    pub sweep: Vec<SweepRow>,
    pub config_hash: String,
}

pub fn metric_map(m: &MetricReport, dev_ppl: Option<f64>) -> MetricMap {
    let mut out = MetricMap::new();
    for (name, v) in [
        ("bleu", m.bleu),
        ("bleu2", m.bleu2),
        ("bleu4", m.bleu4),
        ("rouge1", m.rouge1),
        ("rouge2", m.rouge2),
        ("ibleu", m.ibleu),
        ("n_pairs", m.n_pairs as f64),
    ] {
        out.insert(name.to_string(), v);
    }
    if let Some(p) = dev_ppl {
        out.insert("dev_ppl".to_string(), p);
    }
    out
}

fn round_map(m: &MetricMap) -> MetricMap {
    m.iter().map(|(k, &v)| (k.clone(), round4(v))).collect()
}

fn round_curve(c: &BTreeMap<usize, f64>) -> BTreeMap<usize, f64> {
    c.iter().map(|(&k, &v)| (k, round4(v))).collect()
}

impl Report {
    pub fn with_ranking(mut self, study: &RankingStudy) -> Self {
        self.ranking = study.rankers.clone();
        self
    }

    pub fn with_sweep(mut self, points: &[SweepPoint]) -> Self {
        self.sweep = points
            .iter()
            .map(|p| SweepRow {
                k: p.k,
                metrics: metric_map(&p.metrics, Some(p.dev_ppl)),
            })
            .collect();
        self
    }

    pub fn rounded(&self) -> Self {
        Self {
            metrics: round_map(&self.metrics),
            ranking: self
                .ranking
                .iter()
                .map(|(name, c)| {
                    (
                        name.clone(),
                        Curves {
                            ndcg: round_curve(&c.ndcg),
                            recall: round_curve(&c.recall),
                        },
                    )
                })
                .collect(),
            sweep: self
                .sweep
                .iter()
                .map(|r| SweepRow {
                    k: r.k,
                    metrics: round_map(&r.metrics),
                })
                .collect(),
            config_hash: self.config_hash.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.rounded())? + "\n")
    }

    pub fn to_text(&self) -> String {
        let r = self.rounded();
        let mut out = String::new();
        let _ = writeln!(out, "config_hash {}", r.config_hash);
        if !r.metrics.is_empty() {
            let _ = writeln!(out, "\nmetrics");
            for (k, v) in &r.metrics {
                let _ = writeln!(out, "  {k:<10} {v:>10.4}");
            }
        }
        for (name, c) in &r.ranking {
            let _ = writeln!(out, "\nranking {name}");
            let _ = writeln!(out, "  {:>4} {:>8} {:>8}", "K", "ndcg", "recall");
            for (k, n) in &c.ndcg {
                let rec = c.recall.get(k).copied().unwrap_or(f64::NAN);
                let _ = writeln!(out, "  {k:>4} {n:>8.4} {rec:>8.4}");
            }
        }
        if !r.sweep.is_empty() {
            let names: Vec<&String> = r.sweep[0].metrics.keys().collect();
            let _ = write!(out, "\nsweep\n  {:>4}", "K");
            for n in &names {
                let _ = write!(out, " {n:>9}");
            }
            out.push('\n');
            for row in &r.sweep {
                let _ = write!(out, "  {:>4}", row.k);
                for n in &names {
                    let _ = write!(out, " {:>9.4}", row.metrics.get(*n).copied().unwrap_or(f64::NAN));
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Writes `report` as JSON to `json_path` and as a text table next to it
/// (same stem, `.txt`).
pub fn emit_report(report: &Report, json_path: impl AsRef<Path>) -> Result<()> {
    let json_path = json_path.as_ref();
    fs::write(json_path, report.to_json()?).map_err(|e| Error::io(json_path, e))?;
    let txt = json_path.with_extension("txt");
    fs::write(&txt, report.to_text()).map_err(|e| Error::io(&txt, e))
}
