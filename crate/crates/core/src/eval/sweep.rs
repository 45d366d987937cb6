use serde::{Deserialize, Serialize};

use crate::corpus::SplitBundle;
use crate::error::{Error, Result};
use crate::meta::{build_index, prepare, run_local, Mode, PipelineConfig, UpdateBudget};
use crate::retrieval::expand;
use crate::metrics::MetricReport;

pub const DEFAULT_SWEEP_KS: [usize; 5] = [1, 3, 5, 10, 20];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: usize,
    pub metrics: MetricReport,
    pub dev_ppl: f64,
    pub n_weak: usize,
}

/// Independent full runs per expansion width with identical seeds.
///
/// A `Pool` update budget is pinned to the pool size at the configured K,
/// so every width gets the same number of generator steps.
pub fn k_sweep(cfg: &PipelineConfig, bundle: &SplitBundle, ks: &[usize]) -> Result<Vec<SweepPoint>> {
    if ks.contains(&0) || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("sweep widths must be positive and strictly ascending".into()));
    }
    let budget = sweep_budget(cfg, bundle)?;
    ks.iter()
        .map(|&k| {
            let mut cfg = cfg.clone();
            cfg.trainer.k = k;
            cfg.trainer.update_budget = budget;
            let prepared = prepare(bundle, &cfg)?;
            let run = run_local(bundle, &prepared, &cfg, Mode::Full)?;
            log::info!("K={k}: bleu2 {:.4}, dev ppl {:.4}", run.metrics.bleu2, run.dev_ppl);
            Ok(SweepPoint {
                k,
                metrics: run.metrics,
                dev_ppl: run.dev_ppl,
                n_weak: prepared.weak.len(),
            })
        })
        .collect()
}

/// The update budget every sweep point runs under.
pub fn sweep_budget(cfg: &PipelineConfig, bundle: &SplitBundle) -> Result<UpdateBudget> {
    Ok(match cfg.trainer.update_budget {
        UpdateBudget::Pool => {
            let index = build_index(bundle, cfg)?;
            UpdateBudget::Pairs(expand(&index, &bundle.train_sources, cfg.trainer.k).len())
        }
        other => other,
    })
}
