use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::SynthSpec;
use crate::error::{Error, Result};
use crate::eval::DEFAULT_SWEEP_KS;
use crate::meta::{Mode, PipelineConfig};

/// Everything a command needs to know about a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// JSONL dataset. When absent the run works on the synthetic corpus
    /// described by `synth`.
    pub data: Option<PathBuf>,
    pub synth: SynthSpec,
    pub pipeline: PipelineConfig,
    pub mode: Mode,
    /// Expansion widths visited by `sweep`.
    pub sweep_ks: Vec<usize>,
    /// Generator learning rates tried by `sweep`; empty skips the grid.
    pub lr_grid: Vec<f64>,
    pub out: PathBuf,
    /// Base URL of an external generator service.
    pub adapter_url: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            synth: SynthSpec::default(),
            pipeline: PipelineConfig::default(),
            mode: Mode::Full,
            sweep_ks: DEFAULT_SWEEP_KS.to_vec(),
            lr_grid: Vec::new(),
            out: PathBuf::from("run"),
            adapter_url: None,
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub k: Option<usize>,
    pub epochs: Option<usize>,
    pub mode: Option<Mode>,
    pub adapter_url: Option<String>,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// `--seed` drives both the synthetic corpus and training.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.synth.seed = seed;
            self.pipeline.trainer.seed = seed;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(k) = o.k {
            self.pipeline.trainer.k = k;
        }
        if let Some(epochs) = o.epochs {
            self.pipeline.trainer.epochs = epochs;
            self.pipeline.trainer.period = self.pipeline.trainer.period.min(epochs.max(1));
        }
        if let Some(mode) = o.mode {
            self.mode = mode;
        }
        if let Some(url) = &o.adapter_url {
            self.adapter_url = Some(url.clone());
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline.trainer.validate()?;
        let p = &self.pipeline;
        if !(0.0..=1.0).contains(&p.alpha) {
            return Err(Error::InvalidArgument(format!("alpha {} outside [0, 1]", p.alpha)));
        }
        if p.max_len == 0 || p.decode_max_len == 0 {
            return Err(Error::InvalidArgument("length limits must be positive".into()));
        }
        if self.data.is_none() && (self.synth.n_clusters == 0 || self.synth.cluster_size < 2) {
            return Err(Error::InvalidArgument(
                "synthetic corpus needs clusters of at least two sentences".into(),
            ));
        }
        if self.lr_grid.iter().any(|&lr| !(lr > 0.0 && lr.is_finite())) {
            return Err(Error::InvalidArgument("lr_grid entries must be positive".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form, leaving out where artifacts
    /// go and which generator backend serves the run.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        let obj = value.as_object_mut().expect("config is an object");
        obj.remove("out");
        obj.remove("adapter_url");
        let canonical = serde_json::to_vec(&value).expect("value serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.out = PathBuf::from("elsewhere");
        b.adapter_url = Some("http://127.0.0.1:1".into());
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.pipeline.trainer.lr_policy *= 2.0;
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"pipeline": {"trainer": {"epochs": 3, "period": 1}}, "mode": "no_selection"}"#).unwrap();
        let cfg = RunConfig::load(&p).unwrap();
        assert_eq!(cfg.pipeline.trainer.epochs, 3);
        assert_eq!(cfg.pipeline.trainer.k, 5);
        assert_eq!(cfg.mode, Mode::NoSelection);
        fs::write(&p, r#"{"pipline": {}}"#).unwrap();
        assert!(matches!(RunConfig::load(&p), Err(Error::Parse { .. })));
    }

    #[test]
    fn flags_win() {
        let mut cfg = RunConfig::default();
        cfg.apply(&Overrides {
            seed: Some(9),
            k: Some(3),
            epochs: Some(4),
            ..Default::default()
        });
        assert_eq!((cfg.synth.seed, cfg.pipeline.trainer.seed), (9, 9));
        assert_eq!(cfg.pipeline.trainer.k, 3);
        assert_eq!(cfg.pipeline.trainer.period, 4);
        cfg.validate().unwrap();
    }
}
