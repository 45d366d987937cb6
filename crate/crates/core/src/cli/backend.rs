use std::fs;
use std::path::Path;

use serde_json::json;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::generator::{Dims, GeneratorConfig, GeneratorHandle, IdPair, RemoteGenerator, Seq2Seq, Seq2SeqState};

const REMOTE_STATE: &str = "paraselect-remote-state";

/// The generator a command drives: in-process or behind `--adapter-url`.
pub enum Backend {
    Local(Seq2Seq),
    Remote(RemoteGenerator),
}

#[derive(Clone)]
pub enum BackendSnapshot {
    Local(Box<Seq2SeqState>),
    Remote(String),
}

impl Backend {
    /// Checkpoints hold weights for a local generator and a server-side
    /// state id for a remote one.
    pub fn save(&self, path: &Path) -> Result<()> {
        match self {
            Backend::Local(g) => g.save(path),
            Backend::Remote(g) => {
                let doc = json!({ "format": REMOTE_STATE, "state_id": g.snapshot()? });
                fs::write(path, serde_json::to_string(&doc)? + "\n").map_err(|e| Error::io(path, e))
            }
        }
    }

    pub fn load(path: &Path, vocab: &Vocabulary, cfg: GeneratorConfig, adapter_url: Option<&str>) -> Result<Self> {
        match adapter_url {
            None => {
                let dims = Dims::new(vocab.len(), cfg.embed, cfg.hidden);
                Ok(Backend::Local(Seq2Seq::load(path, dims)?))
            }
            Some(url) => {
                let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
                let doc: serde_json::Value = serde_json::from_slice(&bytes).map_err(|_| {
                    Error::Checkpoint(format!("{}: not a remote generator state", path.display()))
                })?;
                let state_id = match (doc["format"].as_str(), doc["state_id"].as_str()) {
                    (Some(REMOTE_STATE), Some(id)) => id.to_string(),
                    _ => {
                        return Err(Error::Checkpoint(format!(
                            "{}: not a remote generator state",
                            path.display()
                        )))
                    }
                };
                let mut g = RemoteGenerator::new(url, vocab.clone(), cfg.batch_size);
                g.restore(&state_id)?;
                Ok(Backend::Remote(g))
            }
        }
    }
}

impl GeneratorHandle for Backend {
    type Snapshot = BackendSnapshot;

    fn fine_tune(&mut self, pairs: &[IdPair], steps: usize, lr: f64) -> Result<()> {
        match self {
            Backend::Local(g) => g.fine_tune(pairs, steps, lr),
            Backend::Remote(g) => g.fine_tune(pairs, steps, lr),
        }
    }

    fn perplexity(&self, pairs: &[IdPair]) -> Result<f64> {
        match self {
            Backend::Local(g) => g.perplexity(pairs),
            Backend::Remote(g) => g.perplexity(pairs),
        }
    }

    fn generate(&self, src: &[u32], max_len: usize) -> Result<Vec<u32>> {
        match self {
            Backend::Local(g) => g.generate(src, max_len),
            Backend::Remote(g) => g.generate(src, max_len),
        }
    }

    fn snapshot(&self) -> Result<BackendSnapshot> {
        Ok(match self {
            Backend::Local(g) => BackendSnapshot::Local(Box::new(g.snapshot()?)),
            Backend::Remote(g) => BackendSnapshot::Remote(g.snapshot()?),
        })
    }

    fn restore(&mut self, snapshot: &BackendSnapshot) -> Result<()> {
        match (self, snapshot) {
            (Backend::Local(g), BackendSnapshot::Local(s)) => g.restore(s),
            (Backend::Remote(g), BackendSnapshot::Remote(s)) => g.restore(s),
            _ => Err(Error::InvalidArgument("snapshot belongs to another backend".into())),
        }
    }

    fn batch_size(&self) -> usize {
        match self {
            Backend::Local(g) => g.batch_size(),
            Backend::Remote(g) => g.batch_size(),
        }
    }
}
