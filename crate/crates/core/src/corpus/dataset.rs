use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::tokenize::{tokenize, DEFAULT_MAX_LEN};
use crate::error::{Error, Result};

/// A normalized sentence with a stable id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: u64,
    pub raw: String,
    pub tokens: Vec<String>,
    pub cluster_id: Option<i64>,
}

impl SentenceRecord {
    pub fn new(id: u64, raw: impl Into<String>, max_len: usize, cluster_id: Option<i64>) -> Self {
        let raw = raw.into();
        let tokens = tokenize(&raw, max_len);
        Self {
            id,
            raw,
            tokens,
            cluster_id,
        }
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelPair {
    pub src: SentenceRecord,
    #[serde(rename = "ref")]
    pub reference: SentenceRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    #[default]
    Corpus,
    TrainSrc,
    Dev,
    Test,
}

/// One line of the JSONL dataset format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u64>,
    pub text: String,
    #[serde(default)]
    pub split: Split,
    #[serde(rename = "ref", default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<i64>,
}

/// Train sources, trusted dev/test pairs and the retrieval pool.
///
/// Train sources are also members of the pool and share their ids with
/// their pool copies.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitBundle {
    pub train_sources: Vec<SentenceRecord>,
    pub dev: Vec<ParallelPair>,
    pub test: Vec<ParallelPair>,
    pub corpus: Vec<SentenceRecord>,
}

impl SplitBundle {
    /// Builds a bundle from dataset lines, assigning ids in line order.
    pub fn from_lines(lines: &[DatasetLine], max_len: usize) -> Result<Self> {
        Self::from_lines_at(lines, max_len, Path::new("<memory>"))
    }

    fn from_lines_at(lines: &[DatasetLine], max_len: usize, path: &Path) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut ids = Vec::with_capacity(lines.len());
        for (i, line) in lines.iter().enumerate() {
            let id = line.id.unwrap_or(i as u64);
            if !seen.insert(id) {
                return Err(Error::DuplicateId { id, line: i + 1 });
            }
            ids.push(id);
        }
        let mut next_ref_id = ids.iter().max().map_or(0, |m| m + 1);

        let mut bundle = SplitBundle::default();
        for (i, (line, &id)) in lines.iter().zip(&ids).enumerate() {
            let rec = SentenceRecord::new(id, line.text.clone(), max_len, line.cluster);
            match line.split {
                Split::Corpus => bundle.corpus.push(rec),
                Split::TrainSrc => {
                    bundle.train_sources.push(rec.clone());
                    bundle.corpus.push(rec);
                }
                Split::Dev | Split::Test => {
                    let parse_err = |message: &str| Error::Parse {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: message.to_string(),
                    };
                    let reference = line
                        .reference
                        .as_ref()
                        .ok_or_else(|| parse_err("dev/test line requires a `ref` field"))?;
                    let reference =
                        SentenceRecord::new(next_ref_id, reference.clone(), max_len, line.cluster);
                    next_ref_id += 1;
                    if rec.tokens.is_empty() || reference.tokens.is_empty() {
                        return Err(parse_err("parallel pair has an empty side"));
                    }
                    let pair = ParallelPair {
                        src: rec,
                        reference,
                    };
                    if line.split == Split::Dev {
                        bundle.dev.push(pair);
                    } else {
                        bundle.test.push(pair);
                    }
                }
            }
        }
        Ok(bundle)
    }

    /// Inverse of [`SplitBundle::from_lines`], with explicit ids.
    pub fn to_lines(&self) -> Vec<DatasetLine> {
        let train: HashSet<u64> = self.train_sources.iter().map(|r| r.id).collect();
        let mut lines: Vec<DatasetLine> = self
            .corpus
            .iter()
            .map(|r| DatasetLine {
                id: Some(r.id),
                text: r.raw.clone(),
                split: if train.contains(&r.id) {
                    Split::TrainSrc
                } else {
                    Split::Corpus
                },
                reference: None,
                cluster: r.cluster_id,
            })
            .collect();
        for (split, pairs) in [(Split::Dev, &self.dev), (Split::Test, &self.test)] {
            lines.extend(pairs.iter().map(|p| DatasetLine {
                id: Some(p.src.id),
                text: p.src.raw.clone(),
                split,
                reference: Some(p.reference.raw.clone()),
                cluster: p.src.cluster_id,
            }));
        }
        lines
    }

    pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        Self::load_jsonl_with(path, DEFAULT_MAX_LEN)
    }

    pub fn load_jsonl_with(path: impl AsRef<Path>, max_len: usize) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: DatasetLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            lines.push(parsed);
        }
        Self::from_lines_at(&lines, max_len, path)
    }

    pub fn save_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for line in self.to_lines() {
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Id lookup over the retrieval pool (train sources included).
    pub fn pool_by_id(&self) -> HashMap<u64, &SentenceRecord> {
        self.corpus.iter().map(|r| (r.id, r)).collect()
    }

    /// Records that may feed vocabulary construction: never dev/test references.
    pub fn training_side(&self) -> impl Iterator<Item = &SentenceRecord> {
        self.corpus.iter()
    }
}
