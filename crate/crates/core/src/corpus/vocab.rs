use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::SentenceRecord;
use crate::error::{Error, Result};

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
pub const UNK: u32 = 3;
pub const RESERVED: [&str; 4] = ["<pad>", "<bos>", "<eos>", "<unk>"];

/// Default vocabulary cap, reserved ids included.
pub const DEFAULT_VOCAB_CAP: usize = 8000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    id_to_token: Vec<String>,
    #[serde(skip)]
    token_to_id: HashMap<String, u32>,
}

impl Vocabulary {
    /// Keeps the `cap - 4` most frequent tokens, ties broken lexicographically.
    pub fn build<'a, I>(records: I, cap: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a SentenceRecord>,
    {
        if cap < RESERVED.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "vocabulary cap {cap} leaves no room beyond the reserved ids"
            )));
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        let mut seen_any = false;
        for rec in records {
            seen_any = true;
            for tok in &rec.tokens {
                *counts.entry(tok.as_str()).or_default() += 1;
            }
        }
        if !seen_any {
            return Err(Error::Empty("vocabulary records"));
        }
        let mut ranked: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|(t, _)| !RESERVED.contains(t))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(cap - RESERVED.len());

        let id_to_token = RESERVED
            .iter()
            .map(|s| s.to_string())
            .chain(ranked.into_iter().map(|(t, _)| t.to_string()))
            .collect();
        Ok(Self::from_tokens(id_to_token))
    }

    pub(crate) fn from_tokens(id_to_token: Vec<String>) -> Self {
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self {
            id_to_token,
            token_to_id,
        }
    }

    /// Restores the lookup table after deserialization.
    pub fn reindex(self) -> Self {
        Self::from_tokens(self.id_to_token)
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.token_to_id.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.token_to_id.contains_key(token)
    }

    pub fn token(&self, id: u32) -> &str {
        self.id_to_token
            .get(id as usize)
            .map_or(RESERVED[UNK as usize], String::as_str)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    pub fn decode(&self, ids: &[u32]) -> Vec<String> {
        ids.iter().map(|&i| self.token(i).to_string()).collect()
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let doc = serde_json::json!({ "format": "paraselect-vocab", "tokens": self.id_to_token });
        fs::write(path, serde_json::to_string(&doc)? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut doc: serde_json::Value = serde_json::from_str(&text)?;
        if doc["format"] != "paraselect-vocab" {
            return Err(Error::Checkpoint(format!("{}: not a vocabulary file", path.display())));
        }
        let tokens: Vec<String> = serde_json::from_value(doc["tokens"].take())?;
        if tokens.len() < RESERVED.len() || tokens.iter().zip(RESERVED).any(|(t, r)| t != r) {
            return Err(Error::Checkpoint(format!("{}: reserved ids are missing", path.display())));
        }
        Ok(Self::from_tokens(tokens))
    }
}
