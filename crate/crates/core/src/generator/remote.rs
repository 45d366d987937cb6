//! HTTP client for an external generator service speaking the JSON wire
//! protocol (`/fine_tune`, `/perplexity`, `/generate`, `/snapshot`,
//! `/restore`, `/health`). Token sequences cross the wire as strings and
//! are never re-tokenized.

use std::cell::Cell;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::generator::{GeneratorHandle, IdPair};

pub const WIRE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WirePair {
    pub src: Vec<String>,
    #[serde(rename = "ref")]
    pub reference: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct PplResponse {
    ppl: f64,
}

#[derive(Debug, Deserialize)]
struct TokensResponse {
    tokens: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct StateResponse {
    state_id: String,
}

pub struct RemoteGenerator {
    base: String,
    vocab: Vocabulary,
    agent: ureq::Agent,
    batch_size: usize,
    next_id: Cell<u64>,
}

impl RemoteGenerator {
    pub fn new(base_url: impl Into<String>, vocab: Vocabulary, batch_size: usize) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(600)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            base: base_url.into().trim_end_matches('/').to_string(),
            vocab,
            agent,
            batch_size,
            next_id: Cell::new(0),
        }
    }

    pub fn health(&self) -> Result<Value> {
        let url = format!("{}/health", self.base);
        let mut resp = self
            .agent
            .get(&url)
            .call()
            .map_err(|e| Error::Remote(format!("GET {url}: {e}")))?;
        resp.body_mut()
            .read_json()
            .map_err(|e| Error::Remote(format!("GET {url}: {e}")))
    }

    fn wire_pairs(&self, pairs: &[IdPair]) -> Vec<WirePair> {
        pairs
            .iter()
            .map(|p| WirePair {
                src: self.vocab.decode(&p.src),
                reference: self.vocab.decode(&p.tgt),
            })
            .collect()
    }

    fn call<T: DeserializeOwned>(&self, endpoint: &str, mut body: Value) -> Result<T> {
        let id = self.next_id.get();
        self.next_id.set(id + 1);
        body["v"] = json!(WIRE_VERSION);
        body["id"] = json!(id);
        let url = format!("{}/{endpoint}", self.base);
        let mut resp = self
            .agent
            .post(&url)
            .send_json(&body)
            .map_err(|e| Error::Remote(format!("POST {url}: {e}")))?;
        let status = resp.status().as_u16();
        let value: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| Error::Remote(format!("POST {url}: {e}")))?;
        if status != 200 {
            let msg = value.get("error").and_then(Value::as_str).unwrap_or("unknown error");
            return Err(Error::Remote(format!("POST {url}: {status} {msg}")));
        }
        if value.get("id") != Some(&json!(id)) {
            return Err(Error::Remote(format!("POST {url}: response does not echo request id {id}")));
        }
        Ok(serde_json::from_value(value)?)
    }
}

impl GeneratorHandle for RemoteGenerator {
    type Snapshot = String;

    fn fine_tune(&mut self, pairs: &[IdPair], steps: usize, lr: f64) -> Result<()> {
        if pairs.is_empty() || steps == 0 {
            return Ok(());
        }
        let _: Value = self.call(
            "fine_tune",
            json!({ "pairs": self.wire_pairs(pairs), "steps": steps, "lr": lr }),
        )?;
        Ok(())
    }

    fn perplexity(&self, pairs: &[IdPair]) -> Result<f64> {
        if pairs.is_empty() {
            return Err(Error::Empty("perplexity pairs"));
        }
        let r: PplResponse = self.call("perplexity", json!({ "pairs": self.wire_pairs(pairs) }))?;
        if !(r.ppl.is_finite() && r.ppl > 0.0) {
            return Err(Error::Remote(format!("invalid perplexity {}", r.ppl)));
        }
        Ok(r.ppl)
    }

    fn generate(&self, src: &[u32], max_len: usize) -> Result<Vec<u32>> {
        let r: TokensResponse = self.call(
            "generate",
            json!({ "src": self.vocab.decode(src), "max_len": max_len }),
        )?;
        Ok(r.tokens.iter().map(|t| self.vocab.id(t)).collect())
    }

    fn snapshot(&self) -> Result<String> {
        let r: StateResponse = self.call("snapshot", json!({}))?;
        Ok(r.state_id)
    }

    fn restore(&mut self, snapshot: &String) -> Result<()> {
        let _: Value = self.call("restore", json!({ "state_id": snapshot }))?;
        Ok(())
    }

    fn batch_size(&self) -> usize {
        self.batch_size
    }
}
