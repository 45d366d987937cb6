//! The built-in generator served over the adapter wire protocol on a local
//! socket, so a [`RemoteGenerator`](crate::generator::RemoteGenerator) can be
//! checked against direct in-process calls.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use serde_json::{json, Value};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::generator::remote::{WirePair, WIRE_VERSION};
use crate::generator::{GeneratorHandle, IdPair, Seq2Seq, Seq2SeqState};

struct Served {
    model: Seq2Seq,
    vocab: Vocabulary,
    states: BTreeMap<String, Seq2SeqState>,
    next_state: u64,
}

type Reply = (u16, Value);

fn bad(msg: impl Into<String>) -> Reply {
    (400, json!({ "error": msg.into() }))
}

impl Served {
    fn pairs(&self, body: &Value) -> std::result::Result<Vec<IdPair>, Reply> {
        let wire: Vec<WirePair> =
            serde_json::from_value(body["pairs"].clone()).map_err(|e| bad(format!("pairs: {e}")))?;
        Ok(wire
            .iter()
            .map(|p| IdPair {
                src: self.vocab.encode(&p.src),
                tgt: self.vocab.encode(&p.reference),
            })
            .collect())
    }

    fn handle(&mut self, path: &str, body: &Value) -> std::result::Result<Value, Reply> {
        let model_err = |e: Error| (500, json!({ "error": e.to_string() }));
        match path {
            "/fine_tune" => {
                let pairs = self.pairs(body)?;
                let steps = body["steps"].as_u64().ok_or_else(|| bad("steps must be an integer"))?;
                let lr = body["lr"].as_f64().ok_or_else(|| bad("lr must be a number"))?;
                self.model.fine_tune(&pairs, steps as usize, lr).map_err(model_err)?;
                Ok(json!({ "ok": true }))
            }
            "/perplexity" => {
                let pairs = self.pairs(body)?;
                if pairs.is_empty() {
                    return Err(bad("perplexity needs at least one pair"));
                }
                Ok(json!({ "ppl": self.model.perplexity(&pairs).map_err(model_err)? }))
            }
            "/generate" => {
                let src: Vec<String> =
                    serde_json::from_value(body["src"].clone()).map_err(|e| bad(format!("src: {e}")))?;
                let max_len = body["max_len"].as_u64().ok_or_else(|| bad("max_len must be an integer"))?;
                let out = self
                    .model
                    .generate(&self.vocab.encode(&src), max_len as usize)
                    .map_err(model_err)?;
                Ok(json!({ "tokens": self.vocab.decode(&out) }))
            }
            "/snapshot" => {
                let id = format!("s{}", self.next_state);
                self.next_state += 1;
                self.states.insert(id.clone(), self.model.snapshot().map_err(model_err)?);
                Ok(json!({ "state_id": id }))
            }
            "/restore" => {
                let id = body["state_id"].as_str().ok_or_else(|| bad("state_id must be a string"))?;
                let state = self.states.get(id).ok_or_else(|| bad(format!("unknown state {id}")))?;
                self.model.restore(state).map_err(model_err)?;
                Ok(json!({ "ok": true }))
            }
            other => Err((404, json!({ "error": format!("no endpoint {other}") }))),
        }
    }

    fn respond(&mut self, method: &str, path: &str, body: &[u8]) -> Reply {
        if method == "GET" && path == "/health" {
            return (200, json!({ "ok": true, "model": "builtin-seq2seq" }));
        }
        if method != "POST" {
            return (405, json!({ "error": format!("{method} not allowed") }));
        }
        let body: Value = match serde_json::from_slice(body) {
            Ok(v @ Value::Object(_)) => v,
            _ => return bad("body must be a JSON object"),
        };
        let id = body.get("id").cloned().unwrap_or(Value::Null);
        let (status, mut value) = if body.get("v") != Some(&json!(WIRE_VERSION)) {
            bad(format!("expected protocol version {WIRE_VERSION}"))
        } else {
            match self.handle(path, &body) {
                Ok(v) => (200, v),
                Err(reply) => reply,
            }
        };
        value["id"] = id;
        (status, value)
    }
}

fn read_request(stream: &TcpStream) -> std::io::Result<Option<(String, String, Vec<u8>)>> {
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    if reader.read_line(&mut line)? == 0 {
        return Ok(None);
    }
    let mut parts = line.split_whitespace();
    let method = parts.next().unwrap_or_default().to_string();
    let path = parts.next().unwrap_or_default().to_string();
    let mut length = 0usize;
    loop {
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let header = header.trim_end();
        if header.is_empty() {
            break;
        }
        if let Some((name, value)) = header.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body)?;
    Ok(Some((method, path, body)))
}

fn write_response(mut stream: &TcpStream, (status, value): Reply) -> std::io::Result<()> {
    let body = value.to_string();
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        405 => "Method Not Allowed",
        _ => "Internal Server Error",
    };
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    stream.flush()
}

/// A background thread answering one request per connection, in order.
pub struct LoopbackServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl LoopbackServer {
    pub fn spawn(model: Seq2Seq, vocab: Vocabulary) -> Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0").map_err(|e| Error::io("127.0.0.1:0", e))?;
        let addr = listener.local_addr().map_err(|e| Error::io("127.0.0.1:0", e))?;
        let stop = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&stop);
        let mut served = Served {
            model,
            vocab,
            states: BTreeMap::new(),
            next_state: 0,
        };
        let thread = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if flag.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                if let Ok(Some((method, path, body))) = read_request(&stream) {
                    let reply = served.respond(&method, &path, &body);
                    let _ = write_response(&stream, reply);
                }
            }
        });
        Ok(Self {
            addr,
            stop,
            thread: Some(thread),
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for LoopbackServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // Wake the accept loop so it sees the flag.
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
