//! The HTTP generator client against the built-in model served on a local
//! socket: contract suite, equality with direct calls, error mapping.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;

use paraselect::corpus::{SentenceRecord, Vocabulary};
use paraselect::generator::{GeneratorConfig, GeneratorHandle, IdPair, LoopbackServer, RemoteGenerator, Seq2Seq};
use paraselect::Error;

fn vocab() -> Vocabulary {
    let recs: Vec<SentenceRecord> = [
        "how do i cook rice",
        "what is the best way to cook rice",
        "where can i buy a cheap phone",
        "which phone is cheap and good",
    ]
    .iter()
    .enumerate()
    .map(|(i, t)| SentenceRecord::new(i as u64, *t, 20, None))
    .collect();
    Vocabulary::build(&recs, 100).unwrap()
}

fn model(v: &Vocabulary) -> Seq2Seq {
    let cfg = GeneratorConfig { embed: 6, hidden: 8, batch_size: 2, clip_norm: 5.0 };
    Seq2Seq::new(v.len(), cfg, 17)
}

fn pairs(v: &Vocabulary) -> Vec<IdPair> {
    let enc = |s: &str| v.encode(&s.split(' ').map(String::from).collect::<Vec<_>>());
    vec![
        IdPair { src: enc("how do i cook rice"), tgt: enc("what is the best way to cook rice") },
        IdPair { src: enc("where can i buy a cheap phone"), tgt: enc("which phone is cheap and good") },
        IdPair { src: enc("which phone is good"), tgt: enc("where can i buy a phone") },
    ]
}

fn setup() -> (LoopbackServer, RemoteGenerator, Seq2Seq, Vec<IdPair>) {
    let v = vocab();
    let direct = model(&v);
    let server = LoopbackServer::spawn(direct.clone(), v.clone()).unwrap();
    let remote = RemoteGenerator::new(server.url(), v.clone(), 2);
    (server, remote, direct, pairs(&v))
}

#[test]
fn health_reports_the_model() {
    let (_server, remote, _, _) = setup();
    let h = remote.health().unwrap();
    assert_eq!(h["ok"], true);
    assert_eq!(h["model"], "builtin-seq2seq");
}

#[test]
fn perplexity_matches_direct_calls() {
    let (_server, remote, direct, pairs) = setup();
    let r = remote.perplexity(&pairs).unwrap();
    let d = direct.perplexity(&pairs).unwrap();
    assert!((r - d).abs() <= 1e-6, "{r} vs {d}");
}

#[test]
fn fine_tune_and_generate_track_direct_calls() {
    let (_server, mut remote, mut direct, pairs) = setup();
    remote.fine_tune(&pairs, 4, 0.05).unwrap();
    direct.fine_tune(&pairs, 4, 0.05).unwrap();
    assert!((remote.perplexity(&pairs).unwrap() - direct.perplexity(&pairs).unwrap()).abs() <= 1e-6);
    for p in &pairs {
        assert_eq!(remote.generate(&p.src, 6).unwrap(), direct.generate(&p.src, 6).unwrap());
    }
}

#[test]
fn restore_after_snapshot_is_a_no_op() {
    let (_server, mut remote, _, pairs) = setup();
    let before = remote.perplexity(&pairs).unwrap();
    let snap = remote.snapshot().unwrap();
    remote.fine_tune(&pairs, 3, 0.1).unwrap();
    assert_ne!(remote.perplexity(&pairs).unwrap(), before);
    remote.restore(&snap).unwrap();
    assert_eq!(remote.perplexity(&pairs).unwrap(), before);
}

#[test]
fn empty_fine_tune_changes_nothing() {
    let (_server, mut remote, _, pairs) = setup();
    let before = remote.perplexity(&pairs).unwrap();
    remote.fine_tune(&[], 5, 0.1).unwrap();
    assert_eq!(remote.perplexity(&pairs).unwrap(), before);
}

#[test]
fn repeated_calls_are_deterministic() {
    let (_server, remote, _, pairs) = setup();
    let a = remote.perplexity(&pairs).unwrap();
    let b = remote.perplexity(&pairs).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
}

#[test]
fn server_errors_surface_as_remote_errors() {
    let (_server, mut remote, _, _) = setup();
    assert!(matches!(remote.perplexity(&[]), Err(Error::Empty(_))));
    let err = remote.restore(&"nope".to_string()).unwrap_err();
    assert!(matches!(&err, Error::Remote(m) if m.contains("400") && m.contains("unknown state")), "{err}");
}

/// Answers every request with a fixed body, whatever was asked.
fn canned(body: &'static str) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let mut stream = stream.unwrap();
            let mut reader = BufReader::new(&stream);
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line.trim().is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    url
}

#[test]
fn responses_must_echo_the_request_id() {
    let v = vocab();
    let remote = RemoteGenerator::new(canned(r#"{"id": 999, "ppl": 3.0}"#), v.clone(), 2);
    let err = remote.perplexity(&pairs(&v)).unwrap_err();
    assert!(matches!(&err, Error::Remote(m) if m.contains("echo")), "{err}");
}

#[test]
fn invalid_perplexity_is_rejected() {
    let v = vocab();
    let remote = RemoteGenerator::new(canned(r#"{"id": 0, "ppl": -1.0}"#), v.clone(), 2);
    assert!(matches!(remote.perplexity(&pairs(&v)), Err(Error::Remote(_))));
}
