mod common;

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use debunk_core::lm::{
    BridgeEndpoint, BridgeRequest, BridgeResponse, ExternalScorer, GroundingConfig, NgramScorer, Scorer,
};
use debunk_core::{run_pipeline, Error, RunConfig};
use serde_json::Value;

/// In-process stand-in for the neural service: an n-gram scorer behind the
/// line protocol, recording every request it receives.
fn spawn_fake_bridge() -> (String, Arc<Mutex<Vec<String>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let transcript = Arc::new(Mutex::new(Vec::new()));
    let log = transcript.clone();
    thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut writer = stream.try_clone().unwrap();
        let mut model: Option<NgramScorer> = None;
        for line in BufReader::new(stream).lines() {
            let line = line.unwrap();
            log.lock().unwrap().push(line.clone());
            let reply = match serde_json::from_str::<BridgeRequest>(&line) {
                Ok(BridgeRequest::Ground { evidence, epochs, learning_rate }) => {
                    let mut scorer = NgramScorer::new();
                    let cfg = GroundingConfig { epochs, learning_rate, ..GroundingConfig::default() };
                    scorer.ground(&evidence, &cfg).unwrap();
                    model = Some(scorer);
                    serde_json::json!({"ok": true, "unit": "word"})
                }
                Ok(BridgeRequest::Score { text }) => match &model {
                    Some(m) => serde_json::json!({"ok": true, "ppl": m.perplexity(&text).unwrap()}),
                    None => serde_json::json!({"ok": false, "error": "not grounded"}),
                },
                Ok(BridgeRequest::Reset) => {
                    model = None;
                    serde_json::json!({"ok": true})
                }
                Err(e) => serde_json::json!({"ok": false, "error": e.to_string()}),
            };
            writeln!(writer, "{reply}").unwrap();
        }
    });
    (addr, transcript)
}

fn assert_schema_valid(line: &str) {
    let v: Value = serde_json::from_str(line).unwrap();
    match v["op"].as_str().unwrap() {
        "ground" => {
            assert!(v["evidence"].as_array().unwrap().iter().all(Value::is_string));
            assert!(v["epochs"].as_u64().unwrap() > 0);
            assert!(v["learning_rate"].as_f64().unwrap() > 0.0);
        }
        "score" => assert!(v["text"].is_string()),
        "reset" => assert_eq!(v.as_object().unwrap().len(), 1),
        other => panic!("unexpected op {other}"),
    }
}

#[test]
fn tcp_bridge_round_trip() {
    let (addr, transcript) = spawn_fake_bridge();
    let mut scorer = ExternalScorer::connect(&BridgeEndpoint::parse(&format!("tcp:{addr}")).unwrap()).unwrap();
    assert!(matches!(scorer.perplexity("x"), Err(Error::NotGrounded)));

    let evidence = common::templated_sentences(20, 4);
    scorer.ground(&evidence, &GroundingConfig::default()).unwrap();
    assert_eq!(scorer.perplexity_unit(), "word");

    let mut local = NgramScorer::new();
    local.ground(&evidence, &GroundingConfig::default()).unwrap();
    for text in &evidence[..5] {
        let remote = scorer.perplexity(text).unwrap();
        assert_eq!(remote, local.perplexity(text).unwrap());
    }

    scorer.reset().unwrap();
    assert!(!scorer.is_grounded());
    // the bridge itself refuses scoring after a reset
    let refused = scorer.request(&BridgeRequest::Score { text: "x".into() });
    assert!(matches!(refused, Err(Error::Bridge(msg)) if msg.contains("not grounded")));

    let lines = transcript.lock().unwrap().clone();
    assert_eq!(lines.len(), 1 + 5 + 1 + 1);
    for line in &lines {
        assert_schema_valid(line);
    }
    assert!(lines[0].starts_with(r#"{"op":"ground""#));
    assert_eq!(lines[6], r#"{"op":"reset"}"#);
}

#[test]
fn pipeline_over_bridge_matches_local_scorer() {
    let (addr, _) = spawn_fake_bridge();
    let claims = common::claims(4);
    let corpus = common::corpus(4);
    let mut cfg = RunConfig::default();
    cfg.calibration.seed = Some(2);
    cfg.scorer.kind = debunk_core::lm::ScorerKind::External;
    cfg.scorer.bridge = Some(BridgeEndpoint::Tcp(addr.clone()));
    let mut remote = ExternalScorer::connect(&BridgeEndpoint::Tcp(addr)).unwrap();
    let over_bridge = run_pipeline(&claims, &corpus, &cfg, &mut remote).unwrap();

    cfg.scorer = Default::default();
    let local = run_pipeline(&claims, &corpus, &cfg, &mut NgramScorer::new()).unwrap();
    assert_eq!(over_bridge.scores, local.scores);
    assert_eq!(over_bridge.verdicts, local.verdicts);
    assert_eq!(over_bridge.perplexity_unit, "word");
}

#[test]
fn bridge_failures_surface_as_bridge_errors() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut writer = stream.try_clone().unwrap();
        let mut reader = BufReader::new(stream);
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        writeln!(writer, "this is not json").unwrap();
        line.clear();
        reader.read_line(&mut line).unwrap();
        // hang up without replying
    });
    let mut scorer = ExternalScorer::connect(&BridgeEndpoint::Tcp(addr)).unwrap();
    let cfg = GroundingConfig::default();
    assert!(matches!(scorer.ground(&["a b".into()], &cfg), Err(Error::Bridge(m)) if m.contains("malformed")));
    assert!(matches!(scorer.ground(&["a b".into()], &cfg), Err(Error::Bridge(_))));
    assert!(!scorer.is_grounded());
}

#[test]
fn unreachable_bridge_is_a_bridge_error() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    drop(listener);
    assert!(matches!(ExternalScorer::connect(&BridgeEndpoint::Tcp(addr)), Err(Error::Bridge(_))));
    let missing = BridgeEndpoint::Command(vec!["/nonexistent/bridge-binary".into()]);
    assert!(matches!(ExternalScorer::connect(&missing), Err(Error::Bridge(_))));
}

#[test]
fn response_schema() {
    let ack: BridgeResponse = serde_json::from_str(r#"{"ok":true,"unit":"subword"}"#).unwrap();
    assert_eq!(ack.unit.as_deref(), Some("subword"));
    assert_eq!(serde_json::to_string(&ack).unwrap(), r#"{"ok":true,"unit":"subword"}"#);
}
