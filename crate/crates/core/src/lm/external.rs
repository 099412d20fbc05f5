//! Client for scorers that speak newline-delimited JSON over stdio or TCP.
//!
//! Requests and replies, one JSON object per line:
//!
//! ```text
//! {"op":"ground","evidence":[...],"epochs":5,"learning_rate":5e-5}  -> {"ok":true}
//! {"op":"score","text":"..."}                                       -> {"ok":true,"ppl":12.3}
//! {"op":"reset"}                                                    -> {"ok":true}
//! ```
//!
//! Failures come back as `{"ok":false,"error":"..."}`.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{GroundingConfig, Scorer, ScorerKind, TokenSequence};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum BridgeRequest {
    Ground {
        evidence: Vec<String>,
        epochs: u32,
        learning_rate: f64,
    },
    Score {
        text: String,
    },
    Reset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeResponse {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ppl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Optional token unit declared by the bridge on ground acknowledgment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

/// Where to reach the scoring service.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BridgeEndpoint {
    /// Spawn this program (with arguments) and talk over its stdin/stdout.
    Command(Vec<String>),
    /// Connect to `host:port`.
    Tcp(String),
}

impl fmt::Display for BridgeEndpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BridgeEndpoint::Command(argv) => write!(f, "stdio:{}", argv.join(" ")),
            BridgeEndpoint::Tcp(addr) => write!(f, "tcp:{addr}"),
        }
    }
}

impl BridgeEndpoint {
    /// Parses `tcp:HOST:PORT`, `stdio:PROGRAM ARGS...`, or a bare `HOST:PORT`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if let Some(rest) = spec.strip_prefix("tcp:") {
            return Ok(BridgeEndpoint::Tcp(rest.to_string()));
        }
        if let Some(rest) = spec.strip_prefix("stdio:") {
            let argv: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
            if argv.is_empty() {
                return Err(Error::InvalidConfig("empty bridge command".into()));
            }
            return Ok(BridgeEndpoint::Command(argv));
        }
        if spec.contains(':') && !spec.contains(char::is_whitespace) {
            return Ok(BridgeEndpoint::Tcp(spec.to_string()));
        }
        Err(Error::InvalidConfig(format!(
            "bridge address {spec:?} is neither tcp:HOST:PORT nor stdio:COMMAND"
        )))
    }
}

struct Connection {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    child: Option<Child>,
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// Scorer backed by an out-of-process language model. Requests from any
/// number of threads are serialized over the single connection.
pub struct ExternalScorer {
    endpoint: Option<BridgeEndpoint>,
    conn: Mutex<Connection>,
    grounded: bool,
    unit: Option<String>,
}

impl fmt::Debug for ExternalScorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExternalScorer")
            .field("endpoint", &self.endpoint)
            .field("grounded", &self.grounded)
            .finish()
    }
}

impl ExternalScorer {
    pub fn connect(endpoint: &BridgeEndpoint) -> Result<Self> {
        let conn = match endpoint {
            BridgeEndpoint::Command(argv) => {
                let (program, args) = argv
                    .split_first()
                    .ok_or_else(|| Error::InvalidConfig("empty bridge command".into()))?;
                let mut child = Command::new(program)
                    .args(args)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|e| Error::Bridge(format!("cannot spawn {program:?}: {e}")))?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                Connection {
                    reader: Box::new(BufReader::new(stdout)),
                    writer: Box::new(stdin),
                    child: Some(child),
                }
            }
            BridgeEndpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr)
                    .map_err(|e| Error::Bridge(format!("cannot connect to {addr}: {e}")))?;
                let reader = stream
                    .try_clone()
                    .map_err(|e| Error::Bridge(format!("cannot clone socket: {e}")))?;
                Connection {
                    reader: Box::new(BufReader::new(reader)),
                    writer: Box::new(stream),
                    child: None,
                }
            }
        };
        Ok(ExternalScorer {
            endpoint: Some(endpoint.clone()),
            conn: Mutex::new(conn),
            grounded: false,
            unit: None,
        })
    }

    /// Wraps an already-open pair of streams.
    pub fn from_streams(reader: impl BufRead + Send + 'static, writer: impl Write + Send + 'static) -> Self {
        ExternalScorer {
            endpoint: None,
            conn: Mutex::new(Connection {
                reader: Box::new(reader),
                writer: Box::new(writer),
                child: None,
            }),
            grounded: false,
            unit: None,
        }
    }

    pub fn endpoint(&self) -> Option<&BridgeEndpoint> {
        self.endpoint.as_ref()
    }

    /// Sends one request and waits for its reply line.
    pub fn request(&self, request: &BridgeRequest) -> Result<BridgeResponse> {
        let mut line = serde_json::to_string(request).expect("request serialization");
        line.push('\n');
        let mut conn = self
            .conn
            .lock()
            .map_err(|_| Error::Bridge("connection lock poisoned".into()))?;
        conn.writer
            .write_all(line.as_bytes())
            .and_then(|_| conn.writer.flush())
            .map_err(|e| Error::Bridge(format!("write failed: {e}")))?;

        let mut reply = String::new();
        let read = conn
            .reader
            .read_line(&mut reply)
            .map_err(|e| Error::Bridge(format!("read failed: {e}")))?;
        if read == 0 {
            return Err(Error::Bridge("bridge closed the connection".into()));
        }
        let response: BridgeResponse = serde_json::from_str(reply.trim_end())
            .map_err(|e| Error::Bridge(format!("malformed reply {:?}: {e}", reply.trim_end())))?;
        if !response.ok {
            return Err(Error::Bridge(
                response.error.unwrap_or_else(|| "unspecified bridge error".into()),
            ));
        }
        Ok(response)
    }
}

impl Scorer for ExternalScorer {
    fn kind(&self) -> ScorerKind {
        ScorerKind::External
    }

    fn is_grounded(&self) -> bool {
        self.grounded
    }

    fn ground(&mut self, evidence: &[String], cfg: &GroundingConfig) -> Result<()> {
        self.grounded = false;
        let ack = self.request(&BridgeRequest::Ground {
            evidence: evidence.to_vec(),
            epochs: cfg.epochs,
            learning_rate: cfg.learning_rate,
        })?;
        self.unit = ack.unit;
        self.grounded = true;
        Ok(())
    }

    fn perplexity(&self, text: &str) -> Result<f64> {
        if !self.grounded {
            return Err(Error::NotGrounded);
        }
        let reply = self.request(&BridgeRequest::Score { text: text.to_string() })?;
        match reply.ppl {
            Some(ppl) if ppl.is_finite() && ppl > 0.0 => Ok(ppl),
            Some(ppl) => Err(Error::Bridge(format!("invalid perplexity {ppl}"))),
            None => Err(Error::Bridge("score reply missing `ppl`".into())),
        }
    }

    fn sequence_log_prob(&self, _seq: &TokenSequence) -> Result<f64> {
        Err(Error::Unsupported(
            "external scorers report perplexity only, not per-token log-probabilities".into(),
        ))
    }

    fn reset(&mut self) -> Result<()> {
        self.request(&BridgeRequest::Reset)?;
        self.grounded = false;
        self.unit = None;
        Ok(())
    }

    fn perplexity_unit(&self) -> String {
        self.unit.clone().unwrap_or_else(|| "unspecified".to_string())
    }
}
