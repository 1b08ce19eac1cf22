//! Client side of the newline-delimited scorer protocol spoken over a child
//! process's stdin and stdout.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::{PrunerError, Scorer};
use crate::dataset::Instance;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub id: u64,
    pub target: String,
    pub context: String,
    pub smell: String,
    pub technology: String,
}

impl ScoreRequest {
    pub fn from_instance(id: u64, inst: &Instance) -> ScoreRequest {
        ScoreRequest {
            id,
            target: inst.target.clone(),
            context: inst.context.clone(),
            smell: inst.smell.name().to_string(),
            technology: inst.technology.name().to_string(),
        }
    }
}

/// A parsed response line.
#[derive(Debug, Clone, PartialEq)]
pub enum ScoreResponse {
    Probability { id: u64, fp_probability: f64 },
    Error { id: u64, error: String },
}

pub fn parse_response(line: &str) -> Result<ScoreResponse, String> {
    let v: Json = serde_json::from_str(line).map_err(|e| format!("not JSON: {e}"))?;
    let id = v
        .get("id")
        .and_then(Json::as_u64)
        .ok_or_else(|| "missing integer 'id'".to_string())?;
    if let Some(err) = v.get("error") {
        let error = err.as_str().map_or_else(|| err.to_string(), str::to_string);
        return Ok(ScoreResponse::Error { id, error });
    }
    let p = v
        .get("fp_probability")
        .and_then(Json::as_f64)
        .ok_or_else(|| format!("response {id} lacks a numeric 'fp_probability'"))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(format!("response {id}: probability {p} outside [0, 1]"));
    }
    Ok(ScoreResponse::Probability { id, fp_probability: p })
}

pub struct ExternalScorer {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    scorer_id: String,
    next_id: u64,
    timeout: Duration,
}

impl ExternalScorer {
    /// Starts `command` through the shell and waits for its ready line.
    pub fn spawn(command: &str, timeout: Duration) -> Result<ExternalScorer, PrunerError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| PrunerError::Spawn(format!("{command}: {e}")))?;
        let stdout = child.stdout.take().expect("stdout is piped");
        let stdin = child.stdin.take();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let failed = line.is_err();
                if tx.send(line).is_err() || failed {
                    break;
                }
            }
        });
        let mut scorer = ExternalScorer {
            child,
            stdin,
            lines: rx,
            scorer_id: String::new(),
            next_id: 1,
            timeout,
        };
        scorer.handshake()?;
        Ok(scorer)
    }

    fn next_line(&mut self, deadline: Instant, pending: Option<u64>) -> Result<String, PrunerError> {
        let wait = deadline.saturating_duration_since(Instant::now());
        match self.lines.recv_timeout(wait) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(PrunerError::Protocol(format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(PrunerError::Timeout {
                waited: self.timeout,
                pending,
            }),
            Err(RecvTimeoutError::Disconnected) => {
                let status = self.child.try_wait().ok().flatten();
                Err(PrunerError::ProcessExited {
                    status: status.map(|s| s.to_string()),
                    pending,
                })
            }
        }
    }

    fn handshake(&mut self) -> Result<(), PrunerError> {
        let deadline = Instant::now() + self.timeout;
        loop {
            let line = self.next_line(deadline, None)?;
            if line.trim().is_empty() {
                continue;
            }
            let v: Json = serde_json::from_str(&line)
                .map_err(|e| PrunerError::Protocol(format!("bad handshake '{line}': {e}")))?;
            if v.get("ready").and_then(Json::as_bool) != Some(true) {
                return Err(PrunerError::Protocol(format!("expected ready handshake, got '{line}'")));
            }
            self.scorer_id = v
                .get("scorer_id")
                .and_then(Json::as_str)
                .unwrap_or("external")
                .to_string();
            return Ok(());
        }
    }
}

impl Scorer for ExternalScorer {
    fn id(&self) -> &str {
        &self.scorer_id
    }

    fn score_batch(&mut self, batch: &[Instance]) -> Result<Vec<f64>, PrunerError> {
        let first = self.next_id;
        self.next_id += batch.len() as u64;
        let mut payload = String::new();
        for (offset, inst) in batch.iter().enumerate() {
            let req = ScoreRequest::from_instance(first + offset as u64, inst);
            payload.push_str(&serde_json::to_string(&req).expect("requests serialize"));
            payload.push('\n');
        }
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| PrunerError::Protocol("scorer input already closed".into()))?;
        if let Err(e) = stdin.write_all(payload.as_bytes()).and_then(|_| stdin.flush()) {
            let status = self.child.try_wait().ok().flatten();
            return Err(PrunerError::ProcessExited {
                status: status.map(|s| s.to_string()).or(Some(e.to_string())),
                pending: Some(first),
            });
        }

        let mut results: HashMap<u64, f64> = HashMap::new();
        let deadline = Instant::now() + self.timeout;
        while results.len() < batch.len() {
            let pending = (first..first + batch.len() as u64).find(|id| !results.contains_key(id));
            let line = self.next_line(deadline, pending)?;
            if line.trim().is_empty() {
                continue;
            }
            match parse_response(&line).map_err(PrunerError::Protocol)? {
                ScoreResponse::Probability { id, fp_probability } => {
                    if id < first || id >= first + batch.len() as u64 {
                        return Err(PrunerError::Protocol(format!("response for unknown id {id}")));
                    }
                    if results.insert(id, fp_probability).is_some() {
                        return Err(PrunerError::Protocol(format!("duplicate response for id {id}")));
                    }
                }
                ScoreResponse::Error { id, error } => {
                    let instance = id
                        .checked_sub(first)
                        .and_then(|i| batch.get(i as usize))
                        .map(|inst| inst.id.clone())
                        .unwrap_or_default();
                    return Err(PrunerError::Instance {
                        sequence_id: id,
                        instance,
                        message: error,
                    });
                }
            }
        }
        Ok((first..first + batch.len() as u64).map(|id| results[&id]).collect())
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        drop(self.stdin.take());
        let deadline = Instant::now() + Duration::from_millis(200);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(5));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
