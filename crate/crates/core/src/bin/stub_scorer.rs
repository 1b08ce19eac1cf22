//! Scripted scorer process for exercising the scorer protocol.
//!
//! Reads request lines on stdin and answers each one according to the
//! chosen mode.

use std::io::{self, BufRead, Write};
use std::thread;
use std::time::Duration;

use clap::Parser;
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(name = "iacsmell-stub-scorer")]
struct Opts {
    /// Probability returned for every request.
    #[arg(long, default_value_t = 0.0)]
    constant: f64,
    /// Return the number following `fp-score:` in the context instead.
    #[arg(long)]
    magic: bool,
    /// Exit without replying once this many requests have been answered.
    #[arg(long)]
    exit_after: Option<u64>,
    /// Reply with an error for this request id.
    #[arg(long)]
    error_on: Option<u64>,
    /// Reply with a line that is not JSON for this request id.
    #[arg(long)]
    garbage_on: Option<u64>,
    /// Delay before every reply.
    #[arg(long, default_value_t = 0)]
    sleep_ms: u64,
    /// Answer requests in swapped pairs; an odd trailing request waits for a partner.
    #[arg(long)]
    swap_pairs: bool,
    #[arg(long, default_value = "stub")]
    scorer_id: String,
    /// Never send the ready line.
    #[arg(long)]
    silent: bool,
}

fn magic_value(context: &str) -> Option<f64> {
    let start = context.find("fp-score:")? + "fp-score:".len();
    let rest = context[start..].trim_start();
    let end = rest
        .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-' || c == 'e'))
        .unwrap_or(rest.len());
    rest[..end].parse().ok()
}

fn main() {
    let opts = Opts::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if !opts.silent {
        let ready = json!({"ready": true, "scorer_id": opts.scorer_id});
        if writeln!(out, "{ready}").and_then(|_| out.flush()).is_err() {
            return;
        }
    }
    let mut answered = 0u64;
    let mut pending: Vec<Value> = Vec::new();
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    while let Some(Ok(line)) = lines.next() {
        let req: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(_) => continue,
        };
        pending.push(req);
        if opts.swap_pairs && pending.len() < 2 {
            continue;
        }
        if opts.swap_pairs {
            pending.reverse();
        }
        for req in pending.drain(..) {
            if opts.exit_after == Some(answered) {
                std::process::exit(3);
            }
            if opts.sleep_ms > 0 {
                thread::sleep(Duration::from_millis(opts.sleep_ms));
            }
            let id = req["id"].as_u64().unwrap_or(0);
            let reply = if opts.error_on == Some(id) {
                json!({"id": id, "error": "stub failure"}).to_string()
            } else if opts.garbage_on == Some(id) {
                "this is not a record".to_string()
            } else {
                let p = if opts.magic {
                    magic_value(req["context"].as_str().unwrap_or("")).unwrap_or(opts.constant)
                } else {
                    opts.constant
                };
                json!({"id": id, "fp_probability": p}).to_string()
            };
            if writeln!(out, "{reply}").is_err() {
                return;
            }
            answered += 1;
        }
        if out.flush().is_err() {
            return;
        }
    }
}
