use std::fmt::Write as _;

use thiserror::Error;

use super::instance::{Instance, Label};

const SYSTEM_ROLE: &str = "You are an infrastructure-as-code security analyst. You review warnings \
raised by a rule-based security smell detector for Puppet, Ansible and Chef scripts and decide \
whether each warning is a true positive or a false positive.";

/// Teacher prompt for one instance. Equal instances give byte-identical text.
pub fn build_prompt(instance: &Instance) -> String {
    let mut p = String::new();
    let smell = instance.smell;
    let _ = writeln!(p, "### System");
    let _ = writeln!(p, "{SYSTEM_ROLE}");
    let _ = writeln!(p);
    let _ = writeln!(p, "### Task");
    let _ = writeln!(p, "Technology: {}", instance.technology);
    let _ = writeln!(p, "File: {}", instance.file_path);
    let _ = writeln!(p, "Rule: {} ({})", smell.name(), smell.cwe_label());
    let _ = writeln!(p, "Rule description: {}", smell.description());
    let _ = writeln!(p, "Match rationale: {}", instance.rationale);
    let _ = writeln!(p, "Flagged line: {}", instance.line);
    let _ = writeln!(p);
    let _ = writeln!(p, "Code window (the flagged line is marked with >>>):");
    let start = instance.context_start();
    let width = (start + instance.context.lines().count()).to_string().len();
    for (offset, text) in instance.context.split('\n').enumerate() {
        let number = start + offset;
        let marker = if number == instance.line { ">>>" } else { "   " };
        let _ = writeln!(p, "{marker} {number:>width$} | {text}");
    }
    let _ = writeln!(p);
    let _ = writeln!(
        p,
        "Decide whether the flagged line really exhibits the {} smell, or whether the rule \
         matched something benign such as a placeholder, a lookup default, a test value or an \
         unrelated identifier.",
        smell.name()
    );
    let _ = writeln!(p);
    let _ = writeln!(p, "### Output format");
    let _ = writeln!(p, "Reply with exactly two lines and nothing else:");
    let _ = writeln!(p, "DECISION: TP or DECISION: FP");
    let _ = writeln!(p, "JUSTIFICATION: one sentence explaining the decision");
    p
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnparseableResponse {
    #[error("response has no DECISION line")]
    Missing,
    #[error("unrecognized decision '{0}'")]
    Unrecognized(String),
}

/// Reads the verdict from the first `DECISION:` line of a teacher reply.
pub fn parse_teacher_response(text: &str) -> Result<Label, UnparseableResponse> {
    for line in text.lines() {
        let cleaned: String = line
            .chars()
            .filter(|c| !matches!(c, '*' | '`' | '_'))
            .collect();
        let cleaned = cleaned.trim_start_matches(|c: char| c.is_whitespace() || matches!(c, '#' | '>' | '-'));
        let lower = cleaned.to_ascii_lowercase();
        let Some(rest) = lower.strip_prefix("decision") else {
            continue;
        };
        let Some(value) = rest.trim_start().strip_prefix(':') else {
            continue;
        };
        let token = value
            .split_whitespace()
            .next()
            .unwrap_or("")
            .trim_end_matches(['.', ',', ';', '!']);
        return match token {
            "tp" => Ok(Label::TP),
            "fp" => Ok(Label::FP),
            other => Err(UnparseableResponse::Unrecognized(other.to_string())),
        };
    }
    Err(UnparseableResponse::Missing)
}
