use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rules::SmellType;

/// Ground-truth smell occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OracleEntry {
    pub file_path: String,
    pub line: usize,
    pub smell: SmellType,
}

impl OracleEntry {
    pub fn new(file_path: impl Into<String>, line: usize, smell: SmellType) -> Self {
        OracleEntry {
            file_path: file_path.into(),
            line,
            smell,
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("cannot read oracle {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("oracle line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Parses `file_path,line,smell` rows. Blank lines, `#` comments and a
/// leading `file_path,...` header are skipped. The path may itself contain
/// commas; the last two fields are split off from the right.
pub fn parse_oracle(text: &str) -> Result<Vec<OracleEntry>, OracleError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let row = raw.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        if out.is_empty() && row.to_ascii_lowercase().starts_with("file_path,") {
            continue;
        }
        let fields: Vec<&str> = row.rsplitn(3, ',').collect();
        let [smell, line, path] = fields[..] else {
            return Err(OracleError::Format {
                line: line_no,
                message: format!("expected file_path,line,smell; got '{row}'"),
            });
        };
        let line: usize = line.trim().parse().map_err(|_| OracleError::Format {
            line: line_no,
            message: format!("bad line number '{}'", line.trim()),
        })?;
        if line == 0 {
            return Err(OracleError::Format {
                line: line_no,
                message: "line numbers start at 1".into(),
            });
        }
        let smell = smell.trim().parse().map_err(|e| OracleError::Format {
            line: line_no,
            message: format!("{e}"),
        })?;
        let path = path.trim();
        if path.is_empty() {
            return Err(OracleError::Format {
                line: line_no,
                message: "empty file path".into(),
            });
        }
        out.push(OracleEntry::new(path, line, smell));
    }
    Ok(out)
}

pub fn load_oracle(path: &Path) -> Result<Vec<OracleEntry>, OracleError> {
    let text = fs::read_to_string(path).map_err(|source| OracleError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_oracle(&text)
}

pub fn oracle_to_text(entries: &[OracleEntry]) -> String {
    let mut out = String::from("file_path,line,smell\n");
    for e in entries {
        let _ = writeln!(out, "{},{},{}", e.file_path, e.line, e.smell);
    }
    out
}
