use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::eval::CorpusFiles;
use crate::ir::Technology;
use crate::pruner::ScoredFinding;
use crate::rules::{Finding, SmellType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Kept,
    Dropped,
}

/// One line of `analyze --format records` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub file: String,
    pub line: usize,
    pub smell: SmellType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub technology: Option<Technology>,
    pub confidence: f64,
    #[serde(default)]
    pub fp_probability: f64,
    #[serde(default)]
    pub scorer: String,
    #[serde(default)]
    pub rationale: String,
    pub status: Status,
}

impl Record {
    pub fn from_scored(sf: &ScoredFinding, status: Status) -> Record {
        Record {
            file: sf.finding.file_path.clone(),
            line: sf.finding.line,
            smell: sf.finding.smell,
            technology: Some(sf.finding.technology),
            confidence: sf.smell_confidence,
            fp_probability: sf.fp_probability,
            scorer: sf.scorer_id.clone(),
            rationale: sf.finding.rationale.clone(),
            status,
        }
    }

    /// Technology comes from the record, else from the corpus.
    pub fn into_scored(self, corpus: &CorpusFiles) -> Result<ScoredFinding> {
        let Some(technology) = self.technology.or_else(|| corpus.technology_of(&self.file)) else {
            bail!("prediction for {} names no technology and the file is not in the corpus", self.file);
        };
        if !(0.0..=1.0).contains(&self.confidence) {
            bail!("prediction {}:{} has confidence {} outside [0, 1]", self.file, self.line, self.confidence);
        }
        Ok(ScoredFinding {
            finding: Finding {
                file_path: self.file,
                line: self.line,
                smell: self.smell,
                rationale: self.rationale,
                confidence: self.confidence,
                technology,
            },
            fp_probability: 1.0 - self.confidence,
            smell_confidence: self.confidence,
            scorer_id: self.scorer,
        })
    }
}

pub fn read_records(path: &Path) -> Result<Vec<Record>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).with_context(|| format!("{} line {}", path.display(), n + 1)))
        .collect()
}
