//! False-positive pruning of rule findings.

pub mod external;
mod features;
mod model;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Instance;
use crate::ir::LocationError;
use crate::rules::{Finding, SmellType};

pub use crate::dataset::make_instance;
pub use external::ExternalScorer;
pub use features::{extract_features, words, SparseFeatures};
pub use model::{
    fp_f1, loss_and_gradient, sigmoid, train_builtin, BuiltinModel, Encoded, EpochStats, ModelError, TrainError,
    TrainParams, TrainReport, MODEL_VERSION,
};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_BATCH_SIZE: usize = 32;
pub const RULE_ONLY: &str = "rule-only";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetedSmellSet(pub BTreeSet<SmellType>);

impl Default for TargetedSmellSet {
    fn default() -> Self {
        TargetedSmellSet(
            [
                SmellType::HardCodedSecret,
                SmellType::SuspiciousComment,
                SmellType::HttpWithoutTls,
                SmellType::WeakCrypto,
            ]
            .into(),
        )
    }
}

impl TargetedSmellSet {
    pub fn none() -> Self {
        TargetedSmellSet(BTreeSet::new())
    }

    pub fn contains(&self, smell: SmellType) -> bool {
        self.0.contains(&smell)
    }
}

impl FromIterator<SmellType> for TargetedSmellSet {
    fn from_iter<I: IntoIterator<Item = SmellType>>(iter: I) -> Self {
        TargetedSmellSet(iter.into_iter().collect())
    }
}

/// A finding together with its false-positive probability. The finding's
/// `confidence` field always equals `smell_confidence`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredFinding {
    pub finding: Finding,
    pub fp_probability: f64,
    pub smell_confidence: f64,
    pub scorer_id: String,
}

impl ScoredFinding {
    pub fn new(mut finding: Finding, fp_probability: f64, scorer_id: impl Into<String>) -> ScoredFinding {
        let smell_confidence = 1.0 - fp_probability;
        finding.confidence = smell_confidence;
        ScoredFinding {
            finding,
            fp_probability,
            smell_confidence,
            scorer_id: scorer_id.into(),
        }
    }

    /// Pass-through form used for smells outside the targeted set.
    pub fn rule_only(finding: Finding) -> ScoredFinding {
        ScoredFinding {
            smell_confidence: finding.confidence,
            finding,
            fp_probability: 0.0,
            scorer_id: RULE_ONLY.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PruneOutcome {
    pub kept: Vec<ScoredFinding>,
    pub dropped: Vec<ScoredFinding>,
}

#[derive(Debug, Error)]
pub enum PrunerError {
    #[error("cannot start scorer {0}")]
    Spawn(String),
    #[error("scorer protocol error: {0}")]
    Protocol(String),
    #[error("scorer exited (status {}) while request {} was pending",
        status.as_deref().unwrap_or("unknown"),
        pending.map_or_else(|| "handshake".to_string(), |id| id.to_string()))]
    ProcessExited { status: Option<String>, pending: Option<u64> },
    #[error("scorer did not answer within {waited:?} (request {})",
        pending.map_or_else(|| "handshake".to_string(), |id| id.to_string()))]
    Timeout { waited: Duration, pending: Option<u64> },
    #[error("scorer failed on request {sequence_id} (instance {instance}): {message}")]
    Instance { sequence_id: u64, instance: String, message: String },
    #[error("scorer returned {got} scores for a batch of {expected}")]
    CountMismatch { expected: usize, got: usize },
    #[error("scorer returned probability {probability} for instance {instance}")]
    OutOfRange { instance: String, probability: f64 },
    #[error("no source text for {0}")]
    MissingSource(String),
    #[error(transparent)]
    Location(#[from] LocationError),
}

pub trait Scorer {
    fn id(&self) -> &str;
    /// One false-positive probability per instance, in order.
    fn score_batch(&mut self, batch: &[Instance]) -> Result<Vec<f64>, PrunerError>;
}

/// Scores every instance as a true positive.
#[derive(Debug, Clone, Copy, Default)]
pub struct PassthroughScorer;

impl Scorer for PassthroughScorer {
    fn id(&self) -> &str {
        "passthrough"
    }

    fn score_batch(&mut self, batch: &[Instance]) -> Result<Vec<f64>, PrunerError> {
        Ok(vec![0.0; batch.len()])
    }
}

pub struct BuiltinScorer {
    model: BuiltinModel,
    id: String,
}

impl BuiltinScorer {
    pub fn new(model: BuiltinModel) -> BuiltinScorer {
        let id = format!("builtin:{}", model.version);
        BuiltinScorer { model, id }
    }

    pub fn model(&self) -> &BuiltinModel {
        &self.model
    }
}

impl Scorer for BuiltinScorer {
    fn id(&self) -> &str {
        &self.id
    }

    fn score_batch(&mut self, batch: &[Instance]) -> Result<Vec<f64>, PrunerError> {
        Ok(batch.par_iter().map(|inst| self.model.score(inst)).collect())
    }
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn score_batch(&mut self, batch: &[Instance]) -> Result<Vec<f64>, PrunerError> {
        (**self).score_batch(batch)
    }
}

/// Splits `findings` into kept and dropped lists.
///
/// `sources` maps each file path to its text. Targeted findings are kept
/// when their false-positive probability is below `threshold`; the rest pass
/// through untouched. Any scorer failure aborts the whole call.
pub fn prune(
    findings: &[Finding],
    sources: &BTreeMap<String, String>,
    scorer: &mut dyn Scorer,
    targeted: &TargetedSmellSet,
    threshold: f64,
    batch_size: usize,
) -> Result<PruneOutcome, PrunerError> {
    let mut instances = Vec::new();
    let mut positions = Vec::new();
    for (i, f) in findings.iter().enumerate() {
        if targeted.contains(f.smell) {
            let text = sources
                .get(&f.file_path)
                .ok_or_else(|| PrunerError::MissingSource(f.file_path.clone()))?;
            instances.push(make_instance(f, text)?);
            positions.push(i);
        }
    }

    let mut probs = Vec::with_capacity(instances.len());
    for batch in instances.chunks(batch_size.max(1)) {
        let got = scorer.score_batch(batch)?;
        if got.len() != batch.len() {
            return Err(PrunerError::CountMismatch {
                expected: batch.len(),
                got: got.len(),
            });
        }
        for (inst, p) in batch.iter().zip(&got) {
            if !(0.0..=1.0).contains(p) {
                return Err(PrunerError::OutOfRange {
                    instance: inst.id.clone(),
                    probability: *p,
                });
            }
        }
        probs.extend(got);
    }

    let mut scored: Vec<Option<f64>> = vec![None; findings.len()];
    for (pos, p) in positions.into_iter().zip(probs) {
        scored[pos] = Some(p);
    }
    let mut out = PruneOutcome::default();
    for (f, p) in findings.iter().zip(scored) {
        match p {
            None => out.kept.push(ScoredFinding::rule_only(f.clone())),
            Some(p) => {
                let sf = ScoredFinding::new(f.clone(), p, scorer.id());
                if p < threshold {
                    out.kept.push(sf);
                } else {
                    out.dropped.push(sf);
                }
            }
        }
    }
    Ok(out)
}

pub type ScoredRanking = Vec<ScoredFinding>;

/// Descending confidence, then ascending (file, line, smell).
pub fn rank_findings(mut scored: Vec<ScoredFinding>) -> ScoredRanking {
    scored.sort_by(|a, b| {
        b.smell_confidence
            .total_cmp(&a.smell_confidence)
            .then_with(|| a.finding.key().cmp(&b.finding.key()))
    });
    scored
}
