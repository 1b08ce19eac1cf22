//! Logistic regression over lexical features, trained with binary
//! cross-entropy where a false positive is the positive class.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::features::{extract_features, SparseFeatures};
use crate::dataset::Instance;
use crate::rules::SmellType;

pub const MODEL_VERSION: &str = "iacsmell-builtin v1";
const N_SMELLS: usize = SmellType::ALL.len();

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltinModel {
    pub feature_vocabulary: BTreeMap<String, usize>,
    /// Vocabulary weights followed by one weight per smell type.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub version: String,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot access model file {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrainError {
    #[error("training data must contain both TP and FP labels")]
    DegenerateData,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("instance {0} has no label")]
    Unlabeled(String),
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Active weight indices for one instance under a vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub indices: Vec<usize>,
}

impl BuiltinModel {
    /// All-zero parameters over the given vocabulary.
    pub fn zeros(vocabulary: impl IntoIterator<Item = String>) -> BuiltinModel {
        let tokens: BTreeSet<String> = vocabulary.into_iter().collect();
        let feature_vocabulary: BTreeMap<String, usize> =
            tokens.into_iter().enumerate().map(|(i, t)| (t, i)).collect();
        let weights = vec![0.0; feature_vocabulary.len() + N_SMELLS];
        BuiltinModel {
            feature_vocabulary,
            weights,
            bias: 0.0,
            version: MODEL_VERSION.to_string(),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.feature_vocabulary.len()
    }

    pub fn smell_offset(&self, smell: SmellType) -> usize {
        self.vocab_size() + smell.index()
    }

    /// Indices of in-vocabulary tokens plus the smell slot; unknown tokens
    /// are ignored.
    pub fn encode(&self, features: &SparseFeatures) -> Encoded {
        let mut indices: Vec<usize> = features
            .tokens
            .iter()
            .filter_map(|t| self.feature_vocabulary.get(t).copied())
            .collect();
        indices.push(self.smell_offset(features.smell));
        Encoded { indices }
    }

    pub fn logit(&self, x: &Encoded) -> f64 {
        self.bias + x.indices.iter().map(|&i| self.weights[i]).sum::<f64>()
    }

    /// Probability that the instance is a false positive.
    pub fn score(&self, instance: &Instance) -> f64 {
        sigmoid(self.logit(&self.encode(&extract_features(instance))))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} vocab={} smells={}", self.version, self.vocab_size(), N_SMELLS);
        let _ = writeln!(out, "bias {}", self.bias);
        for (token, idx) in &self.feature_vocabulary {
            let _ = writeln!(out, "vocab {idx} {token}");
        }
        for idx in 0..self.vocab_size() {
            let _ = writeln!(out, "weight {idx} {}", self.weights[idx]);
        }
        for smell in SmellType::ALL {
            let _ = writeln!(out, "smell {} {}", smell.name(), self.weights[self.smell_offset(smell)]);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<BuiltinModel, ModelError> {
        let err = |line: usize, message: String| ModelError::Format { line, message };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty model file".into()))?;
        let rest = header
            .strip_prefix(MODEL_VERSION)
            .ok_or_else(|| err(1, format!("expected header '{MODEL_VERSION} ...'")))?;
        let mut vocab_size = None;
        let mut smells = None;
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("vocab", v)) => vocab_size = v.parse::<usize>().ok(),
                Some(("smells", v)) => smells = v.parse::<usize>().ok(),
                _ => return Err(err(1, format!("unexpected header field '{field}'"))),
            }
        }
        let vocab_size = vocab_size.ok_or_else(|| err(1, "missing vocab size".into()))?;
        if smells != Some(N_SMELLS) {
            return Err(err(1, format!("expected smells={N_SMELLS}")));
        }
        let number = |line: usize, s: &str| -> Result<f64, ModelError> {
            let v: f64 = s.parse().map_err(|_| err(line, format!("bad number '{s}'")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(line, format!("non-finite number '{s}'")))
            }
        };
        let mut model = BuiltinModel {
            feature_vocabulary: BTreeMap::new(),
            weights: vec![0.0; vocab_size + N_SMELLS],
            bias: 0.0,
            version: MODEL_VERSION.to_string(),
        };
        let mut seen_bias = false;
        let mut seen_weights = vec![false; vocab_size + N_SMELLS];
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, ' ');
            let kind = parts.next().unwrap_or("");
            match kind {
                "bias" => {
                    model.bias = number(n, parts.next().unwrap_or(""))?;
                    seen_bias = true;
                }
                "vocab" | "weight" => {
                    let idx: usize = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .filter(|i| *i < vocab_size)
                        .ok_or_else(|| err(n, "bad or out-of-range index".into()))?;
                    let payload = parts.next().ok_or_else(|| err(n, "missing value".into()))?;
                    if kind == "vocab" {
                        if model.feature_vocabulary.insert(payload.to_string(), idx).is_some() {
                            return Err(err(n, format!("duplicate token '{payload}'")));
                        }
                    } else {
                        model.weights[idx] = number(n, payload)?;
                        seen_weights[idx] = true;
                    }
                }
                "smell" => {
                    let smell: SmellType = parts
                        .next()
                        .unwrap_or("")
                        .parse()
                        .map_err(|e| err(n, format!("{e}")))?;
                    let slot = vocab_size + smell.index();
                    model.weights[slot] = number(n, parts.next().unwrap_or(""))?;
                    seen_weights[slot] = true;
                }
                other => return Err(err(n, format!("unknown record '{other}'"))),
            }
        }
        let distinct: BTreeSet<usize> = model.feature_vocabulary.values().copied().collect();
        if !seen_bias || model.feature_vocabulary.len() != vocab_size || distinct.len() != vocab_size {
            return Err(err(0, "incomplete model: bias or vocabulary missing".into()));
        }
        if seen_weights.iter().any(|s| !s) {
            return Err(err(0, "incomplete model: some weights missing".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        fs::write(path, self.to_text()).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<BuiltinModel, ModelError> {
        let text = fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        BuiltinModel::from_text(&text)
    }
}

/// Mean binary cross-entropy over `data` and its gradient with respect to
/// the weights and the bias. Targets are 1 for FP and 0 for TP.
pub fn loss_and_gradient(model: &BuiltinModel, data: &[(Encoded, f64)]) -> (f64, Vec<f64>, f64) {
    let mut grad = vec![0.0; model.weights.len()];
    let mut grad_bias = 0.0;
    let mut loss = 0.0;
    if data.is_empty() {
        return (0.0, grad, 0.0);
    }
    let scale = 1.0 / data.len() as f64;
    for (x, y) in data {
        let z = model.logit(x);
        loss += softplus(z) - y * z;
        let dz = (sigmoid(z) - y) * scale;
        for &i in &x.indices {
            grad[i] += dz;
        }
        grad_bias += dz;
    }
    (loss * scale, grad, grad_bias)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            epochs: 50,
            learning_rate: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub model: BuiltinModel,
    /// 1-based epoch of the selected snapshot.
    pub best_epoch: usize,
    pub best_val_f1: f64,
    pub history: Vec<EpochStats>,
}

fn labeled(instances: &[Instance]) -> Result<Vec<(&Instance, f64)>, TrainError> {
    instances
        .iter()
        .map(|i| match i.label {
            Some(l) => Ok((i, l.target())),
            None => Err(TrainError::Unlabeled(i.id.clone())),
        })
        .collect()
}

/// F1 of the FP class at threshold 0.5.
pub fn fp_f1(model: &BuiltinModel, data: &[(Encoded, f64)]) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (x, y) in data {
        let predicted_fp = sigmoid(model.logit(x)) >= 0.5;
        match (predicted_fp, *y == 1.0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    crate::eval::prf1(crate::eval::Counts { tp, fp, fn_ }).2
}

/// Per-example stochastic gradient descent on the cross-entropy loss.
///
/// The vocabulary is the set of tokens seen in `train`. After each epoch the
/// model is scored on `val` (on `train` when `val` is empty) and the snapshot
/// with the highest FP-class F1 is kept, the earliest one on ties.
pub fn train_builtin(train: &[Instance], val: &[Instance], params: TrainParams) -> Result<TrainReport, TrainError> {
    if train.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    let train_l = labeled(train)?;
    let val_l = labeled(val)?;
    let positives = train_l.iter().filter(|(_, y)| *y == 1.0).count();
    if positives == 0 || positives == train_l.len() {
        return Err(TrainError::DegenerateData);
    }
    let train_feats: Vec<SparseFeatures> = train_l.iter().map(|(i, _)| extract_features(i)).collect();
    let mut model = BuiltinModel::zeros(train_feats.iter().flat_map(|f| f.tokens.iter().cloned()));
    let train_x: Vec<(Encoded, f64)> = train_feats
        .iter()
        .zip(&train_l)
        .map(|(f, (_, y))| (model.encode(f), *y))
        .collect();
    let val_x: Vec<(Encoded, f64)> = val_l
        .iter()
        .map(|(i, y)| (model.encode(&extract_features(i)), *y))
        .collect();
    let select_on = if val_x.is_empty() { &train_x } else { &val_x };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    let mut best: Option<(f64, usize, BuiltinModel)> = None;
    let mut history = Vec::new();
    for epoch in 1..=params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (x, y) = &train_x[i];
            let dz = sigmoid(model.logit(x)) - y;
            let step = params.learning_rate * dz;
            for &j in &x.indices {
                model.weights[j] -= step;
            }
            model.bias -= step;
        }
        let (train_loss, _, _) = loss_and_gradient(&model, &train_x);
        let val_f1 = fp_f1(&model, select_on);
        history.push(EpochStats {
            epoch,
            train_loss,
            val_f1,
        });
        if best.as_ref().is_none_or(|(f, _, _)| val_f1 > *f) {
            best = Some((val_f1, epoch, model.clone()));
        }
    }
    let (best_val_f1, best_epoch, model) = best.unwrap_or((fp_f1(&model, select_on), 0, model));
    Ok(TrainReport {
        model,
        best_epoch,
        best_val_f1,
        history,
    })
}
