use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use iacsmell::dataset::synthetic::separable_set;
use iacsmell::dataset::{Instance, Label};
use iacsmell::ir::Technology;
use iacsmell::pruner::{
    extract_features, loss_and_gradient, train_builtin, BuiltinModel, Encoded, TrainError, TrainParams,
};
use iacsmell::rules::SmellType;

/// Relative error with a floor on the denominator so that zero gradients
/// compare absolutely.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let (train, _) = separable_set(12, 0, 11);
    let feats: Vec<_> = train.iter().map(extract_features).collect();
    let vocab = feats.iter().flat_map(|f| f.tokens.iter().cloned());
    let mut model = BuiltinModel::zeros(vocab);
    let data: Vec<(Encoded, f64)> = feats
        .iter()
        .zip(&train)
        .map(|(f, i)| (model.encode(f), i.label.unwrap().target()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        for w in model.weights.iter_mut() {
            *w = rng.gen_range(-0.5..0.5);
        }
        model.bias = rng.gen_range(-0.5..0.5);
        let (_, grad, grad_bias) = loss_and_gradient(&model, &data);

        // one weight that is active in some example, and the bias
        let active: Vec<usize> = data.iter().flat_map(|(x, _)| x.indices.iter().copied()).collect();
        let j = active[rng.gen_range(0..active.len())];
        let mut plus = model.clone();
        plus.weights[j] += h;
        let mut minus = model.clone();
        minus.weights[j] -= h;
        let numeric = (loss_and_gradient(&plus, &data).0 - loss_and_gradient(&minus, &data).0) / (2.0 * h);
        worst = worst.max(rel_err(grad[j], numeric));

        let mut plus = model.clone();
        plus.bias += h;
        let mut minus = model.clone();
        minus.bias -= h;
        let numeric = (loss_and_gradient(&plus, &data).0 - loss_and_gradient(&minus, &data).0) / (2.0 * h);
        worst = worst.max(rel_err(grad_bias, numeric));
    }
    assert!(worst < 1e-5, "worst relative error {worst}");
}

#[test]
fn separable_set_reaches_perfect_validation_f1() {
    let (train, val) = separable_set(40, 10, 5);
    let params = TrainParams { epochs: 50, learning_rate: 0.5, seed: 3 };
    let a = train_builtin(&train, &val, params).unwrap();
    assert_eq!(a.best_val_f1, 1.0);
    assert!(a.best_epoch >= 1 && a.best_epoch <= 50);
    for inst in &val {
        let p = a.model.score(inst);
        assert_eq!(p > 0.5, inst.label == Some(Label::FP), "{} scored {p}", inst.target);
    }

    let dir = tempfile::tempdir().unwrap();
    let b = train_builtin(&train, &val, params).unwrap();
    a.model.save(&dir.path().join("a.model")).unwrap();
    b.model.save(&dir.path().join("b.model")).unwrap();
    let bytes_a = std::fs::read(dir.path().join("a.model")).unwrap();
    let bytes_b = std::fs::read(dir.path().join("b.model")).unwrap();
    assert_eq!(bytes_a, bytes_b);
    let loaded = BuiltinModel::load(&dir.path().join("a.model")).unwrap();
    assert_eq!(loaded, a.model);
}

#[test]
fn single_class_training_is_rejected() {
    let (train, _) = separable_set(10, 0, 1);
    let all_tp: Vec<Instance> = train.into_iter().map(|i| i.with_label(Label::TP)).collect();
    assert_eq!(train_builtin(&all_tp, &[], TrainParams::default()).unwrap_err(), TrainError::DegenerateData);
    assert_eq!(train_builtin(&[], &[], TrainParams::default()).unwrap_err(), TrainError::EmptyTrainingSet);
}

#[test]
fn scores_at_the_extremes() {
    let (train, _) = separable_set(2, 0, 1);
    let mut m = BuiltinModel::zeros(Vec::<String>::new());
    assert_eq!(m.score(&train[0]), 0.5);
    m.bias = 50.0;
    assert!(m.score(&train[0]) > 1.0 - 1e-15);
    m.bias = -50.0;
    assert!(m.score(&train[0]) < 1e-15);
}

/// Word and trigram sets computed character by character.
fn reference_tokens(text: &str, word_ns: &str, gram_ns: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut current = String::new();
    for c in text.chars().chain(std::iter::once(' ')) {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
            continue;
        }
        if !current.is_empty() {
            let chars: Vec<char> = current.chars().collect();
            let mut i = 0;
            while i + 3 <= chars.len() {
                out.insert(format!("{gram_ns}{}{}{}", chars[i], chars[i + 1], chars[i + 2]));
                i += 1;
            }
            out.insert(format!("{word_ns}{current}"));
            current.clear();
        }
    }
    out
}

#[test]
fn features_match_reference_tokenizer() {
    let cases = [
        ("password = ''", "password = ''"),
        ("  $DB_Password = 'Xy9'", "class a {\n  $DB_Password = 'Xy9'\n}"),
        ("url: http://example.com/a.tgz", ""),
        ("", ""),
    ];
    for (target, context) in cases {
        let inst = Instance::new(Technology::Puppet, "a.pp", 1, SmellType::HardCodedSecret, target, context, "");
        let mut expected = reference_tokens(target, "tw:", "tg:");
        expected.extend(reference_tokens(context, "cw:", "cg:"));
        assert_eq!(extract_features(&inst).tokens, expected, "{target}");
    }
    let inst = Instance::new(Technology::Puppet, "a.pp", 1, SmellType::EmptyPassword, "password = ''", "", "");
    let tokens = extract_features(&inst).tokens;
    assert!(tokens.contains("tw:password") && tokens.contains("tg:pas"));

    // empty text leaves only the smell slot active
    let m = BuiltinModel::zeros(["tw:password".to_string()]);
    let empty = Instance::new(Technology::Chef, "a.rb", 1, SmellType::WeakCrypto, "", "", "");
    assert_eq!(m.encode(&extract_features(&empty)).indices, [m.smell_offset(SmellType::WeakCrypto)]);
}
