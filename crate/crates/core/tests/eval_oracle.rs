use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use iacsmell::eval::{
    effort_at_recall, f1_at_loc, macro_f1, match_findings, prf1, Counts, Effort, EvalError, OracleEntry,
};
use iacsmell::ir::Technology;
use iacsmell::rules::{Finding, SmellType};


mod common;

use common::{brute_effort, brute_f1_at_loc, brute_match, finding, random_case};

const CASES: u64 = 200;

#[test]
fn match_agrees_with_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..CASES {
        let (preds, oracle) = random_case(&mut rng);
        let got = match_findings(&preds, &oracle);
        let (tp, fp, fn_) = brute_match(&preds, &oracle);
        assert_eq!((got.tp, got.fp, got.fn_), (tp, fp, fn_));
        for smell in SmellType::ALL {
            let p: Vec<Finding> = preds.iter().filter(|f| f.smell == smell).cloned().collect();
            let o: Vec<OracleEntry> = oracle.iter().filter(|e| e.smell == smell).cloned().collect();
            let (tp, fp, fn_) = brute_match(&p, &o);
            let row = got.per_smell.get(&smell).copied().unwrap_or_default();
            assert_eq!(row, Counts { tp, fp, fn_ });
        }
        let (p, r, f) = prf1(got.totals());
        let exp_p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let exp_r = tp as f64 / (tp + fn_) as f64;
        assert!((p - exp_p).abs() <= 1e-12 && (r - exp_r).abs() <= 1e-12);
        let exp_f = if tp == 0 { 0.0 } else { 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64 };
        assert!((f - exp_f).abs() <= 1e-12);
    }
}

#[test]
fn effort_agrees_with_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let targets = [(3, 5), (1, 2), (1, 1), (1, 10), (0, 1)];
    for _ in 0..CASES {
        let (preds, oracle) = random_case(&mut rng);
        let (num, den) = targets[rng.gen_range(0..targets.len())];
        let loc = rng.gen_range(1..=40);
        let got = effort_at_recall(&preds, &oracle, num as f64 / den as f64, loc).unwrap();
        match (got, brute_effort(&preds, &oracle, num, den, loc)) {
            (Effort::Reached(a), Some(b)) => assert!((a - b).abs() <= 1e-12, "{a} vs {b}"),
            (Effort::Unreached, None) => {}
            (a, b) => panic!("{a:?} vs {b:?}"),
        }
    }
}

#[test]
fn f1_at_loc_agrees_with_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let budgets = [(1, 100), (1, 10), (1, 4), (1, 2), (1, 1)];
    for _ in 0..CASES {
        let (preds, oracle) = random_case(&mut rng);
        let (num, den) = budgets[rng.gen_range(0..budgets.len())];
        let loc = rng.gen_range(1..=40);
        let got = f1_at_loc(&preds, &oracle, num as f64 / den as f64, loc).unwrap();
        let want = brute_f1_at_loc(&preds, &oracle, num, den, loc);
        assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
    }
}

#[test]
fn effort_grows_with_target_recall() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..CASES {
        let (preds, oracle) = random_case(&mut rng);
        let mut last = 0.0;
        for t in [0.1, 0.3, 0.6, 0.8, 1.0] {
            match effort_at_recall(&preds, &oracle, t, 30).unwrap() {
                Effort::Reached(e) => {
                    assert!(e >= last);
                    last = e;
                }
                Effort::Unreached => last = f64::INFINITY,
            }
        }
    }
}

#[test]
fn counts_ignore_prediction_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..CASES {
        let (mut preds, oracle) = random_case(&mut rng);
        let before = match_findings(&preds, &oracle);
        preds.shuffle(&mut rng);
        assert_eq!(match_findings(&preds, &oracle), before);
    }
}

#[test]
fn degenerate_inputs() {
    assert_eq!(prf1(Counts::default()), (0.0, 0.0, 0.0));
    assert_eq!(prf1(Counts { tp: 0, fp: 3, fn_: 2 }), (0.0, 0.0, 0.0));
    assert_eq!(prf1(Counts { tp: 2, fp: 0, fn_: 0 }), (1.0, 1.0, 1.0));
    let f = [finding("a.pp", 1, SmellType::WeakCrypto)];
    assert_eq!(effort_at_recall(&f, &[], 0.6, 10), Err(EvalError::EmptyOracle));
    let o = [OracleEntry::new("a.pp", 1, SmellType::WeakCrypto)];
    assert_eq!(effort_at_recall(&f, &o, 0.6, 0), Err(EvalError::ZeroTotalLoc));
    assert_eq!(f1_at_loc(&f, &o, 0.01, 10), Ok(1.0));
    assert_eq!(effort_at_recall(&f, &o, 0.6, 10), Ok(Effort::Reached(10.0)));
}

#[test]
fn macro_f1_of_reported_scores() {
    let f1s: BTreeMap<Technology, f64> =
        [(Technology::Ansible, 0.846), (Technology::Chef, 0.878), (Technology::Puppet, 0.768)].into();
    let m = macro_f1(&f1s).unwrap();
    assert!((m - 0.831).abs() <= 0.0005, "{m}");
    let mut missing = f1s.clone();
    missing.remove(&Technology::Chef);
    assert_eq!(macro_f1(&missing), Err(EvalError::MissingTechnology(Technology::Chef)));
}

#[test]
fn precision_of_reported_counts() {
    let (p, _, _) = prf1(Counts { tp: 61, fp: 85, fn_: 0 });
    assert!((p - 0.418).abs() <= 0.001, "{p}");
}
