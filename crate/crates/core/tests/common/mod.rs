//! Helpers shared by several test targets.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use iacsmell::dataset::{instance_id, Instance};
use iacsmell::eval::OracleEntry;
use iacsmell::ir::Technology;
use iacsmell::rules::{Finding, SmellType};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// (path, snippet, named smell, every smell expected on the snippet's last line)
pub type CatalogCase = (&'static str, &'static str, SmellType, &'static [SmellType]);

pub const CATALOG: [CatalogCase; 9] = {
    use SmellType::*;
    [
        ("a.pp", "user { 'app': groups => ['sudo'] }\n", AdminByDefault, &[AdminByDefault]),
        ("a.yml", "vars:\n  db_password: \"\"\n", EmptyPassword, &[EmptyPassword]),
        ("a.rb", "default['db']['password'] = \"P@ssw0rd!\"\n", HardCodedSecret, &[HardCodedSecret]),
        ("a.pp", "case $osfamily { 'Debian': {...} }\n", MissingDefaultCase, &[MissingDefaultCase]),
        (
            "a.yml",
            "- get_url: url=http://ex.com/pkg.rpm dest=/tmp/pkg.rpm\n",
            NoIntegrityCheck,
            &[NoIntegrityCheck, HttpWithoutTls],
        ),
        ("a.pp", "# TODO: temporary insecure rule\n", SuspiciousComment, &[SuspiciousComment]),
        ("a.yml", "listen_address: 0.0.0.0\n", InvalidIpBinding, &[InvalidIpBinding]),
        ("a.yml", "- get_url: url=http://ex.com/file.tgz\n", HttpWithoutTls, &[NoIntegrityCheck, HttpWithoutTls]),
        ("a.pp", "file { '/tmp/x': checksum => 'md5' }\n", WeakCrypto, &[WeakCrypto]),
    ]
};

pub fn finding(file: &str, line: usize, smell: SmellType) -> Finding {
    Finding {
        file_path: file.into(),
        line,
        smell,
        rationale: String::new(),
        confidence: 1.0,
        technology: Technology::Puppet,
    }
}

/// Up to 50 predictions and 1 to 20 oracle entries over a small key space,
/// so that hits, repeats and shared lines are common.
pub fn random_case(rng: &mut ChaCha8Rng) -> (Vec<Finding>, Vec<OracleEntry>) {
    let files = ["a.pp", "b.pp", "c.pp"];
    let smells = &SmellType::ALL[..4];
    let n_pred = rng.gen_range(0..=50);
    let n_oracle = rng.gen_range(1..=20);
    let preds = (0..n_pred)
        .map(|_| finding(files[rng.gen_range(0..3)], rng.gen_range(1..=6), smells[rng.gen_range(0..4)]))
        .collect();
    let oracle = (0..n_oracle)
        .map(|_| OracleEntry::new(files[rng.gen_range(0..3)], rng.gen_range(1..=6), smells[rng.gen_range(0..4)]))
        .collect();
    (preds, oracle)
}

fn same_key(f: &Finding, e: &OracleEntry) -> bool {
    f.file_path == e.file_path && f.line == e.line && f.smell == e.smell
}

/// Walks predictions in order, consuming the first unused equal oracle entry.
/// Returns (tp, fp, fn).
pub fn brute_match(preds: &[Finding], oracle: &[OracleEntry]) -> (usize, usize, usize) {
    let mut used = vec![false; oracle.len()];
    let (mut tp, mut fp) = (0, 0);
    for p in preds {
        match (0..oracle.len()).find(|&i| !used[i] && same_key(p, &oracle[i])) {
            Some(i) => {
                used[i] = true;
                tp += 1;
            }
            None => fp += 1,
        }
    }
    (tp, fp, used.iter().filter(|u| !**u).count())
}

pub fn distinct_lines(preds: &[Finding]) -> usize {
    let mut seen: Vec<(&str, usize)> = Vec::new();
    for p in preds {
        if !seen.contains(&(p.file_path.as_str(), p.line)) {
            seen.push((p.file_path.as_str(), p.line));
        }
    }
    seen.len()
}

/// Shortest prefix matching at least ceil(num/den * |oracle|) entries.
pub fn brute_effort(preds: &[Finding], oracle: &[OracleEntry], num: usize, den: usize, loc: usize) -> Option<f64> {
    let needed = (num * oracle.len()).div_ceil(den);
    (0..=preds.len())
        .find(|&k| brute_match(&preds[..k], oracle).0 >= needed)
        .map(|k| 100.0 * distinct_lines(&preds[..k]) as f64 / loc as f64)
}

/// Longest prefix whose distinct lines fit in floor(num/den * loc), at least one.
pub fn brute_f1_at_loc(preds: &[Finding], oracle: &[OracleEntry], num: usize, den: usize, loc: usize) -> f64 {
    let budget = (num * loc / den).max(1);
    let k = (0..=preds.len()).rev().find(|&k| distinct_lines(&preds[..k]) <= budget).unwrap();
    let (tp, fp, _) = brute_match(&preds[..k], oracle);
    let fn_ = oracle.len() - tp;
    if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

pub const HARD: SmellType = SmellType::HardCodedSecret;
pub const WEAK: SmellType = SmellType::WeakCrypto;

fn inst(tech: Technology, smell: SmellType, target: &str) -> Instance {
    Instance::new(tech, "pool", 1, smell, target, target, "r")
}

/// 30 instances in two strata, with the oracle and the sorted ids a split
/// must remove.
///
/// Puppet/HardCodedSecret (18): 14 fresh snippets, 2 whitespace copies of
/// fresh ones, 2 snippets already in the oracle.
/// Ansible/WeakCrypto (12): 11 fresh snippets (one shares its text with a
/// Puppet snippet but not its smell), 1 whitespace copy.
pub fn toy_pool() -> (Vec<Instance>, Vec<Instance>, Vec<String>) {
    let mut pool = Vec::new();
    for i in 0..14 {
        pool.push(inst(Technology::Puppet, HARD, &format!("$secret_{i} = 'v{i}'")));
    }
    pool.push(inst(Technology::Puppet, HARD, "  $secret_3   =  'v3'"));
    pool.push(inst(Technology::Puppet, HARD, "$secret_9 =\t'v9' "));
    pool.push(inst(Technology::Puppet, HARD, "$oracle_a = 'x'"));
    pool.push(inst(Technology::Puppet, HARD, "$oracle_b   = 'y'"));
    for i in 0..10 {
        pool.push(inst(Technology::Ansible, WEAK, &format!("checksum: md5:{i}")));
    }
    pool.push(inst(Technology::Ansible, WEAK, "$secret_0 = 'v0'"));
    pool.push(inst(Technology::Ansible, WEAK, "checksum:   md5:4"));
    assert_eq!(pool.len(), 30);

    let oracle = vec![
        inst(Technology::Puppet, HARD, "$oracle_a = 'x'"),
        inst(Technology::Chef, HARD, "$oracle_b = 'y'"),
    ];
    let mut removed = vec![
        instance_id("$secret_3 = 'v3'", HARD),
        instance_id("$secret_9 = 'v9'", HARD),
        instance_id("$oracle_a = 'x'", HARD),
        instance_id("$oracle_b = 'y'", HARD),
        instance_id("checksum: md5:4", WEAK),
    ];
    removed.sort();
    (pool, oracle, removed)
}
