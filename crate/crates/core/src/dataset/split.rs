use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::instance::Instance;
use crate::ir::Technology;
use crate::rules::SmellType;

pub type Stratum = (Technology, SmellType);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_ratio: usize,
    pub val_ratio: usize,
    /// Total instances wanted per stratum; strata without an entry use their
    /// whole pool.
    pub per_technology_targets: BTreeMap<Stratum, usize>,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_ratio: 8,
            val_ratio: 1,
            per_technology_targets: BTreeMap::new(),
        }
    }
}

impl SplitSpec {
    /// (train, val) targets for a stratum whose total target is `total`.
    pub fn targets_for(&self, total: usize) -> (usize, usize) {
        let parts = self.train_ratio + self.val_ratio;
        let val = (total * self.val_ratio).checked_div(parts).unwrap_or(0);
        (total - val, val)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Shortfall {
    pub technology: Technology,
    pub smell: SmellType,
    pub train_missing: usize,
    pub val_missing: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitOutcome {
    pub train: Vec<Instance>,
    pub val: Vec<Instance>,
    /// Ids dropped as duplicates, in the order they were dropped.
    pub removed: Vec<String>,
    pub shortfalls: Vec<Shortfall>,
}

struct Pool {
    candidates: Vec<Instance>,
    next: usize,
    train_target: usize,
    val_target: usize,
    train: Vec<Instance>,
    val: Vec<Instance>,
}

/// Stratified 8:1 split with snippet deduplication and backfilling.
///
/// Each (technology, smell) pool is shuffled with a generator seeded by
/// `seed`, strata in sorted order. Validation slots are filled before train
/// slots. A drawn instance whose snippet key is already held by the oracle,
/// by validation or (for train draws) by an earlier train instance is
/// dropped and the slot is refilled from the same pool, until every target is
/// met or the pool runs out.
pub fn make_splits(instances: &[Instance], spec: &SplitSpec, seed: u64, oracle: &[Instance]) -> SplitOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grouped: BTreeMap<Stratum, Vec<Instance>> = BTreeMap::new();
    for inst in instances {
        grouped.entry((inst.technology, inst.smell)).or_default().push(inst.clone());
    }
    for stratum in spec.per_technology_targets.keys() {
        grouped.entry(*stratum).or_default();
    }
    let mut pools: BTreeMap<Stratum, Pool> = BTreeMap::new();
    for (stratum, mut candidates) in grouped {
        candidates.shuffle(&mut rng);
        let total = spec
            .per_technology_targets
            .get(&stratum)
            .copied()
            .unwrap_or(candidates.len());
        let (train_target, val_target) = spec.targets_for(total);
        pools.insert(
            stratum,
            Pool {
                candidates,
                next: 0,
                train_target,
                val_target,
                train: Vec::new(),
                val: Vec::new(),
            },
        );
    }

    let oracle_keys: HashSet<_> = oracle.iter().map(Instance::snippet_key).collect();
    let mut removed = Vec::new();
    // validation has priority, so it is filled across all strata first
    let mut val_keys = HashSet::new();
    for pool in pools.values_mut() {
        while pool.val.len() < pool.val_target && pool.next < pool.candidates.len() {
            let inst = pool.candidates[pool.next].clone();
            pool.next += 1;
            let key = inst.snippet_key();
            if oracle_keys.contains(&key) || !val_keys.insert(key) {
                removed.push(inst.id);
            } else {
                pool.val.push(inst);
            }
        }
    }
    let mut train_keys = HashSet::new();
    for pool in pools.values_mut() {
        while pool.train.len() < pool.train_target && pool.next < pool.candidates.len() {
            let inst = pool.candidates[pool.next].clone();
            pool.next += 1;
            let key = inst.snippet_key();
            if oracle_keys.contains(&key) || val_keys.contains(&key) || !train_keys.insert(key) {
                removed.push(inst.id);
            } else {
                pool.train.push(inst);
            }
        }
    }

    let mut out = SplitOutcome {
        removed,
        ..SplitOutcome::default()
    };
    for ((technology, smell), pool) in pools {
        let train_missing = pool.train_target - pool.train.len();
        let val_missing = pool.val_target - pool.val.len();
        if train_missing > 0 || val_missing > 0 {
            out.shortfalls.push(Shortfall {
                technology,
                smell,
                train_missing,
                val_missing,
            });
        }
        out.train.extend(pool.train);
        out.val.extend(pool.val);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(n: usize) -> Vec<Instance> {
        (0..n)
            .map(|i| {
                Instance::new(
                    Technology::Ansible,
                    "p.yml",
                    i + 1,
                    SmellType::HardCodedSecret,
                    format!("password: v{i}"),
                    "",
                    "r",
                )
            })
            .collect()
    }

    #[test]
    fn nine_split_eight_to_one() {
        let out = make_splits(&pool(9), &SplitSpec::default(), 7, &[]);
        assert_eq!((out.train.len(), out.val.len()), (8, 1));
        assert!(out.shortfalls.is_empty());
    }

    #[test]
    fn empty_stratum_reports_shortfall() {
        let mut spec = SplitSpec::default();
        spec.per_technology_targets
            .insert((Technology::Chef, SmellType::WeakCrypto), 9);
        let out = make_splits(&[], &spec, 1, &[]);
        assert!(out.train.is_empty() && out.val.is_empty());
        assert_eq!(
            out.shortfalls,
            [Shortfall {
                technology: Technology::Chef,
                smell: SmellType::WeakCrypto,
                train_missing: 8,
                val_missing: 1
            }]
        );
    }

    #[test]
    fn seeded_runs_agree() {
        let a = make_splits(&pool(30), &SplitSpec::default(), 3, &[]);
        let b = make_splits(&pool(30), &SplitSpec::default(), 3, &[]);
        assert_eq!(a, b);
    }
}
