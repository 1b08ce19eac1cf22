use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use md5::{Digest, Md5};

use super::instance::Instance;
use crate::rules::SmellType;

fn md5_of(path: &Path) -> std::io::Result<[u8; 16]> {
    let bytes = fs::read(path)?;
    Ok(Md5::digest(&bytes).into())
}

/// Drops candidates byte-identical to an oracle file and repeated candidates
/// (the first copy stays).
pub fn dedup_files(paths: &[PathBuf], test_oracle_paths: &[PathBuf]) -> std::io::Result<Vec<PathBuf>> {
    let mut seen: HashSet<[u8; 16]> = HashSet::new();
    for p in test_oracle_paths {
        seen.insert(md5_of(p)?);
    }
    let mut kept = Vec::new();
    for p in paths {
        if seen.insert(md5_of(p)?) {
            kept.push(p.clone());
        }
    }
    Ok(kept)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SnippetDedup {
    pub train: Vec<Instance>,
    pub val: Vec<Instance>,
    pub removed_train: Vec<String>,
    pub removed_val: Vec<String>,
}

/// Removes train/val snippets already claimed by a higher-priority split:
/// oracle over validation over train, earlier over later within a split.
pub fn dedup_snippets(train: Vec<Instance>, val: Vec<Instance>, oracle: &[Instance]) -> SnippetDedup {
    let mut claimed: HashSet<(String, SmellType)> = oracle.iter().map(Instance::snippet_key).collect();
    let mut out = SnippetDedup::default();
    for inst in val {
        if claimed.insert(inst.snippet_key()) {
            out.val.push(inst);
        } else {
            out.removed_val.push(inst.id);
        }
    }
    for inst in train {
        if claimed.insert(inst.snippet_key()) {
            out.train.push(inst);
        } else {
            out.removed_train.push(inst.id);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Technology;

    fn inst(target: &str, smell: SmellType) -> Instance {
        Instance::new(Technology::Puppet, "a.pp", 1, smell, target, target, "r")
    }

    #[test]
    fn priority_and_smell_in_key() {
        let oracle = [inst("$p = 'x'", SmellType::HardCodedSecret)];
        let train = vec![
            inst("$p  =  'x'", SmellType::HardCodedSecret),
            inst("$p = 'x'", SmellType::WeakCrypto),
            inst("$q = 1", SmellType::HardCodedSecret),
        ];
        let val = vec![inst(" $q = 1 ", SmellType::HardCodedSecret)];
        let out = dedup_snippets(train, val, &oracle);
        assert_eq!(out.val.len(), 1);
        assert_eq!(out.train.len(), 1);
        assert_eq!(out.train[0].smell, SmellType::WeakCrypto);
        assert_eq!(out.removed_train.len(), 2);
    }

    #[test]
    fn file_digests() {
        let dir = tempfile::tempdir().unwrap();
        let write = |name: &str, body: &str| {
            let p = dir.path().join(name);
            fs::write(&p, body).unwrap();
            p
        };
        let oracle = write("o.pp", "user { 'a': }\n");
        let same = write("c1.pp", "user { 'a': }\n");
        let differs = write("c2.pp", "user { 'b': }\n");
        let repeat = write("c3.pp", "user { 'b': }\n");
        let kept = dedup_files(&[same, differs.clone(), repeat], &[oracle]).unwrap();
        assert_eq!(kept, [differs]);
    }
}
