mod common;

use iacsmell::parsers::corpus_from_source;
use iacsmell::rules::{detect, RuleConfig, SmellType};

fn smells(path: &str, src: &str) -> Vec<(usize, SmellType)> {
    let corpus = corpus_from_source(path, src, None).expect("parses");
    detect(&corpus.project, &RuleConfig::default())
        .into_iter()
        .map(|f| (f.line, f.smell))
        .collect()
}

#[test]
fn catalog_examples_yield_their_smell() {
    for (path, src, named, all) in common::CATALOG {
        let line = src.lines().count();
        let found = smells(path, src);
        assert!(found.contains(&(line, named)), "{src}: {found:?}");
        let expected: Vec<_> = all.iter().map(|s| (line, *s)).collect();
        assert_eq!(found, expected, "{src}");
    }
}

#[test]
fn download_smells_separate_when_only_one_condition_holds() {
    use SmellType::*;
    assert_eq!(
        smells("a.yml", "- get_url: url=https://ex.com/pkg.rpm dest=/tmp/pkg.rpm\n"),
        [(1, NoIntegrityCheck)]
    );
    assert_eq!(smells("a.yml", "- uri: url=http://ex.com/status\n"), [(1, HttpWithoutTls)]);
}

#[test]
fn lookup_fallback_is_flagged() {
    let found = smells("init.pp", "$db_user = hiera('user', 'ironic')\n");
    assert_eq!(found, [(1, SmellType::HardCodedSecret)]);
}
