use std::collections::BTreeSet;
use std::path::Path;
use std::sync::OnceLock;

use proptest::prelude::*;

use iacsmell::parsers::{load_corpus, Corpus};
use iacsmell::rules::{detect, RuleConfig, SmellType};

// Every list except `checksum_attribute_names`, whose entries suppress
// NoIntegrityCheck instead of producing findings.
const ADDITIVE: [&str; 9] = [
    "user_keywords",
    "secret_keywords",
    "password_keywords",
    "admin_keywords",
    "suspicious_words",
    "weak_crypto_names",
    "download_extensions",
    "invalid_bind_addresses",
    "download_unit_types",
];

const WORDS: [&str; 18] = [
    "db", "name", "host", "port", "root", "path", "url", "mode", "ensure", "note", "sha1", "zip", "rb", "0.0.0.0",
    "exec", "file", "package", "get_url",
];

fn corpus() -> &'static Corpus {
    static CORPUS: OnceLock<Corpus> = OnceLock::new();
    CORPUS.get_or_init(|| {
        load_corpus(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus"), None).unwrap()
    })
}

fn keys(config: &RuleConfig) -> BTreeSet<(String, usize, SmellType)> {
    detect(&corpus().project, config)
        .into_iter()
        .map(|f| (f.file_path, f.line, f.smell))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adding_keywords_never_removes_findings(
        additions in prop::collection::vec((0..ADDITIVE.len(), 0..WORDS.len()), 1..4)
    ) {
        let base = RuleConfig::default();
        let mut grown = base.clone();
        for (k, w) in additions {
            prop_assert!(grown.add_keyword(ADDITIVE[k], WORDS[w]));
        }
        let before = keys(&base);
        let after = keys(&grown);
        prop_assert!(before.is_subset(&after), "lost {:?}", before.difference(&after).collect::<Vec<_>>());
    }
}

#[test]
fn emptied_lists_only_shrink_output() {
    let full = keys(&RuleConfig::default());
    for key in ADDITIVE {
        let mut config = RuleConfig::default();
        config = RuleConfig::parse(&format!("{}{key} =\n", config.to_text())).unwrap();
        assert!(keys(&config).is_subset(&full), "{key}");
    }
}
