use std::collections::BTreeSet;

use crate::dataset::Instance;
use crate::rules::SmellType;

/// Binary lexical features of one instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseFeatures {
    /// Namespaced tokens: `tw:`/`cw:` words and `tg:`/`cg:` character
    /// trigrams from the target line and the context window.
    pub tokens: BTreeSet<String>,
    pub smell: SmellType,
}

/// Lowercased alphanumeric runs.
pub fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
}

fn add_text(tokens: &mut BTreeSet<String>, text: &str, word_ns: &str, gram_ns: &str) {
    for w in words(text) {
        let chars: Vec<char> = w.chars().collect();
        for tri in chars.windows(3) {
            tokens.insert(format!("{gram_ns}{}", tri.iter().collect::<String>()));
        }
        tokens.insert(format!("{word_ns}{w}"));
    }
}

pub fn extract_features(instance: &Instance) -> SparseFeatures {
    let mut tokens = BTreeSet::new();
    add_text(&mut tokens, &instance.target, "tw:", "tg:");
    add_text(&mut tokens, &instance.context, "cw:", "cg:");
    SparseFeatures {
        tokens,
        smell: instance.smell,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Technology;

    fn inst(target: &str, context: &str) -> Instance {
        Instance::new(Technology::Puppet, "a.pp", 1, SmellType::EmptyPassword, target, context, "")
    }

    #[test]
    fn empty_text_has_no_tokens() {
        let f = extract_features(&inst("", ""));
        assert!(f.tokens.is_empty());
        assert_eq!(f.smell, SmellType::EmptyPassword);
    }

    #[test]
    fn words_and_trigrams() {
        let f = extract_features(&inst("password = ''", "password = ''"));
        assert!(f.tokens.contains("tw:password"));
        assert!(f.tokens.contains("tg:pas"));
        assert!(f.tokens.contains("cg:ord"));
        assert!(!f.tokens.contains("tg:d ="));
        assert_eq!(f, extract_features(&inst("password = ''", "password = ''")));
    }
}
