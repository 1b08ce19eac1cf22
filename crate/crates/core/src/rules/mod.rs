//! Symbolic smell detectors evaluated at every IR node.

mod config;
pub mod matching;
mod smell;

use rayon::prelude::*;

use crate::ir::{AtomicUnit, NodeRef, Project, SourceLocation, Technology, Value, ValueKind};

pub use config::{ConfigError, RuleConfig};
pub use smell::{Finding, SmellType, UnknownSmell};

use matching::{contains_word, download_extension, find_address, find_substring, find_word, http_hosts, urls, LOOPBACK_HOSTS};

fn finding(loc: &SourceLocation, tech: Technology, smell: SmellType, predicate: &str, keyword: &str) -> Finding {
    Finding {
        file_path: loc.file_path.clone(),
        line: loc.line,
        smell,
        rationale: format!("{predicate}: keyword '{keyword}'"),
        confidence: 1.0,
        technology: tech,
    }
}

/// Name, value and location of a variable or attribute.
fn assignment<'a>(node: NodeRef<'a>) -> Option<(&'a str, &'a Value, &'a SourceLocation)> {
    match node {
        NodeRef::Variable(v) => Some((&v.name, &v.value, &v.location)),
        NodeRef::Attribute(a) => Some((&a.name, &a.value, &a.location)),
        _ => None,
    }
}

/// Keyword matching runs on the innermost key of a dotted path so that the
/// reported line, which holds that key, also holds the keyword.
fn leaf_name(name: &str) -> &str {
    name.rsplit('.').next().unwrap_or(name)
}

fn literal_text(value: &Value) -> Option<&str> {
    match value.kind {
        ValueKind::String | ValueKind::Integer if !value.has_variable => Some(value.unquoted()),
        _ => None,
    }
}

pub fn check_admin_by_default(node: NodeRef<'_>, tech: Technology, config: &RuleConfig) -> Option<Finding> {
    if let Some((name, value, loc)) = assignment(node) {
        find_substring(leaf_name(name), &config.user_keywords)?;
        let admin = find_word(&value.raw_text, &config.admin_keywords)?;
        return Some(finding(loc, tech, SmellType::AdminByDefault, "isUser with admin value", admin));
    }
    let NodeRef::Atomic(unit) = node else {
        return None;
    };
    find_substring(&unit.unit_type, &config.user_keywords)?;
    unit.attributes.iter().find_map(|attr| {
        let group_like = matches!(attr.name.to_lowercase().as_str(), "group" | "groups" | "gid");
        if !group_like {
            return None;
        }
        let admin = find_word(&attr.value.raw_text, &config.admin_keywords)?;
        Some(finding(&attr.location, tech, SmellType::AdminByDefault, "user unit in admin group", admin))
    })
}

pub fn check_empty_password(node: NodeRef<'_>, tech: Technology, config: &RuleConfig) -> Option<Finding> {
    let (name, value, loc) = assignment(node)?;
    let keyword = find_substring(leaf_name(name), &config.password_keywords)?;
    let empty = value.kind == ValueKind::String && !value.has_variable && value.unquoted().is_empty();
    empty.then(|| finding(loc, tech, SmellType::EmptyPassword, "isPassword with empty string", keyword))
}

pub fn check_hard_coded_secret(node: NodeRef<'_>, tech: Technology, config: &RuleConfig) -> Option<Finding> {
    let (name, value, loc) = assignment(node)?;
    let leaf = leaf_name(name);
    let keyword = find_substring(leaf, &config.secret_keywords)
        .or_else(|| find_substring(leaf, &config.user_keywords))?;
    let literal = literal_text(value).is_some_and(|t| !t.is_empty())
        || value.literal_fallbacks().iter().any(|t| !t.is_empty());
    literal.then(|| finding(loc, tech, SmellType::HardCodedSecret, "isSecret with literal value", keyword))
}

pub fn check_missing_default_case(node: NodeRef<'_>, tech: Technology, _config: &RuleConfig) -> Option<Finding> {
    let NodeRef::Condition(cond) = node else {
        return None;
    };
    (!cond.has_default_branch).then(|| {
        finding(&cond.location, tech, SmellType::MissingDefaultCase, "isCase without isDefault", "case")
    })
}

fn has_checksum(unit: &AtomicUnit, config: &RuleConfig) -> bool {
    unit.attributes
        .iter()
        .any(|a| find_substring(&a.name, &config.checksum_attribute_names).is_some())
}

pub fn check_no_integrity_check(node: NodeRef<'_>, tech: Technology, config: &RuleConfig) -> Option<Finding> {
    let NodeRef::Atomic(unit) = node else {
        return None;
    };
    let by_extension = unit.attributes.iter().find_map(|a| {
        urls(&a.value.raw_text)
            .into_iter()
            .find_map(|u| download_extension(u, &config.download_extensions))
            .map(|ext| (a, ext))
    });
    let fetcher = config
        .download_unit_types
        .iter()
        .any(|t| unit.unit_type.eq_ignore_ascii_case(t));
    if by_extension.is_none() && !fetcher {
        return None;
    }
    if has_checksum(unit, config) {
        return None;
    }
    const PREDICATE: &str = "hasDownload without hasChecksum";
    if let Some((attr, ext)) = by_extension {
        return Some(finding(&attr.location, tech, SmellType::NoIntegrityCheck, PREDICATE, ext));
    }
    if let Some(attr) = unit.attributes.iter().find(|a| a.value.raw_text.contains("://")) {
        return Some(finding(&attr.location, tech, SmellType::NoIntegrityCheck, PREDICATE, "://"));
    }
    match unit.attributes.first() {
        Some(attr) => Some(finding(&attr.location, tech, SmellType::NoIntegrityCheck, PREDICATE, &attr.name)),
        None => Some(finding(&unit.location, tech, SmellType::NoIntegrityCheck, PREDICATE, &unit.unit_type)),
    }
}

pub fn check_suspicious_comment(node: NodeRef<'_>, tech: Technology, config: &RuleConfig) -> Option<Finding> {
    let NodeRef::Comment(comment) = node else {
        return None;
    };
    let word = find_word(&comment.text, &config.suspicious_words)?;
    Some(finding(&comment.location, tech, SmellType::SuspiciousComment, "isComment with suspicious word", word))
}

pub fn check_invalid_ip_binding(node: NodeRef<'_>, tech: Technology, config: &RuleConfig) -> Option<Finding> {
    let (_, value, loc) = assignment(node)?;
    let addr = find_address(&value.raw_text, &config.invalid_bind_addresses)?;
    Some(finding(loc, tech, SmellType::InvalidIpBinding, "isInvalidBind", addr))
}

pub fn check_http_without_tls(node: NodeRef<'_>, tech: Technology, config: &RuleConfig) -> Option<Finding> {
    let (_, value, loc) = assignment(node)?;
    let hosts = http_hosts(&value.raw_text);
    let plain = hosts
        .iter()
        .any(|h| !(config.exempt_loopback_http && LOOPBACK_HOSTS.contains(&h.as_str())));
    plain.then(|| finding(loc, tech, SmellType::HttpWithoutTls, "hasHttpUrl", "http://"))
}

pub fn check_weak_crypto(node: NodeRef<'_>, tech: Technology, config: &RuleConfig) -> Option<Finding> {
    let (name, value, loc) = assignment(node)?;
    let raw = value.raw_text.to_lowercase();
    let lname = name.to_lowercase();
    let weak = config
        .weak_crypto_names
        .iter()
        .find(|w| contains_word(&raw, w) || contains_word(&lname, w))?;
    Some(finding(loc, tech, SmellType::WeakCrypto, "isWeakCrypt", weak))
}

type Check = fn(NodeRef<'_>, Technology, &RuleConfig) -> Option<Finding>;

const CHECKS: [Check; 9] = [
    check_admin_by_default,
    check_empty_password,
    check_hard_coded_secret,
    check_missing_default_case,
    check_no_integrity_check,
    check_suspicious_comment,
    check_invalid_ip_binding,
    check_http_without_tls,
    check_weak_crypto,
];

/// Every detector at every node, as a sorted list without repeated
/// (file, line, smell) triples.
pub fn detect(project: &Project, config: &RuleConfig) -> Vec<Finding> {
    let blocks: Vec<_> = project.file_blocks().collect();
    let mut findings: Vec<Finding> = blocks
        .par_iter()
        .flat_map_iter(|block| {
            let tech = block.technology;
            block
                .iter_depth_first()
                .flat_map(move |node| CHECKS.iter().filter_map(move |check| check(node, tech, config)))
                .collect::<Vec<_>>()
        })
        .collect();
    sort_and_dedup(&mut findings);
    findings
}

/// Sorts by (file, line, smell) and keeps the first finding of each triple.
pub fn sort_and_dedup(findings: &mut Vec<Finding>) {
    findings.sort_by(|a, b| a.key().cmp(&b.key()));
    findings.dedup_by(|b, a| a.key() == b.key());
}
