//! Dialect front-ends and corpus loading.

mod ansible;
mod chef;
mod puppet;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::ir::{ModuleUnit, Project, UnitBlock};

pub use crate::ir::Technology;
pub use ansible::parse_ansible;
pub use chef::parse_chef;
pub use puppet::parse_puppet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRegion {
    pub start_line: usize,
    pub end_line: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ParseReport {
    pub block: UnitBlock,
    pub skipped_regions: Vec<SkippedRegion>,
    pub comment_count: usize,
    /// Recoverable problems; the parse went on past them.
    pub parse_errors: Vec<(usize, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot determine the technology of {0}")]
pub struct UnknownTechnology(pub String);

pub const EXTENSIONS: [&str; 4] = ["pp", "yml", "yaml", "rb"];

fn technology_from_extension(path: &str) -> Option<Technology> {
    let ext = Path::new(path).extension()?.to_str()?.to_ascii_lowercase();
    match ext.as_str() {
        "pp" => Some(Technology::Puppet),
        "yml" | "yaml" => Some(Technology::Ansible),
        "rb" => Some(Technology::Chef),
        _ => None,
    }
}

/// Extension first, then content sniffing; the first matching sniff wins.
pub fn detect_technology(path: &str, content: &str) -> Result<Technology, UnknownTechnology> {
    if let Some(tech) = technology_from_extension(path) {
        return Ok(tech);
    }
    sniff(content).ok_or_else(|| UnknownTechnology(path.to_string()))
}

fn sniff(content: &str) -> Option<Technology> {
    let lines: Vec<&str> = content.lines().map(str::trim_end).collect();
    let yaml_marker = lines.iter().any(|l| *l == "---" || l.starts_with("--- "));
    let task_item = lines.iter().any(|l| l.trim_start().starts_with("- name:"));
    if yaml_marker || task_item {
        return Some(Technology::Ansible);
    }
    let opens_block = lines.iter().any(|l| {
        let l = l.trim_end();
        l.ends_with(" do") || (l.contains(" do |") && l.ends_with('|'))
    });
    let closes_block = lines.iter().any(|l| l.trim() == "end");
    if (opens_block && closes_block) || content.contains("default[") {
        return Some(Technology::Chef);
    }
    if content.contains("{ '") && content.contains("=>") {
        return Some(Technology::Puppet);
    }
    None
}

pub fn parse_source(tech: Technology, content: &str, path: &str) -> Result<ParseReport, ParseError> {
    match tech {
        Technology::Puppet => parse_puppet(content, path),
        Technology::Ansible => parse_ansible(content, path),
        Technology::Chef => parse_chef(content, path),
    }
}

/// Comment openers outside string literals, counted without building an IR.
pub fn count_comments(tech: Technology, content: &str) -> usize {
    match tech {
        Technology::Puppet => puppet::count_comments(content),
        Technology::Ansible => ansible::scan_comments(content).len(),
        Technology::Chef => chef::count_comments(content),
    }
}

/// A parsed project plus the file contents it was built from.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub project: Project,
    /// Relative path to file text.
    pub sources: BTreeMap<String, String>,
    pub technologies: BTreeMap<String, Technology>,
    /// Files that could not be read or parsed, with the reason.
    pub failures: Vec<(String, String)>,
    pub skipped_regions: BTreeMap<String, Vec<SkippedRegion>>,
}

impl Corpus {
    /// Sum of line counts over every loaded file.
    pub fn total_loc(&self) -> usize {
        self.sources.values().map(|s| crate::ir::line_count(s)).sum()
    }

    pub fn loc_for(&self, tech: Technology) -> usize {
        self.sources
            .iter()
            .filter(|(path, _)| self.technologies.get(*path) == Some(&tech))
            .map(|(_, s)| crate::ir::line_count(s))
            .sum()
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Lists candidate files under `root` in sorted relative-path order.
pub fn discover_files(root: &Path) -> Result<Vec<(PathBuf, String)>, LoadError> {
    let meta = fs::metadata(root).map_err(|source| LoadError::Io {
        path: root.display().to_string(),
        source,
    })?;
    if meta.is_file() {
        let name = root
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        return Ok(vec![(root.to_path_buf(), name)]);
    }
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| LoadError::Io {
            path: root.display().to_string(),
            source: e.into(),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = relative_path(root, entry.path());
        if technology_from_extension(&rel).is_some() {
            files.push((entry.path().to_path_buf(), rel));
        }
    }
    files.sort_by(|a, b| a.1.cmp(&b.1));
    Ok(files)
}

fn relative_path(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Module grouping follows the conventional layout of each tool.
fn module_name(rel: &str) -> Option<String> {
    let parts: Vec<&str> = rel.split('/').collect();
    parts.windows(3).find_map(|w| {
        matches!(w[0], "modules" | "roles" | "cookbooks").then(|| w[1].to_string())
    })
}

/// Reads and parses every supported file below `root`.
///
/// Files are parsed in parallel and merged in path order, so the result does
/// not depend on scheduling. Unreadable or unparsable files are recorded in
/// `failures` rather than aborting the load.
pub fn load_corpus(root: &Path, force: Option<Technology>) -> Result<Corpus, LoadError> {
    let files = discover_files(root)?;
    let parsed: Vec<_> = files
        .par_iter()
        .map(|(path, rel)| {
            let content = match fs::read(path) {
                Ok(bytes) => String::from_utf8_lossy(&bytes).into_owned(),
                Err(e) => return (rel.clone(), Err(format!("unreadable: {e}")), String::new(), None),
            };
            let tech = match force.map_or_else(|| detect_technology(rel, &content), Ok) {
                Ok(t) => t,
                Err(e) => return (rel.clone(), Err(e.to_string()), content, None),
            };
            let result = parse_source(tech, &content, rel).map_err(|e| format!("parse error at {e}"));
            (rel.clone(), result, content, Some(tech))
        })
        .collect();

    let mut corpus = Corpus {
        project: Project {
            root: root.display().to_string(),
            ..Project::default()
        },
        ..Corpus::default()
    };
    let mut modules: BTreeMap<String, Vec<UnitBlock>> = BTreeMap::new();
    for (rel, result, content, tech) in parsed {
        match result {
            Ok(report) => {
                if !report.skipped_regions.is_empty() {
                    corpus.skipped_regions.insert(rel.clone(), report.skipped_regions);
                }
                match module_name(&rel) {
                    Some(m) => modules.entry(m).or_default().push(report.block),
                    None => corpus.project.blocks.push(report.block),
                }
                corpus.sources.insert(rel.clone(), content);
                if let Some(t) = tech {
                    corpus.technologies.insert(rel, t);
                }
            }
            Err(reason) => corpus.failures.push((rel, reason)),
        }
    }
    corpus.project.modules = modules
        .into_iter()
        .map(|(name, blocks)| ModuleUnit { name, blocks })
        .collect();
    Ok(corpus)
}

/// Builds a single-file corpus from in-memory text.
pub fn corpus_from_source(path: &str, content: &str, force: Option<Technology>) -> Result<Corpus, ParseError> {
    let tech = match force {
        Some(t) => t,
        None => detect_technology(path, content).map_err(|e| ParseError::new(0, e.to_string()))?,
    };
    let report = parse_source(tech, content, path)?;
    let mut corpus = Corpus::default();
    corpus.project.root = ".".into();
    corpus.project.blocks.push(report.block);
    corpus.sources.insert(path.to_string(), content.to_string());
    corpus.technologies.insert(path.to_string(), tech);
    if !report.skipped_regions.is_empty() {
        corpus.skipped_regions.insert(path.to_string(), report.skipped_regions);
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extension_rules() {
        assert_eq!(detect_technology("site.pp", ""), Ok(Technology::Puppet));
        assert_eq!(detect_technology("play.yml", ""), Ok(Technology::Ansible));
        assert_eq!(detect_technology("x/main.YAML", ""), Ok(Technology::Ansible));
        assert_eq!(detect_technology("default.rb", ""), Ok(Technology::Chef));
    }

    #[test]
    fn sniffing_without_extension() {
        assert_eq!(
            detect_technology("x.txt", "user { 'app': groups => ['sudo'] }"),
            Ok(Technology::Puppet)
        );
        assert_eq!(
            detect_technology("x", "---\n- hosts: all\n"),
            Ok(Technology::Ansible)
        );
        assert_eq!(
            detect_technology("x", "package 'git' do\n  action :install\nend\n"),
            Ok(Technology::Chef)
        );
        assert_eq!(
            detect_technology("x", "default['a']['b'] = 1\n"),
            Ok(Technology::Chef)
        );
        assert!(detect_technology("x.txt", "hello world").is_err());
    }

    #[test]
    fn module_layout() {
        assert_eq!(module_name("modules/nginx/manifests/init.pp").as_deref(), Some("nginx"));
        assert_eq!(module_name("roles/db/tasks/main.yml").as_deref(), Some("db"));
        assert_eq!(module_name("cookbooks/app/recipes/default.rb").as_deref(), Some("app"));
        assert_eq!(module_name("site.pp"), None);
    }
}
