//! Technology-agnostic intermediate representation.
//!
//! Every front-end lowers its dialect into the same tree: a [`Project`] holds
//! [`ModuleUnit`]s and loose [`UnitBlock`]s, a block holds atomic units
//! (resources, tasks), variables, attributes, conditions and comments. Rules
//! never look at dialect syntax directly, only at this tree.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The three supported configuration dialects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Technology {
    Puppet,
    Ansible,
    Chef,
}

impl Technology {
    pub const ALL: [Technology; 3] = [Technology::Puppet, Technology::Ansible, Technology::Chef];

    pub fn name(self) -> &'static str {
        match self {
            Technology::Puppet => "Puppet",
            Technology::Ansible => "Ansible",
            Technology::Chef => "Chef",
        }
    }

    /// Case-insensitive lookup by name.
    pub fn from_name(name: &str) -> Option<Technology> {
        Technology::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(name.trim()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown technology '{0}' (expected Puppet, Ansible or Chef)")]
pub struct UnknownTechnologyName(pub String);

impl std::str::FromStr for Technology {
    type Err = UnknownTechnologyName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Technology::from_name(s).ok_or_else(|| UnknownTechnologyName(s.to_string()))
    }
}

impl fmt::Display for Technology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SourceLocation {
    /// Path relative to the project root, forward slashes.
    pub file_path: String,
    /// 1-based.
    pub line: usize,
    /// 1-based, 0 when unknown.
    pub column: usize,
}

impl SourceLocation {
    pub fn new(file_path: impl Into<String>, line: usize, column: usize) -> Self {
        SourceLocation {
            file_path: file_path.into(),
            line,
            column,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueKind {
    String,
    Integer,
    Boolean,
    Reference,
    Null,
}

/// A right-hand side as written in the source.
///
/// `raw_text` is kept verbatim (quotes included) so rules can quote evidence
/// back to the user.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Value {
    pub kind: ValueKind,
    pub raw_text: String,
    pub has_variable: bool,
}

impl Value {
    pub fn new(kind: ValueKind, raw_text: impl Into<String>, has_variable: bool) -> Self {
        Value {
            kind,
            raw_text: raw_text.into(),
            // a reference always points at something else
            has_variable: has_variable || kind == ValueKind::Reference,
        }
    }

    pub fn null() -> Self {
        Value::new(ValueKind::Null, "", false)
    }

    /// The raw text with one layer of matching quotes removed.
    pub fn unquoted(&self) -> &str {
        strip_quotes(self.raw_text.trim())
    }

    /// Literal string arguments after the first one in a function-call
    /// reference such as `hiera('user', 'ironic')`.
    ///
    /// Lookup helpers take a key first and a fallback default afterwards, so
    /// the trailing literals are what would end up in the configuration when
    /// the lookup misses.
    pub fn literal_fallbacks(&self) -> Vec<&str> {
        if self.kind != ValueKind::Reference {
            return Vec::new();
        }
        let text = self.raw_text.trim();
        let Some(open) = text.find('(') else {
            return Vec::new();
        };
        let Some(close) = text.rfind(')') else {
            return Vec::new();
        };
        if close <= open {
            return Vec::new();
        }
        split_top_level(&text[open + 1..close], ',')
            .into_iter()
            .skip(1)
            .map(str::trim)
            .filter(|arg| is_quoted(arg))
            .map(strip_quotes)
            .collect()
    }
}

/// Removes one pair of matching single or double quotes.
pub fn strip_quotes(text: &str) -> &str {
    if is_quoted(text) {
        &text[1..text.len() - 1]
    } else {
        text
    }
}

fn is_quoted(text: &str) -> bool {
    let bytes = text.as_bytes();
    bytes.len() >= 2
        && (bytes[0] == b'\'' || bytes[0] == b'"')
        && bytes[bytes.len() - 1] == bytes[0]
}

/// Splits on `sep` outside brackets and quotes.
pub(crate) fn split_top_level(text: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' => quote = Some(c),
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            c if c == sep && depth == 0 => {
                parts.push(&text[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    parts.push(&text[start..]);
    parts
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    pub name: String,
    pub value: Value,
    pub location: SourceLocation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    /// Name without sigils; nested keys are joined with `.`.
    pub name: String,
    pub value: Value,
    pub location: SourceLocation,
}

/// The smallest actionable element: one resource or one task.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicUnit {
    pub unit_type: String,
    pub title: String,
    pub attributes: Vec<Attribute>,
    pub location: SourceLocation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub guard: String,
    pub body: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionBlock {
    pub subject: Value,
    pub branches: Vec<Branch>,
    pub has_default_branch: bool,
    pub location: SourceLocation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comment {
    pub text: String,
    pub location: SourceLocation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockKind {
    Script,
    Class,
    Recipe,
    Play,
    Role,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitBlock {
    pub name: String,
    pub kind: BlockKind,
    pub children: Vec<Node>,
    pub technology: Technology,
    pub location: SourceLocation,
}

impl UnitBlock {
    pub fn new(
        name: impl Into<String>,
        kind: BlockKind,
        technology: Technology,
        location: SourceLocation,
    ) -> Self {
        UnitBlock {
            name: name.into(),
            kind,
            children: Vec::new(),
            technology,
            location,
        }
    }

    /// Pre-order traversal of this block and everything below it.
    pub fn iter_depth_first(&self) -> DepthFirst<'_> {
        DepthFirst {
            stack: vec![NodeRef::Block(self)],
        }
    }
}

/// A child of a unit block or a condition branch.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Atomic(AtomicUnit),
    Variable(Variable),
    Attribute(Attribute),
    Condition(ConditionBlock),
    Comment(Comment),
    Block(UnitBlock),
}

impl Node {
    pub fn location(&self) -> &SourceLocation {
        match self {
            Node::Atomic(n) => &n.location,
            Node::Variable(n) => &n.location,
            Node::Attribute(n) => &n.location,
            Node::Condition(n) => &n.location,
            Node::Comment(n) => &n.location,
            Node::Block(n) => &n.location,
        }
    }

    pub fn as_ref(&self) -> NodeRef<'_> {
        match self {
            Node::Atomic(n) => NodeRef::Atomic(n),
            Node::Variable(n) => NodeRef::Variable(n),
            Node::Attribute(n) => NodeRef::Attribute(n),
            Node::Condition(n) => NodeRef::Condition(n),
            Node::Comment(n) => NodeRef::Comment(n),
            Node::Block(n) => NodeRef::Block(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleUnit {
    pub name: String,
    pub blocks: Vec<UnitBlock>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Project {
    pub root: String,
    pub modules: Vec<ModuleUnit>,
    pub blocks: Vec<UnitBlock>,
}

impl Project {
    /// All file-level blocks, module blocks first.
    pub fn file_blocks(&self) -> impl Iterator<Item = &UnitBlock> {
        self.modules
            .iter()
            .flat_map(|m| m.blocks.iter())
            .chain(self.blocks.iter())
    }
}

/// Borrowed view of any IR node, as yielded by traversal.
#[derive(Debug, Clone, Copy)]
pub enum NodeRef<'a> {
    Module(&'a ModuleUnit),
    Block(&'a UnitBlock),
    Atomic(&'a AtomicUnit),
    Attribute(&'a Attribute),
    Variable(&'a Variable),
    Condition(&'a ConditionBlock),
    Comment(&'a Comment),
}

impl<'a> NodeRef<'a> {
    /// `None` only for modules, which span several files.
    pub fn location(&self) -> Option<&'a SourceLocation> {
        match *self {
            NodeRef::Module(_) => None,
            NodeRef::Block(n) => Some(&n.location),
            NodeRef::Atomic(n) => Some(&n.location),
            NodeRef::Attribute(n) => Some(&n.location),
            NodeRef::Variable(n) => Some(&n.location),
            NodeRef::Condition(n) => Some(&n.location),
            NodeRef::Comment(n) => Some(&n.location),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            NodeRef::Module(_) => "module",
            NodeRef::Block(_) => "unit_block",
            NodeRef::Atomic(_) => "atomic_unit",
            NodeRef::Attribute(_) => "attribute",
            NodeRef::Variable(_) => "variable",
            NodeRef::Condition(_) => "condition",
            NodeRef::Comment(_) => "comment",
        }
    }

    fn push_children(&self, stack: &mut Vec<NodeRef<'a>>) {
        // reversed so the first child is popped first
        match *self {
            NodeRef::Module(m) => stack.extend(m.blocks.iter().rev().map(NodeRef::Block)),
            NodeRef::Block(b) => stack.extend(b.children.iter().rev().map(Node::as_ref)),
            NodeRef::Atomic(a) => stack.extend(a.attributes.iter().rev().map(NodeRef::Attribute)),
            NodeRef::Condition(c) => {
                for branch in c.branches.iter().rev() {
                    stack.extend(branch.body.iter().rev().map(Node::as_ref));
                }
            }
            NodeRef::Attribute(_) | NodeRef::Variable(_) | NodeRef::Comment(_) => {}
        }
    }
}

/// Pre-order iterator over IR nodes.
pub struct DepthFirst<'a> {
    stack: Vec<NodeRef<'a>>,
}

impl<'a> Iterator for DepthFirst<'a> {
    type Item = NodeRef<'a>;

    fn next(&mut self) -> Option<NodeRef<'a>> {
        let node = self.stack.pop()?;
        node.push_children(&mut self.stack);
        Some(node)
    }
}

/// Visits modules (each followed by its blocks) and then loose blocks, every
/// node before its children, siblings in source order.
pub fn iterate_depth_first(project: &Project) -> DepthFirst<'_> {
    let mut stack: Vec<NodeRef<'_>> = Vec::new();
    stack.extend(project.blocks.iter().rev().map(NodeRef::Block));
    stack.extend(project.modules.iter().rev().map(NodeRef::Module));
    DepthFirst { stack }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line} is outside {file_path} ({line_count} lines)")]
pub struct LocationError {
    pub file_path: String,
    pub line: usize,
    pub line_count: usize,
}

/// Returns line `line` (1-based) of `source` without its terminator.
pub fn line_at(source: &str, line: usize) -> Option<&str> {
    if line == 0 {
        return None;
    }
    source
        .split('\n')
        .nth(line - 1)
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        // a trailing newline does not open another line
        .filter(|_| line <= line_count(source))
}

/// Number of lines as an editor would count them.
pub fn line_count(source: &str) -> usize {
    if source.is_empty() {
        0
    } else {
        source.split('\n').count() - usize::from(source.ends_with('\n'))
    }
}

pub fn node_line_text(node: NodeRef<'_>, source: &str) -> Result<String, LocationError> {
    let location = node.location().ok_or_else(|| LocationError {
        file_path: String::new(),
        line: 0,
        line_count: line_count(source),
    })?;
    line_at(source, location.line)
        .map(str::to_owned)
        .ok_or_else(|| LocationError {
            file_path: location.file_path.clone(),
            line: location.line,
            line_count: line_count(source),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loc(line: usize) -> SourceLocation {
        SourceLocation::new("a.pp", line, 1)
    }

    fn attr(name: &str, line: usize) -> Attribute {
        Attribute {
            name: name.into(),
            value: Value::new(ValueKind::String, "'x'", false),
            location: loc(line),
        }
    }

    fn sample_block() -> UnitBlock {
        let mut block = UnitBlock::new("a", BlockKind::Script, Technology::Puppet, loc(1));
        block.children.push(Node::Atomic(AtomicUnit {
            unit_type: "file".into(),
            title: "/tmp/x".into(),
            attributes: vec![attr("owner", 2), attr("mode", 3)],
            location: loc(1),
        }));
        block
    }

    #[test]
    fn empty_project_yields_nothing() {
        assert_eq!(iterate_depth_first(&Project::default()).count(), 0);
    }

    #[test]
    fn block_then_unit_then_attributes() {
        let project = Project {
            root: ".".into(),
            modules: vec![],
            blocks: vec![sample_block()],
        };
        let kinds: Vec<_> = iterate_depth_first(&project).map(|n| n.kind_name()).collect();
        assert_eq!(kinds, ["unit_block", "atomic_unit", "attribute", "attribute"]);
        let names: Vec<_> = iterate_depth_first(&project)
            .filter_map(|n| match n {
                NodeRef::Attribute(a) => Some(a.name.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(names, ["owner", "mode"]);
    }

    #[test]
    fn modules_come_before_loose_blocks() {
        let project = Project {
            root: ".".into(),
            modules: vec![ModuleUnit {
                name: "m".into(),
                blocks: vec![sample_block()],
            }],
            blocks: vec![sample_block()],
        };
        let kinds: Vec<_> = iterate_depth_first(&project).map(|n| n.kind_name()).collect();
        assert_eq!(kinds[0], "module");
        assert_eq!(kinds.len(), 9);
    }

    #[test]
    fn line_text_lookup() {
        let var = Variable {
            name: "x".into(),
            value: Value::null(),
            location: loc(1),
        };
        assert_eq!(node_line_text(NodeRef::Variable(&var), "a\nb").unwrap(), "a");
        let var2 = Variable {
            location: loc(2),
            ..var.clone()
        };
        assert_eq!(node_line_text(NodeRef::Variable(&var2), "a\nb").unwrap(), "b");
        let var3 = Variable {
            location: loc(3),
            ..var
        };
        assert!(node_line_text(NodeRef::Variable(&var3), "a\nb").is_err());
        assert!(node_line_text(NodeRef::Variable(&var3), "a\nb\n").is_err());
    }

    #[test]
    fn line_counting() {
        assert_eq!(line_count(""), 0);
        assert_eq!(line_count("a"), 1);
        assert_eq!(line_count("a\n"), 1);
        assert_eq!(line_count("a\n\n"), 2);
        assert_eq!(line_at("a\r\nb", 1), Some("a"));
    }

    #[test]
    fn reference_implies_has_variable() {
        assert!(Value::new(ValueKind::Reference, "$x", false).has_variable);
    }

    #[test]
    fn fallback_literals_skip_the_lookup_key() {
        let v = Value::new(ValueKind::Reference, "hiera('user', 'ironic')", true);
        assert_eq!(v.literal_fallbacks(), ["ironic"]);
        let v = Value::new(ValueKind::Reference, "lookup('db::password')", true);
        assert!(v.literal_fallbacks().is_empty());
        let v = Value::new(ValueKind::Reference, "$input_password", true);
        assert!(v.literal_fallbacks().is_empty());
    }
}
