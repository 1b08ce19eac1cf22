//! Ansible playbook front-end.
//!
//! YAML structure comes from `yaml_rust2`'s event stream so that every key
//! keeps its line. Comments are invisible to a YAML reader and are recovered
//! by a separate line scanner.

use yaml_rust2::parser::{Event, MarkedEventReceiver, Parser};
use yaml_rust2::scanner::{Marker, TScalarStyle};

use crate::ir::{
    line_at, AtomicUnit, Attribute, BlockKind, Comment, Node, SourceLocation, Technology, UnitBlock,
    Value, ValueKind, Variable,
};

use super::{ParseError, ParseReport, SkippedRegion};

/// Task keys that are not the module invocation.
const TASK_KEYWORDS: &[&str] = &[
    "name", "when", "register", "become", "become_user", "become_method", "become_flags",
    "with_items", "with_dict", "with_fileglob", "with_list", "with_together", "with_nested",
    "with_subelements", "with_sequence", "with_first_found", "with_lines", "with_indexed_items",
    "loop", "loop_control", "notify", "tags", "vars", "args", "ignore_errors", "ignore_unreachable",
    "delegate_to", "delegate_facts", "environment", "changed_when", "failed_when", "until",
    "retries", "delay", "no_log", "block", "rescue", "always", "listen", "run_once", "check_mode",
    "diff", "async", "poll", "local_action", "connection", "any_errors_fatal", "throttle",
    "timeout", "debugger", "module_defaults", "collections", "remote_user", "port", "action",
];

const PLAY_KEYS: &[&str] = &[
    "hosts", "tasks", "pre_tasks", "post_tasks", "roles", "handlers", "import_playbook",
    "include_playbook", "gather_facts",
];

#[derive(Debug, Clone)]
struct Scalar {
    text: String,
    style: TScalarStyle,
    line: usize,
    /// 0-based character column as reported by the reader.
    col: usize,
}

#[derive(Debug, Clone)]
enum YNode {
    Scalar(Scalar),
    Seq(Vec<YNode>),
    Map(Vec<(Scalar, YNode)>),
    Alias(usize),
}

impl YNode {
    fn get(&self, key: &str) -> Option<&YNode> {
        match self {
            YNode::Map(entries) => entries.iter().find(|(k, _)| k.text == key).map(|(_, v)| v),
            _ => None,
        }
    }

    fn has_any_key(&self, keys: &[&str]) -> bool {
        match self {
            YNode::Map(entries) => entries.iter().any(|(k, _)| keys.contains(&k.text.as_str())),
            _ => false,
        }
    }

    fn first_line(&self) -> Option<usize> {
        match self {
            YNode::Scalar(s) => Some(s.line),
            YNode::Seq(items) => items.iter().find_map(YNode::first_line),
            YNode::Map(entries) => entries.first().map(|(k, _)| k.line),
            YNode::Alias(line) => Some(*line),
        }
    }
}

enum Frame {
    Seq(Vec<YNode>),
    Map(Vec<(Scalar, YNode)>, Option<Scalar>),
}

#[derive(Default)]
struct TreeBuilder {
    stack: Vec<Frame>,
    docs: Vec<YNode>,
}

impl TreeBuilder {
    fn attach(&mut self, node: YNode) {
        match self.stack.last_mut() {
            None => self.docs.push(node),
            Some(Frame::Seq(items)) => items.push(node),
            Some(Frame::Map(entries, pending)) => match pending.take() {
                None => match node {
                    YNode::Scalar(key) => *pending = Some(key),
                    // complex keys are not used by playbooks; keep the slot aligned
                    other => {
                        let line = other.first_line().unwrap_or(0);
                        *pending = Some(Scalar {
                            text: String::new(),
                            style: TScalarStyle::Plain,
                            line,
                            col: 0,
                        });
                    }
                },
                Some(key) => entries.push((key, node)),
            },
        }
    }
}

impl MarkedEventReceiver for TreeBuilder {
    fn on_event(&mut self, ev: Event, mark: Marker) {
        match ev {
            Event::Scalar(text, style, _, _) => self.attach(YNode::Scalar(Scalar {
                text,
                style,
                line: mark.line(),
                col: mark.col(),
            })),
            Event::SequenceStart(..) => self.stack.push(Frame::Seq(Vec::new())),
            Event::MappingStart(..) => self.stack.push(Frame::Map(Vec::new(), None)),
            Event::SequenceEnd | Event::MappingEnd => {
                let node = match self.stack.pop() {
                    Some(Frame::Seq(items)) => YNode::Seq(items),
                    Some(Frame::Map(entries, _)) => YNode::Map(entries),
                    None => return,
                };
                self.attach(node);
            }
            Event::Alias(_) => self.attach(YNode::Alias(mark.line())),
            _ => {}
        }
    }
}

struct Lowering<'s> {
    src: &'s str,
    path: &'s str,
    skipped: Vec<SkippedRegion>,
}

impl<'s> Lowering<'s> {
    fn location(&self, line: usize, col0: usize) -> SourceLocation {
        SourceLocation::new(self.path, line, col0 + 1)
    }

    /// The scalar as written on its first source line.
    fn raw_text(&self, s: &Scalar) -> String {
        let Some(line) = line_at(self.src, s.line) else {
            return s.text.lines().next().unwrap_or("").to_string();
        };
        let from = line.char_indices().nth(s.col).map_or(line.len(), |(i, _)| i);
        let rest = &line[from..];
        match s.style {
            TScalarStyle::SingleQuoted | TScalarStyle::DoubleQuoted => {
                let quote = if s.style == TScalarStyle::SingleQuoted { '\'' } else { '"' };
                quoted_prefix(rest, quote).to_string()
            }
            TScalarStyle::Plain => {
                let first = s.text.lines().next().unwrap_or("");
                if rest.starts_with(first) {
                    first.to_string()
                } else {
                    strip_trailing_comment(rest).trim_end().to_string()
                }
            }
            TScalarStyle::Literal | TScalarStyle::Folded => {
                // the reader marks the content line; evidence stays on it
                rest.trim_end().to_string()
            }
        }
    }

    fn value(&self, s: &Scalar) -> Value {
        let raw = self.raw_text(s);
        let has_var = s.text.contains("{{") || s.text.contains("{%");
        let kind = match s.style {
            TScalarStyle::Plain => plain_kind(&s.text),
            _ => ValueKind::String,
        };
        Value::new(kind, raw, has_var)
    }

    /// Leaf scalars under `node`, named by their dotted key path.
    fn flatten<'n>(&self, name: &str, node: &'n YNode, out: &mut Vec<(String, &'n Scalar)>) {
        match node {
            YNode::Scalar(s) => out.push((name.to_string(), s)),
            YNode::Seq(items) => items.iter().for_each(|i| self.flatten(name, i, out)),
            YNode::Map(entries) => {
                for (k, v) in entries {
                    let child = if name.is_empty() {
                        k.text.clone()
                    } else {
                        format!("{name}.{}", k.text)
                    };
                    self.flatten(&child, v, out);
                }
            }
            YNode::Alias(_) => {}
        }
    }

    fn variables(&self, node: &YNode, out: &mut Vec<Node>) {
        let mut leaves = Vec::new();
        self.flatten("", node, &mut leaves);
        for (name, s) in leaves {
            if name.is_empty() {
                continue;
            }
            out.push(Node::Variable(Variable {
                name,
                value: self.value(s),
                location: self.location(s.line, s.col),
            }));
        }
    }

    /// Leaves become attributes; a mapping value is located at its key.
    fn attributes(&self, name: &str, key: &Scalar, node: &YNode, out: &mut Vec<Attribute>) {
        match node {
            YNode::Scalar(s) => out.push(Attribute {
                name: name.to_string(),
                value: self.value(s),
                location: self.location(key.line, key.col),
            }),
            YNode::Map(entries) => {
                for (k, v) in entries {
                    self.attributes(&format!("{name}.{}", k.text), k, v, out);
                }
            }
            YNode::Seq(items) => {
                for item in items {
                    match item {
                        YNode::Scalar(s) => self.attributes(name, s, item, out),
                        _ => self.attributes(name, key, item, out),
                    }
                }
            }
            YNode::Alias(_) => {}
        }
    }

    /// `module: key=value key2="quoted value"` shorthand.
    fn shorthand(&self, s: &Scalar, out: &mut Vec<Attribute>) {
        let raw = self.raw_text(s);
        let body = match s.style {
            TScalarStyle::SingleQuoted | TScalarStyle::DoubleQuoted if raw.len() >= 2 => {
                &raw[1..raw.len() - 1]
            }
            _ => raw.as_str(),
        };
        let body_col = s.col + raw[..raw.len() - body.len()].chars().count().min(1);
        let mut free: Option<(usize, usize)> = None;
        for (start, word) in split_unquoted_whitespace(body) {
            let col = body_col + body[..start].chars().count();
            match word.split_once('=') {
                Some((key, val)) if !key.is_empty() && is_identifier(key) => {
                    let quoted = val.len() >= 2
                        && (val.starts_with('"') || val.starts_with('\''))
                        && val.ends_with(&val[..1]);
                    let kind = if quoted { ValueKind::String } else { plain_kind(val) };
                    let has_var = val.contains("{{");
                    out.push(Attribute {
                        name: key.to_string(),
                        value: Value::new(kind, val, has_var),
                        location: self.location(s.line, col),
                    });
                }
                _ => {
                    let end = start + word.len();
                    free = Some(free.map_or((start, end), |(a, _)| (a, end)));
                }
            }
        }
        if let Some((a, b)) = free {
            let text = &body[a..b];
            out.push(Attribute {
                name: "_raw_params".into(),
                value: Value::new(plain_kind(text), text, text.contains("{{")),
                location: self.location(s.line, body_col + body[..a].chars().count()),
            });
        }
    }

    fn task(&mut self, node: &YNode, out: &mut Vec<Node>) {
        let YNode::Map(entries) = node else {
            if let Some(line) = node.first_line() {
                self.skipped.push(SkippedRegion {
                    start_line: line,
                    end_line: line,
                    reason: "task is not a mapping".into(),
                });
            }
            return;
        };
        for nested in ["block", "rescue", "always"] {
            if let Some(YNode::Seq(tasks)) = node.get(nested) {
                for t in tasks {
                    self.task(t, out);
                }
            }
        }
        let module = entries.iter().find(|(k, _)| {
            !TASK_KEYWORDS.contains(&k.text.as_str()) && !k.text.is_empty()
        });
        let Some((module_key, module_value)) = module else {
            return;
        };
        let title_scalar = match node.get("name") {
            Some(YNode::Scalar(s)) => Some(s),
            _ => None,
        };
        let location = match title_scalar {
            Some(_) => {
                let (k, _) = entries.iter().find(|(k, _)| k.text == "name").expect("name key");
                self.location(k.line, k.col)
            }
            None => self.location(module_key.line, module_key.col),
        };
        let mut unit = AtomicUnit {
            unit_type: module_key.text.clone(),
            title: title_scalar.map(|s| s.text.clone()).unwrap_or_default(),
            attributes: Vec::new(),
            location,
        };
        match module_value {
            YNode::Scalar(s) if s.text.contains('=') => self.shorthand(s, &mut unit.attributes),
            YNode::Scalar(s) if s.text.trim().is_empty() => {}
            YNode::Scalar(s) => unit.attributes.push(Attribute {
                name: "_raw_params".into(),
                value: self.value(s),
                location: self.location(module_key.line, module_key.col),
            }),
            other => self.attributes_of_map(other, &mut unit.attributes),
        }
        for (k, v) in entries {
            if k.text == "name" || std::ptr::eq(k, module_key) || matches!(k.text.as_str(), "block" | "rescue" | "always") {
                continue;
            }
            if k.text == "args" {
                self.attributes_of_map(v, &mut unit.attributes);
            } else {
                self.attributes(&k.text, k, v, &mut unit.attributes);
            }
        }
        out.push(Node::Atomic(unit));
    }

    fn attributes_of_map(&self, node: &YNode, out: &mut Vec<Attribute>) {
        if let YNode::Map(entries) = node {
            for (k, v) in entries {
                self.attributes(&k.text, k, v, out);
            }
        }
    }

    fn play(&mut self, node: &YNode) -> UnitBlock {
        let YNode::Map(entries) = node else {
            unreachable!("plays are mappings");
        };
        let name = match (node.get("name"), node.get("hosts")) {
            (Some(YNode::Scalar(s)), _) | (None, Some(YNode::Scalar(s))) => s.text.clone(),
            _ => "play".to_string(),
        };
        let (first_key, _) = &entries[0];
        let mut block = UnitBlock::new(
            name,
            BlockKind::Play,
            Technology::Ansible,
            self.location(first_key.line, first_key.col),
        );
        for (k, v) in entries {
            match k.text.as_str() {
                "name" => {}
                "vars" => self.variables(v, &mut block.children),
                "tasks" | "pre_tasks" | "post_tasks" | "handlers" => {
                    if let YNode::Seq(tasks) = v {
                        for t in tasks {
                            self.task(t, &mut block.children);
                        }
                    }
                }
                "roles" | "vars_files" => {}
                _ => {
                    let mut attrs = Vec::new();
                    self.attributes(&k.text, k, v, &mut attrs);
                    block.children.extend(attrs.into_iter().map(Node::Attribute));
                }
            }
        }
        block
    }

    fn document(&mut self, doc: &YNode, block: &mut UnitBlock) {
        match doc {
            YNode::Seq(items) => {
                for item in items {
                    if item.has_any_key(PLAY_KEYS) {
                        let play = self.play(item);
                        block.children.push(Node::Block(play));
                    } else {
                        self.task(item, &mut block.children);
                    }
                }
            }
            YNode::Map(entries) if doc.has_any_key(PLAY_KEYS) && !entries.is_empty() => {
                let play = self.play(doc);
                block.children.push(Node::Block(play));
            }
            YNode::Map(entries) => {
                // variable files: defaults/main.yml, group_vars, a bare `vars:` section
                for (k, v) in entries {
                    if k.text == "vars" {
                        self.variables(v, &mut block.children);
                    } else {
                        let mut leaves = Vec::new();
                        self.flatten(&k.text, v, &mut leaves);
                        for (name, s) in leaves {
                            let location = match v {
                                YNode::Scalar(_) => self.location(k.line, k.col),
                                _ => self.location(s.line, s.col),
                            };
                            block.children.push(Node::Variable(Variable {
                                name,
                                value: self.value(s),
                                location,
                            }));
                        }
                    }
                }
            }
            YNode::Scalar(_) | YNode::Alias(_) => {}
        }
    }
}

fn quoted_prefix(rest: &str, quote: char) -> &str {
    let mut chars = rest.char_indices();
    match chars.next() {
        Some((_, c)) if c == quote => {}
        _ => return rest.trim_end(),
    }
    let mut escaped = false;
    let mut iter = chars.peekable();
    while let Some((i, c)) = iter.next() {
        if quote == '"' {
            if escaped {
                escaped = false;
                continue;
            }
            if c == '\\' {
                escaped = true;
                continue;
            }
        } else if c == '\'' && iter.peek().map(|(_, n)| *n) == Some('\'') {
            iter.next();
            continue;
        }
        if c == quote {
            return &rest[..i + c.len_utf8()];
        }
    }
    rest.trim_end()
}

fn strip_trailing_comment(text: &str) -> &str {
    let bytes = text.as_bytes();
    for i in 0..bytes.len() {
        if bytes[i] == b'#' && (i == 0 || bytes[i - 1] == b' ' || bytes[i - 1] == b'\t') {
            return &text[..i];
        }
    }
    text
}

fn plain_kind(text: &str) -> ValueKind {
    let t = text.trim();
    match t {
        "" | "~" | "null" | "Null" | "NULL" => ValueKind::Null,
        "true" | "false" | "True" | "False" | "TRUE" | "FALSE" | "yes" | "no" | "Yes" | "No"
        | "YES" | "NO" | "on" | "off" | "On" | "Off" => ValueKind::Boolean,
        _ if is_integer(t) => ValueKind::Integer,
        _ => ValueKind::String,
    }
}

fn is_integer(t: &str) -> bool {
    let digits = t.strip_prefix(['-', '+']).unwrap_or(t);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

fn is_identifier(key: &str) -> bool {
    key.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-' || b == b'.')
}

/// Byte offset and text of each whitespace-separated word; quotes group.
fn split_unquoted_whitespace(text: &str) -> Vec<(usize, &str)> {
    let mut words = Vec::new();
    let mut start: Option<usize> = None;
    let mut quote: Option<char> = None;
    for (i, c) in text.char_indices() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None if c == '"' || c == '\'' => {
                quote = Some(c);
                start.get_or_insert(i);
            }
            None if c.is_whitespace() => {
                if let Some(s) = start.take() {
                    words.push((s, &text[s..i]));
                }
            }
            None => {
                start.get_or_insert(i);
            }
        }
    }
    if let Some(s) = start {
        words.push((s, &text[s..]));
    }
    words
}

/// `(line, column, text)` for each YAML comment outside quotes and block scalars.
pub(crate) fn scan_comments(content: &str) -> Vec<(usize, usize, String)> {
    let mut out = Vec::new();
    let mut block_indent: Option<usize> = None;
    for (idx, line) in content.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let indent = line.len() - line.trim_start().len();
        if let Some(parent) = block_indent {
            if line.trim().is_empty() || indent > parent {
                continue;
            }
            block_indent = None;
        }
        let mut quote: Option<u8> = None;
        let bytes = line.as_bytes();
        let mut comment_at = None;
        let mut i = 0;
        while i < bytes.len() {
            let b = bytes[i];
            match quote {
                Some(b'\'') if b == b'\'' => {
                    if bytes.get(i + 1) == Some(&b'\'') {
                        i += 1;
                    } else {
                        quote = None;
                    }
                }
                Some(b'"') if b == b'\\' => i += 1,
                Some(q) if b == q => quote = None,
                Some(_) => {}
                None => {
                    if b == b'#' && (i == 0 || bytes[i - 1] == b' ' || bytes[i - 1] == b'\t') {
                        comment_at = Some(i);
                        break;
                    }
                    // quotes only open a scalar at the start of a value
                    if (b == b'\'' || b == b'"')
                        && (i == indent
                            || matches!(bytes[..i].iter().rev().find(|c| **c != b' '), Some(b':' | b'-' | b'[' | b'{' | b',')))
                    {
                        quote = Some(b);
                    }
                }
            }
            i += 1;
        }
        let code = match comment_at {
            Some(at) => {
                let column = line[..at].chars().count() + 1;
                out.push((idx + 1, column, line[at + 1..].trim().to_string()));
                &line[..at]
            }
            None => line,
        };
        let code = code.trim_end();
        if let Some(pos) = code.rfind(['|', '>']) {
            let indicator = &code[pos + 1..];
            let before = code[..pos].trim_end();
            if indicator.bytes().all(|b| b == b'-' || b == b'+' || b.is_ascii_digit())
                && (before.ends_with(':') || before.ends_with('-') || before.is_empty())
            {
                // a block scalar under `- key: |` belongs to the key, not the dash
                let mut key_indent = indent;
                let mut rest = &code[indent..];
                while let Some(r) = rest.strip_prefix('-') {
                    let trimmed = r.trim_start();
                    if trimmed.len() == r.len() && !r.is_empty() {
                        break;
                    }
                    key_indent += rest.len() - trimmed.len();
                    rest = trimmed;
                }
                block_indent = Some(key_indent);
            }
        }
    }
    out
}

pub fn parse_ansible(content: &str, path: &str) -> Result<ParseReport, ParseError> {
    let mut builder = TreeBuilder::default();
    Parser::new_from_str(content)
        .load(&mut builder, true)
        .map_err(|e| ParseError::new(e.marker().line().max(1), e.info().to_string()))?;

    let mut lowering = Lowering {
        src: content,
        path,
        skipped: Vec::new(),
    };
    let mut block = UnitBlock::new(
        path,
        BlockKind::Script,
        Technology::Ansible,
        SourceLocation::new(path, 1, 0),
    );
    for doc in &builder.docs {
        lowering.document(doc, &mut block);
    }

    let comments = scan_comments(content);
    let comment_count = comments.len();
    for (line, column, text) in comments {
        let comment = Node::Comment(Comment {
            text,
            location: SourceLocation::new(path, line, column),
        });
        insert_comment(&mut block.children, comment, line);
    }
    Ok(ParseReport {
        block,
        skipped_regions: lowering.skipped,
        comment_count,
        parse_errors: Vec::new(),
    })
}

/// Places a comment in the play that encloses it, ordered by line.
fn insert_comment(children: &mut Vec<Node>, comment: Node, line: usize) {
    let owner = children
        .iter()
        .rposition(|n| n.location().line <= line)
        .filter(|&i| matches!(children[i], Node::Block(_)));
    if let Some(i) = owner {
        if let Node::Block(play) = &mut children[i] {
            insert_comment(&mut play.children, comment, line);
            return;
        }
    }
    let at = children.partition_point(|n| n.location().line <= line);
    children.insert(at, comment);
}
