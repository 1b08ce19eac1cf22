//! Chef recipe front-end.
//!
//! Ruby is handled one logical line at a time: resource blocks
//! (`type 'name' do ... end`), node attribute assignments, local assignments,
//! `case/when/else` and comments. `if`/`unless` and iterator blocks are walked
//! in place; method, class and module definitions are skipped.

use crate::ir::{
    strip_quotes, AtomicUnit, Attribute, BlockKind, Branch, Comment, ConditionBlock, Node,
    SourceLocation, Technology, UnitBlock, Value, ValueKind, Variable,
};

use super::{ParseError, ParseReport, SkippedRegion};

const NODE_PRECEDENCE: &[&str] = &[
    "default", "override", "normal", "set", "force_default", "force_override", "automatic",
];

const KEYWORDS: &[&str] = &[
    "if", "unless", "while", "until", "case", "when", "else", "elsif", "end", "begin", "rescue",
    "ensure", "def", "class", "module", "do", "return", "then", "and", "or", "not", "yield",
    "next", "break", "for", "in", "super", "self", "nil", "true", "false", "raise",
];

#[derive(Debug, Clone, Default)]
struct Line {
    number: usize,
    /// Code with comment and surrounding whitespace removed.
    code: String,
    /// Byte offset of `code` in the original line.
    code_offset: usize,
    comment: Option<(usize, String)>,
}

/// Splits source lines into code and comment parts.
fn preprocess(content: &str) -> (Vec<Line>, usize) {
    let mut lines = Vec::new();
    let mut comment_count = 0;
    let mut heredoc: Option<String> = None;
    let mut in_block_comment = false;
    for (idx, raw) in content.split('\n').enumerate() {
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let number = idx + 1;
        if in_block_comment {
            if raw.starts_with("=end") {
                in_block_comment = false;
            }
            lines.push(Line {
                number,
                ..Line::default()
            });
            continue;
        }
        if let Some(rest) = raw.strip_prefix("=begin") {
            in_block_comment = true;
            comment_count += 1;
            lines.push(Line {
                number,
                comment: Some((1, rest.trim().to_string())),
                ..Line::default()
            });
            continue;
        }
        if let Some(tag) = &heredoc {
            if raw.trim() == tag {
                heredoc = None;
            }
            lines.push(Line {
                number,
                ..Line::default()
            });
            continue;
        }
        let (code_end, comment) = split_comment(raw);
        if let Some(c) = &comment {
            comment_count += 1;
            let _ = c;
        }
        let code_raw = &raw[..code_end];
        let trimmed = code_raw.trim();
        let code_offset = code_raw.len() - code_raw.trim_start().len();
        heredoc = heredoc_tag(trimmed);
        lines.push(Line {
            number,
            code: trimmed.to_string(),
            code_offset,
            comment,
        });
    }
    (lines, comment_count)
}

/// Finds a `#` comment outside string literals; returns the code length and
/// the comment's 1-based column and text.
fn split_comment(line: &str) -> (usize, Option<(usize, String)>) {
    let bytes = line.as_bytes();
    let mut quote: Option<u8> = None;
    let mut interp_depth = 0usize;
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match quote {
            Some(q) => {
                if interp_depth > 0 {
                    match b {
                        b'{' => interp_depth += 1,
                        b'}' => interp_depth -= 1,
                        _ => {}
                    }
                } else if b == b'\\' {
                    i += 1;
                } else if q == b'"' && b == b'#' && bytes.get(i + 1) == Some(&b'{') {
                    interp_depth = 1;
                    i += 1;
                } else if b == q {
                    quote = None;
                }
            }
            None => match b {
                b'\'' | b'"' => quote = Some(b),
                b'#' => {
                    let column = line[..i].chars().count() + 1;
                    return (i, Some((column, line[i + 1..].trim().to_string())));
                }
                _ => {}
            },
        }
        i += 1;
    }
    (bytes.len(), None)
}

fn heredoc_tag(code: &str) -> Option<String> {
    let at = code.find("<<")?;
    let rest = code[at + 2..].trim_start_matches(['~', '-']);
    let rest = rest.trim_start_matches(['\'', '"']);
    let tag: String = rest
        .chars()
        .take_while(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || *c == '_')
        .collect();
    (!tag.is_empty() && tag.chars().next().is_some_and(|c| c.is_ascii_uppercase())).then_some(tag)
}

pub(crate) fn count_comments(content: &str) -> usize {
    preprocess(content).1
}

#[derive(Debug, PartialEq)]
enum Terminator {
    End,
    When(String, usize),
    Else,
    Elsif,
    Rescue,
    Eof,
}

struct ChefParser<'s> {
    path: &'s str,
    lines: Vec<Line>,
    pos: usize,
    skipped: Vec<SkippedRegion>,
    errors: Vec<(usize, String)>,
}

fn first_word(code: &str) -> &str {
    let end = code
        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '?' || c == '!'))
        .unwrap_or(code.len());
    &code[..end]
}

fn opens_do_block(code: &str) -> bool {
    if code.ends_with(" do") || code == "do" {
        return true;
    }
    // `do |a, b|`
    if code.ends_with('|') {
        if let Some(at) = code.rfind(" do |").or_else(|| code.rfind(" do|")) {
            return code[at..].matches('|').count() == 2;
        }
    }
    false
}

fn strip_do(code: &str) -> &str {
    let cut = code.rfind(" do").unwrap_or(code.len());
    code[..cut].trim_end()
}

/// `default['a']['b'] = v` or `node.default['a'] = v`: returns the dotted key
/// path and the right-hand side.
fn node_attribute(code: &str) -> Option<(String, &str, usize)> {
    let body = code.strip_prefix("node.").unwrap_or(code);
    let word = first_word(body);
    if !NODE_PRECEDENCE.contains(&word) {
        return None;
    }
    let mut rest = &body[word.len()..];
    let mut keys = Vec::new();
    while let Some(stripped) = rest.strip_prefix('[') {
        let close = stripped.find(']')?;
        let key = stripped[..close].trim();
        keys.push(strip_quotes(key.trim_start_matches(':')).to_string());
        rest = &stripped[close + 1..];
    }
    if keys.is_empty() {
        return None;
    }
    let rest_trim = rest.trim_start();
    let rhs = rest_trim.strip_prefix('=').filter(|r| !r.starts_with('='))?;
    let rhs = rhs.trim();
    let offset = code.len() - rhs.len();
    Some((keys.join("."), rhs, offset))
}

fn local_assignment(code: &str) -> Option<(&str, &str, usize)> {
    let name = first_word(code);
    if name.is_empty()
        || KEYWORDS.contains(&name)
        || name.ends_with(['?', '!'])
        || !name.starts_with(|c: char| c.is_ascii_lowercase() || c == '_')
    {
        return None;
    }
    let rest = code[name.len()..].trim_start();
    let rhs = rest
        .strip_prefix("||=")
        .or_else(|| rest.strip_prefix('=').filter(|r| !r.starts_with(['=', '~', '>'])))?;
    let rhs = rhs.trim();
    Some((name, rhs, code.len() - rhs.len()))
}

fn classify(raw: &str) -> Value {
    let t = raw.trim();
    let single_string = (t.starts_with('\'') || t.starts_with('"'))
        && t.len() >= 2
        && t.ends_with(&t[..1])
        && !t[1..t.len() - 1].contains(&t[..1]);
    if single_string {
        let interpolated = t.starts_with('"') && t.contains("#{");
        return Value::new(ValueKind::String, t, interpolated);
    }
    match t {
        "true" | "false" => return Value::new(ValueKind::Boolean, t, false),
        "nil" | "" => return Value::new(ValueKind::Null, t, false),
        _ => {}
    }
    let digits = t.strip_prefix('-').unwrap_or(t);
    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit() || b == b'_') {
        return Value::new(ValueKind::Integer, t, false);
    }
    if let Some(sym) = t.strip_prefix(':') {
        if !sym.is_empty() && sym.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
            return Value::new(ValueKind::String, t, false);
        }
    }
    if t.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_' || c == '@' || c == '$') {
        return Value::new(ValueKind::Reference, t, true);
    }
    let has_var = t.contains("#{") || t.contains("node[") || t.contains("node.");
    Value::new(ValueKind::String, t, has_var)
}

impl<'s> ChefParser<'s> {
    fn location(&self, line: &Line, offset_in_code: usize) -> SourceLocation {
        let column = line.code_offset + line.code[..offset_in_code.min(line.code.len())].chars().count() + 1;
        SourceLocation::new(self.path, line.number, column)
    }

    fn push_comment(&self, line: &Line, out: &mut Vec<Node>) {
        if let Some((column, text)) = &line.comment {
            out.push(Node::Comment(Comment {
                text: text.clone(),
                location: SourceLocation::new(self.path, line.number, *column),
            }));
        }
    }

    fn parse_body(&mut self, out: &mut Vec<Node>) -> Result<Terminator, ParseError> {
        while self.pos < self.lines.len() {
            let line = self.lines[self.pos].clone();
            self.pos += 1;
            let code = line.code.as_str();
            if code.is_empty() {
                self.push_comment(&line, out);
                continue;
            }
            let word = first_word(code);
            let terminator = match word {
                "end" => Some(Terminator::End),
                "else" => Some(Terminator::Else),
                "elsif" => Some(Terminator::Elsif),
                "rescue" | "ensure" => Some(Terminator::Rescue),
                "when" => Some(Terminator::When(code["when".len()..].trim().to_string(), line.number)),
                _ => None,
            };
            if let Some(t) = terminator {
                self.push_comment(&line, out);
                return Ok(t);
            }
            self.statement(&line, out)?;
        }
        Ok(Terminator::Eof)
    }

    fn expect_end(&mut self, opener: &Line, out: &mut Vec<Node>) -> Result<(), ParseError> {
        loop {
            match self.parse_body(out)? {
                Terminator::End => return Ok(()),
                Terminator::Eof => {
                    return Err(ParseError::new(opener.number, "missing 'end' for block"))
                }
                _ => continue,
            }
        }
    }

    fn skip_block(&mut self, opener: &Line, reason: &str) -> Result<(), ParseError> {
        let mut sink = Vec::new();
        let recorded = self.skipped.len();
        self.expect_end(opener, &mut sink)?;
        self.skipped.truncate(recorded);
        self.skipped.push(SkippedRegion {
            start_line: opener.number,
            end_line: self.lines[self.pos - 1].number,
            reason: reason.to_string(),
        });
        Ok(())
    }

    fn statement(&mut self, line: &Line, out: &mut Vec<Node>) -> Result<(), ParseError> {
        let code = line.code.as_str();
        let word = first_word(code);
        match word {
            "case" => {
                let node = self.parse_case(line)?;
                out.push(node);
                self.push_comment(line, out);
                return Ok(());
            }
            "if" | "unless" | "while" | "until" | "begin" => {
                self.push_comment(line, out);
                return self.expect_end(line, out);
            }
            "def" | "class" | "module" => {
                self.push_comment(line, out);
                return self.skip_block(line, &format!("{word} definition"));
            }
            _ => {}
        }
        if let Some((name, rhs, offset)) = node_attribute(code) {
            out.push(Node::Variable(Variable {
                name,
                value: classify(rhs),
                location: self.location(line, 0),
            }));
            let _ = offset;
            self.push_comment(line, out);
            return self.continue_assignment(line, rhs);
        }
        if let Some((name, rhs, _)) = local_assignment(code) {
            out.push(Node::Variable(Variable {
                name: name.trim_start_matches(['@', '$']).to_string(),
                value: classify(rhs),
                location: self.location(line, 0),
            }));
            self.push_comment(line, out);
            return self.continue_assignment(line, rhs);
        }
        if opens_do_block(code) {
            let head = strip_do(code);
            let word = first_word(head);
            let args = head[word.len()..].trim();
            if is_resource_head(word, args) {
                return self.parse_resource(line, word, args, out);
            }
            self.push_comment(line, out);
            return self.expect_end(line, out);
        }
        let args = code[word.len()..].trim();
        if is_resource_head(word, args) {
            let mut unit = AtomicUnit {
                unit_type: word.to_string(),
                title: resource_title(args),
                attributes: Vec::new(),
                location: self.location(line, 0),
            };
            // `package 'x' { action :install }` style one-liners carry no attributes
            unit.attributes.shrink_to_fit();
            out.push(Node::Atomic(unit));
            self.push_comment(line, out);
            return Ok(());
        }
        self.skipped.push(SkippedRegion {
            start_line: line.number,
            end_line: line.number,
            reason: "unsupported statement".into(),
        });
        self.push_comment(line, out);
        Ok(())
    }

    /// `x = case y` / `x = if y` open a block that runs to its own `end`.
    fn continue_assignment(&mut self, line: &Line, rhs: &str) -> Result<(), ParseError> {
        let opener = first_word(rhs);
        if matches!(opener, "case" | "if" | "unless" | "begin") || opens_do_block(rhs) {
            return self.skip_block(line, "block-valued assignment");
        }
        Ok(())
    }

    fn parse_resource(
        &mut self,
        line: &Line,
        unit_type: &str,
        args: &str,
        out: &mut Vec<Node>,
    ) -> Result<(), ParseError> {
        let mut unit = AtomicUnit {
            unit_type: unit_type.to_string(),
            title: resource_title(args),
            attributes: Vec::new(),
            location: self.location(line, 0),
        };
        let mut comments = Vec::new();
        self.push_comment(line, &mut comments);
        let mut depth = 1usize;
        while depth > 0 {
            let Some(inner) = self.lines.get(self.pos).cloned() else {
                return Err(ParseError::new(line.number, "missing 'end' for resource block"));
            };
            self.pos += 1;
            self.push_comment(&inner, &mut comments);
            let code = inner.code.as_str();
            if code.is_empty() {
                continue;
            }
            let word = first_word(code);
            match word {
                "end" => {
                    depth -= 1;
                    continue;
                }
                "if" | "unless" | "while" | "until" | "begin" | "case" | "def" => {
                    depth += 1;
                    continue;
                }
                "else" | "elsif" | "when" | "rescue" | "ensure" => continue,
                _ => {}
            }
            if opens_do_block(code) {
                depth += 1;
            }
            let statement = if opens_do_block(code) { strip_do(code) } else { code };
            if let Some(attr) = self.attribute(&inner, statement) {
                unit.attributes.push(attr);
            }
        }
        out.push(Node::Atomic(unit));
        out.append(&mut comments);
        Ok(())
    }

    /// `name value`, `name(value)` or `name = value` inside a resource body.
    fn attribute(&self, line: &Line, code: &str) -> Option<Attribute> {
        let name = first_word(code);
        if name.is_empty() || KEYWORDS.contains(&name) {
            return None;
        }
        let rest = &code[name.len()..];
        let value = if let Some(inner) = rest.strip_prefix('(') {
            inner.strip_suffix(')').unwrap_or(inner).trim()
        } else if let Some(rhs) = rest.trim_start().strip_prefix('=') {
            rhs.trim()
        } else if rest.starts_with(char::is_whitespace) {
            rest.trim()
        } else {
            return None;
        };
        if value.is_empty() {
            return None;
        }
        Some(Attribute {
            name: name.to_string(),
            value: classify(value),
            location: self.location(line, 0),
        })
    }

    fn parse_case(&mut self, line: &Line) -> Result<Node, ParseError> {
        let subject = classify(line.code["case".len()..].trim());
        let mut branches: Vec<Branch> = Vec::new();
        let mut has_default = false;
        let mut preamble = Vec::new();
        let mut next = self.parse_body(&mut preamble)?;
        loop {
            match next {
                Terminator::When(guard, number) => {
                    let mut body = Vec::new();
                    let guard = match guard.split_once(" then ") {
                        Some((g, inline)) => {
                            let inline_line = Line {
                                number,
                                code: inline.trim().to_string(),
                                code_offset: 0,
                                comment: None,
                            };
                            self.statement(&inline_line, &mut body)?;
                            g.trim().to_string()
                        }
                        None => guard.trim_end_matches(" then").to_string(),
                    };
                    next = self.parse_body(&mut body)?;
                    branches.push(Branch { guard, body });
                }
                Terminator::Else => {
                    has_default = true;
                    let mut body = Vec::new();
                    next = self.parse_body(&mut body)?;
                    branches.push(Branch {
                        guard: "else".into(),
                        body,
                    });
                }
                Terminator::End => break,
                Terminator::Eof => {
                    return Err(ParseError::new(line.number, "missing 'end' for case"));
                }
                Terminator::Elsif | Terminator::Rescue => {
                    self.errors.push((line.number, "unexpected keyword in case".into()));
                    next = self.parse_body(&mut Vec::new())?;
                }
            }
        }
        if let Some(first) = branches.first_mut() {
            preamble.append(&mut first.body);
            first.body = preamble;
        }
        Ok(Node::Condition(ConditionBlock {
            subject,
            branches,
            has_default_branch: has_default,
            location: self.location(line, 0),
        }))
    }
}

fn is_resource_head(word: &str, args: &str) -> bool {
    if word.is_empty()
        || KEYWORDS.contains(&word)
        || !word.starts_with(|c: char| c.is_ascii_lowercase() || c == '_')
    {
        return false;
    }
    let args = args.trim_start_matches('(').trim_start();
    args.starts_with(['\'', '"', ':']) || args.starts_with("%w") || args.starts_with("node[")
        || args.starts_with("\"#{")
        || (args.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') && !args.contains('='))
}

fn resource_title(args: &str) -> String {
    let args = args.trim();
    let args = args
        .strip_prefix('(')
        .and_then(|a| a.strip_suffix(')'))
        .unwrap_or(args)
        .trim();
    for q in ['\'', '"'] {
        if let Some(rest) = args.strip_prefix(q) {
            if let Some(close) = rest.find(q) {
                return rest[..close].to_string();
            }
        }
    }
    args.to_string()
}

pub fn parse_chef(content: &str, path: &str) -> Result<ParseReport, ParseError> {
    let (lines, comment_count) = preprocess(content);
    let mut parser = ChefParser {
        path,
        lines,
        pos: 0,
        skipped: Vec::new(),
        errors: Vec::new(),
    };
    let mut block = UnitBlock::new(
        path,
        BlockKind::Recipe,
        Technology::Chef,
        SourceLocation::new(path, 1, 0),
    );
    loop {
        match parser.parse_body(&mut block.children)? {
            Terminator::Eof => break,
            Terminator::End => {
                let line = parser.lines[parser.pos - 1].number;
                return Err(ParseError::new(line, "'end' without an open block"));
            }
            other => {
                let line = parser.lines[parser.pos - 1].number;
                parser.errors.push((line, format!("stray {other:?} at top level")));
            }
        }
    }
    Ok(ParseReport {
        block,
        skipped_regions: parser.skipped,
        comment_count,
        parse_errors: parser.errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> ParseReport {
        parse_chef(src, "default.rb").expect("parses")
    }

    #[test]
    fn node_attribute_assignment() {
        let r = parse("default['db']['password'] = \"P@ssw0rd!\"\n");
        let Node::Variable(v) = &r.block.children[0] else {
            panic!("expected variable")
        };
        assert_eq!(v.name, "db.password");
        assert_eq!(v.value.raw_text, "\"P@ssw0rd!\"");
        assert_eq!(v.value.kind, ValueKind::String);
        let r = parse("node.override[:app][:user] = 'deploy'\n");
        let Node::Variable(v) = &r.block.children[0] else {
            panic!()
        };
        assert_eq!(v.name, "app.user");
    }

    #[test]
    fn resource_block() {
        let r = parse("remote_file '/tmp/x' do\n  source 'http://ex.com/x'\nend\n");
        let Node::Atomic(unit) = &r.block.children[0] else {
            panic!("expected resource")
        };
        assert_eq!(unit.unit_type, "remote_file");
        assert_eq!(unit.title, "/tmp/x");
        assert_eq!(unit.attributes.len(), 1);
        assert_eq!(unit.attributes[0].name, "source");
        assert_eq!(unit.attributes[0].location.line, 2);
        assert_eq!(unit.attributes[0].location.column, 3);
    }

    #[test]
    fn empty_recipe() {
        assert!(parse("").block.children.is_empty());
    }

    #[test]
    fn case_with_and_without_else() {
        let r = parse("case node['platform']\nwhen 'ubuntu'\n  package 'a'\nwhen 'centos' then package 'b'\nend\n");
        let Node::Condition(c) = &r.block.children[0] else {
            panic!("expected case")
        };
        assert!(!c.has_default_branch);
        assert_eq!(c.branches.len(), 2);
        assert_eq!(c.branches[1].guard, "'centos'");
        assert_eq!(c.branches[1].body.len(), 1);
        let r = parse("case x\nwhen 1\n  y = 2\nelse\n  y = 3\nend\n");
        let Node::Condition(c) = &r.block.children[0] else {
            panic!()
        };
        assert!(c.has_default_branch);
    }

    #[test]
    fn nested_blocks_inside_resource() {
        let src = "ruby_block 'hash' do\n  block do\n    require 'digest/md5'\n  end\n  action :run\nend\n";
        let r = parse(src);
        let Node::Atomic(unit) = &r.block.children[0] else {
            panic!()
        };
        let names: Vec<_> = unit.attributes.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["require", "action"]);
    }

    #[test]
    fn unbalanced_blocks_fail() {
        assert!(parse_chef("package 'x' do\n  action :install\n", "a.rb").is_err());
        assert!(parse_chef("end\n", "a.rb").is_err());
    }

    #[test]
    fn comments_outside_strings() {
        let src = "# header\nlog \"#{node['x']} # not\" # trailing\nx = '#'\n=begin\nhidden\n=end\n";
        let r = parse(src);
        assert_eq!(r.comment_count, 3);
    }

    #[test]
    fn loops_and_conditionals_are_walked() {
        let src = "%w(a b).each do |pkg|\n  package pkg\nend\nif platform?('ubuntu')\n  package 'c'\nelse\n  package 'd'\nend\n";
        let r = parse(src);
        let units = r
            .block
            .children
            .iter()
            .filter(|n| matches!(n, Node::Atomic(_)))
            .count();
        assert_eq!(units, 3);
    }

    #[test]
    fn definitions_are_skipped() {
        let r = parse("def helper\n  if x\n    y\n  end\nend\npackage 'git'\n");
        assert_eq!(r.skipped_regions[0].start_line, 1);
        assert_eq!(r.skipped_regions[0].end_line, 5);
        assert_eq!(r.block.children.len(), 1);
    }

    #[test]
    fn heredoc_bodies_are_opaque() {
        let r = parse("bash 'x' do\n  code <<-EOH\n    # nope\n    end\n  EOH\nend\n");
        assert_eq!(r.comment_count, 0);
        assert_eq!(r.block.children.len(), 1);
    }
}
