//! Puppet manifest front-end.
//!
//! Supported: resource declarations, variable assignments, class and define
//! bodies (parameters with defaults become variables), case statements and
//! comments. `if`/`unless` bodies are walked in place. Everything else is
//! skipped and recorded.

use crate::ir::{
    AtomicUnit, Attribute, BlockKind, Branch, Comment, ConditionBlock, Node, SourceLocation,
    Technology, UnitBlock, Value, ValueKind, Variable,
};

use super::{ParseError, ParseReport, SkippedRegion};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Str { double: bool },
    Num,
    Regex,
    Punct(&'static str),
    Other,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    start: usize,
    end: usize,
    line: usize,
    end_line: usize,
}

#[derive(Debug, Clone)]
struct RawComment {
    text: String,
    offset: usize,
    line: usize,
    column: usize,
}

const PUNCTS: [&str; 34] = [
    "<<|", "|>>", "=>", "+>", "->", "~>", "<-", "<~", "==", "!=", "=~", "!~", ">=", "<=", "<|",
    "|>", "@@", "{", "}", "[", "]", "(", ")", ",", ":", ";", "=", "?", "@", "+", "-", "*", "<",
    ">",
];

struct Lexer<'s> {
    src: &'s str,
    bytes: &'s [u8],
    pos: usize,
    line: usize,
    tokens: Vec<Token>,
    comments: Vec<RawComment>,
    pending_heredoc: Option<String>,
}

impl<'s> Lexer<'s> {
    fn new(src: &'s str) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            line: 1,
            tokens: Vec::new(),
            comments: Vec::new(),
            pending_heredoc: None,
        }
    }

    fn column_of(&self, offset: usize) -> usize {
        let line_start = self.src[..offset].rfind('\n').map_or(0, |i| i + 1);
        self.src[line_start..offset].chars().count() + 1
    }

    fn push(&mut self, tok: Tok, start: usize, start_line: usize) {
        self.tokens.push(Token {
            tok,
            start,
            end: self.pos,
            line: start_line,
            end_line: self.line,
        });
    }

    fn bump_char(&mut self) {
        let c = self.src[self.pos..].chars().next().unwrap_or('\0');
        self.pos += c.len_utf8().max(1);
        if c == '\n' {
            self.line += 1;
            if let Some(tag) = self.pending_heredoc.take() {
                self.skip_heredoc_body(&tag);
            }
        }
    }

    fn skip_heredoc_body(&mut self, tag: &str) {
        while self.pos < self.bytes.len() {
            let rest = &self.src[self.pos..];
            let line_end = rest.find('\n').map_or(rest.len(), |i| i);
            let text = rest[..line_end].trim();
            let text = text.trim_start_matches('|').trim_start_matches('-').trim();
            self.pos += line_end;
            if self.pos < self.bytes.len() {
                self.pos += 1;
                self.line += 1;
            }
            if text == tag {
                break;
            }
        }
    }

    fn prev_allows_regex(&self) -> bool {
        match self.tokens.last().map(|t| &t.tok) {
            None => true,
            Some(Tok::Punct(p)) => matches!(*p, "{" | "," | "(" | "[" | "=~" | "!~" | "}" | ":"),
            Some(Tok::Ident(id)) => id == "node",
            _ => false,
        }
    }

    fn run(mut self) -> (Vec<Token>, Vec<RawComment>) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            let start = self.pos;
            let start_line = self.line;
            match b {
                b'\n' | b' ' | b'\t' | b'\r' => self.bump_char(),
                b'#' => {
                    let end = self.src[start..].find('\n').map_or(self.bytes.len(), |i| start + i);
                    let text = self.src[start + 1..end].trim().to_string();
                    let column = self.column_of(start);
                    self.comments.push(RawComment {
                        text,
                        offset: start,
                        line: start_line,
                        column,
                    });
                    self.pos = end;
                }
                b'/' if self.bytes.get(start + 1) == Some(&b'*') => {
                    let end = self.src[start + 2..]
                        .find("*/")
                        .map_or(self.bytes.len(), |i| start + 2 + i + 2);
                    let body_end = end.saturating_sub(2).max(start + 2);
                    let text = self.src[start + 2..body_end].trim().to_string();
                    let column = self.column_of(start);
                    self.comments.push(RawComment {
                        text,
                        offset: start,
                        line: start_line,
                        column,
                    });
                    while self.pos < end {
                        self.bump_char();
                    }
                }
                b'\'' | b'"' => {
                    self.bump_char();
                    while self.pos < self.bytes.len() {
                        let c = self.bytes[self.pos];
                        if c == b'\\' {
                            self.bump_char();
                            if self.pos < self.bytes.len() {
                                self.bump_char();
                            }
                            continue;
                        }
                        self.bump_char();
                        if c == b {
                            break;
                        }
                    }
                    self.push(Tok::Str { double: b == b'"' }, start, start_line);
                }
                b'$' => {
                    self.pos += 1;
                    let name_start = self.pos;
                    while self.pos < self.bytes.len()
                        && (self.bytes[self.pos].is_ascii_alphanumeric()
                            || self.bytes[self.pos] == b'_'
                            || self.bytes[self.pos] == b':')
                    {
                        self.pos += 1;
                    }
                    let name = self.src[name_start..self.pos].trim_start_matches("::").to_string();
                    self.push(Tok::Var(name), start, start_line);
                }
                b'0'..=b'9' => {
                    while self.pos < self.bytes.len()
                        && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'.')
                    {
                        self.pos += 1;
                    }
                    self.push(Tok::Num, start, start_line);
                }
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    self.lex_ident(start, start_line);
                }
                b':' if self.bytes.get(start + 1) == Some(&b':')
                    && self.bytes.get(start + 2).is_some_and(|c| c.is_ascii_alphabetic()) =>
                {
                    self.lex_ident(start, start_line);
                }
                b'/' if self.prev_allows_regex() => {
                    let line_end = self.src[start..].find('\n').map_or(self.bytes.len(), |i| start + i);
                    let mut i = start + 1;
                    let mut close = None;
                    while i < line_end {
                        match self.bytes[i] {
                            b'\\' => i += 2,
                            b'/' => {
                                close = Some(i);
                                break;
                            }
                            _ => i += 1,
                        }
                    }
                    match close {
                        Some(c) => {
                            self.pos = c + 1;
                            self.push(Tok::Regex, start, start_line);
                        }
                        None => {
                            self.pos += 1;
                            self.push(Tok::Other, start, start_line);
                        }
                    }
                }
                b'@' if self.bytes.get(start + 1) == Some(&b'(') => {
                    let line_end = self.src[start..].find('\n').map_or(self.bytes.len(), |i| start + i);
                    match self.src[start..line_end].find(')') {
                        Some(close) => {
                            let spec = &self.src[start + 2..start + close];
                            let tag = spec
                                .split([':', '/'])
                                .next()
                                .unwrap_or("")
                                .trim()
                                .trim_matches('"')
                                .to_string();
                            self.pos = start + close + 1;
                            self.push(Tok::Str { double: spec.contains('"') }, start, start_line);
                            self.pending_heredoc = Some(tag);
                        }
                        None => {
                            self.pos += 1;
                            self.push(Tok::Punct("@"), start, start_line);
                        }
                    }
                }
                _ => {
                    let rest = &self.src[start..];
                    match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
                        Some(p) => {
                            self.pos += p.len();
                            self.push(Tok::Punct(p), start, start_line);
                        }
                        None => {
                            self.bump_char();
                            self.push(Tok::Other, start, start_line);
                        }
                    }
                }
            }
        }
        (self.tokens, self.comments)
    }

    fn lex_ident(&mut self, start: usize, start_line: usize) {
        loop {
            while self.pos < self.bytes.len()
                && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
            {
                self.pos += 1;
            }
            let rest = &self.bytes[self.pos..];
            if rest.len() > 2 && rest[0] == b':' && rest[1] == b':' && rest[2].is_ascii_alphabetic() {
                self.pos += 2;
            } else {
                break;
            }
        }
        let word = self.src[start..self.pos].to_string();
        self.push(Tok::Ident(word), start, start_line);
    }
}

/// Counts `#` and `/*` comment openers outside string literals.
pub(crate) fn count_comments(content: &str) -> usize {
    Lexer::new(content).run().1.len()
}

struct Parser<'s> {
    src: &'s str,
    path: &'s str,
    toks: Vec<Token>,
    pos: usize,
    comments: Vec<RawComment>,
    next_comment: usize,
    skipped: Vec<SkippedRegion>,
    errors: Vec<(usize, String)>,
}

impl<'s> Parser<'s> {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, ahead: usize) -> Option<&Token> {
        self.toks.get(self.pos + ahead)
    }

    fn is_punct(&self, ahead: usize, p: &str) -> bool {
        matches!(self.peek_at(ahead), Some(Token { tok: Tok::Punct(q), .. }) if *q == p)
    }

    fn is_ident(&self, ahead: usize, word: &str) -> bool {
        matches!(self.peek_at(ahead), Some(Token { tok: Tok::Ident(w), .. }) if w == word)
    }

    fn location(&self, token: &Token) -> SourceLocation {
        let line_start = self.src[..token.start].rfind('\n').map_or(0, |i| i + 1);
        let column = self.src[line_start..token.start].chars().count() + 1;
        SourceLocation::new(self.path, token.line, column)
    }

    fn flush_comments(&mut self, before_offset: usize, out: &mut Vec<Node>) {
        while let Some(c) = self.comments.get(self.next_comment) {
            if c.offset >= before_offset {
                break;
            }
            out.push(Node::Comment(Comment {
                text: c.text.clone(),
                location: SourceLocation::new(self.path, c.line, c.column),
            }));
            self.next_comment += 1;
        }
    }

    /// Text covered by tokens `[from, to)`, clipped to the first line.
    fn raw_text(&self, from: usize, to: usize) -> String {
        if from >= to {
            return String::new();
        }
        let start = self.toks[from].start;
        let end = self.toks[to - 1].end;
        let text = &self.src[start..end];
        text.split('\n').next().unwrap_or("").trim_end().to_string()
    }

    fn parse_body(&mut self, opener: Option<&Token>, out: &mut Vec<Node>) -> Result<(), ParseError> {
        loop {
            let Some(tok) = self.peek().cloned() else {
                self.flush_comments(usize::MAX, out);
                return match opener {
                    Some(open) => Err(ParseError::new(open.line, "unclosed '{' at end of file")),
                    None => Ok(()),
                };
            };
            self.flush_comments(tok.start, out);
            match &tok.tok {
                Tok::Punct("}") => {
                    if opener.is_some() {
                        self.pos += 1;
                        return Ok(());
                    }
                    return Err(ParseError::new(tok.line, "unbalanced '}'"));
                }
                Tok::Punct(";") | Tok::Punct(",") => self.pos += 1,
                Tok::Ident(word) if (word == "class" || word == "define") && self.is_name(1) => {
                    out.push(self.parse_class()?);
                }
                Tok::Ident(word) if word == "case" => {
                    let node = self.parse_case()?;
                    out.push(node);
                }
                Tok::Ident(word) if word == "if" || word == "unless" => self.parse_if(out)?,
                Tok::Var(_) if self.is_punct(1, "=") => out.push(self.parse_assignment()),
                Tok::Ident(_) if self.is_punct(1, "{") && self.is_resource_type(0) => {
                    self.parse_resource(0, out)?;
                }
                Tok::Punct("@") | Tok::Punct("@@")
                    if self.is_resource_type(1) && self.is_punct(2, "{") =>
                {
                    self.parse_resource(1, out)?;
                }
                Tok::Ident(word) if word == "node" => self.skip_statement("node definition")?,
                _ => self.skip_statement("unsupported statement")?,
            }
        }
    }

    fn is_name(&self, ahead: usize) -> bool {
        matches!(self.peek_at(ahead), Some(Token { tok: Tok::Ident(_), .. }))
    }

    fn is_resource_type(&self, ahead: usize) -> bool {
        match self.peek_at(ahead) {
            Some(Token { tok: Tok::Ident(w), .. }) => {
                // capitalised names are resource defaults, not declarations
                w.trim_start_matches("::").starts_with(|c: char| c.is_ascii_lowercase())
                    && !matches!(w.as_str(), "if" | "unless" | "else" | "elsif" | "case" | "node")
            }
            _ => false,
        }
    }

    /// Skips tokens belonging to one statement: balanced groups, stopping at a
    /// line break at depth zero or before a closing brace of the enclosing body.
    fn skip_statement(&mut self, reason: &str) -> Result<(), ParseError> {
        let first = self.pos;
        let start_line = self.toks[first].line;
        let mut end_line = start_line;
        let mut depth: Vec<(&'static str, usize)> = Vec::new();
        while let Some(tok) = self.peek().cloned() {
            if depth.is_empty() && self.pos > first {
                let prev_end = self.toks[self.pos - 1].end_line;
                if tok.line > prev_end && !is_continuation(&self.toks[self.pos - 1].tok) {
                    break;
                }
                if tok.tok == Tok::Punct("}") {
                    break;
                }
            }
            match tok.tok {
                Tok::Punct(p @ ("{" | "(" | "[")) => depth.push((p, tok.line)),
                Tok::Punct("}") | Tok::Punct(")") | Tok::Punct("]")
                    if depth.pop().is_none() => {
                        return Err(ParseError::new(tok.line, "unbalanced closing bracket"));
                    }
                _ => {}
            }
            end_line = tok.end_line;
            self.pos += 1;
            if depth.is_empty() && tok.tok == Tok::Punct("}") {
                // a block statement ends at its closing brace unless chained
                if !matches!(self.peek().map(|t| &t.tok), Some(Tok::Punct("->" | "~>" | "<-" | "<~")))
                {
                    break;
                }
            }
        }
        if let Some((_, line)) = depth.last() {
            return Err(ParseError::new(*line, "unclosed bracket at end of file"));
        }
        self.skipped.push(SkippedRegion {
            start_line,
            end_line,
            reason: reason.to_string(),
        });
        Ok(())
    }

    /// Consumes a value expression and classifies it.
    fn parse_value(&mut self, stop_at_newline: bool) -> (Value, usize) {
        let first = self.pos;
        let mut depth = 0usize;
        while let Some(tok) = self.peek() {
            if depth == 0 {
                if let Tok::Punct("," | ";" | "}" | ")" | "]") = tok.tok { break }
                if stop_at_newline && self.pos > first {
                    let prev = &self.toks[self.pos - 1];
                    if tok.line > prev.end_line && !is_continuation(&prev.tok) {
                        break;
                    }
                }
            }
            match tok.tok {
                Tok::Punct("{" | "(" | "[") => depth += 1,
                Tok::Punct("}" | ")" | "]") => depth = depth.saturating_sub(1),
                _ => {}
            }
            self.pos += 1;
        }
        let line = self.toks.get(first).map_or(0, |t| t.line);
        (self.classify(first, self.pos), line)
    }

    fn classify(&self, from: usize, to: usize) -> Value {
        let raw = self.raw_text(from, to);
        let toks = &self.toks[from..to];
        let interpolated = |t: &Token| match t.tok {
            Tok::Str { double: true } => has_interpolation(&self.src[t.start..t.end]),
            _ => false,
        };
        match toks {
            [] => Value::null(),
            [t] => match &t.tok {
                Tok::Str { .. } => Value::new(ValueKind::String, raw, interpolated(t)),
                Tok::Num => Value::new(ValueKind::Integer, raw, false),
                Tok::Var(_) => Value::new(ValueKind::Reference, raw, true),
                Tok::Ident(w) if w == "true" || w == "false" => {
                    Value::new(ValueKind::Boolean, raw, false)
                }
                Tok::Ident(w) if w == "undef" => Value::new(ValueKind::Null, raw, false),
                _ => Value::new(ValueKind::String, raw, false),
            },
            [Token { tok: Tok::Ident(_), .. }, Token { tok: Tok::Punct("("), .. }, .., Token { tok: Tok::Punct(")"), .. }]
                if self.closes_at_end(from + 1, to) =>
            {
                Value::new(ValueKind::Reference, raw, true)
            }
            _ => {
                let has_var = toks
                    .iter()
                    .any(|t| matches!(t.tok, Tok::Var(_)) || interpolated(t));
                Value::new(ValueKind::String, raw, has_var)
            }
        }
    }

    /// True when the bracket at `open` is matched by the last token before `to`.
    fn closes_at_end(&self, open: usize, to: usize) -> bool {
        let mut depth = 0i32;
        for (i, t) in self.toks[open..to].iter().enumerate() {
            match t.tok {
                Tok::Punct("(" | "[" | "{") => depth += 1,
                Tok::Punct(")" | "]" | "}") => {
                    depth -= 1;
                    if depth == 0 {
                        return open + i == to - 1;
                    }
                }
                _ => {}
            }
        }
        false
    }

    fn parse_assignment(&mut self) -> Node {
        let var_tok = self.toks[self.pos].clone();
        let name = match &var_tok.tok {
            Tok::Var(n) => n.clone(),
            _ => unreachable!("caller checked for a variable token"),
        };
        self.pos += 2;
        let (value, _) = self.parse_value(true);
        Node::Variable(Variable {
            name,
            value,
            location: self.location(&var_tok),
        })
    }

    fn expect_punct(&mut self, p: &str) -> Result<Token, ParseError> {
        match self.peek() {
            Some(t) if matches!(t.tok, Tok::Punct(q) if q == p) => {
                let t = t.clone();
                self.pos += 1;
                Ok(t)
            }
            Some(t) => Err(ParseError::new(t.line, format!("expected '{p}'"))),
            None => Err(ParseError::new(
                self.toks.last().map_or(1, |t| t.end_line),
                format!("expected '{p}' before end of file"),
            )),
        }
    }

    fn parse_class(&mut self) -> Result<Node, ParseError> {
        let keyword = self.toks[self.pos].clone();
        let name = match &self.toks[self.pos + 1].tok {
            Tok::Ident(n) => n.clone(),
            _ => unreachable!("caller checked for a class name"),
        };
        self.pos += 2;
        let mut block = UnitBlock::new(
            name,
            BlockKind::Class,
            Technology::Puppet,
            self.location(&keyword),
        );
        if self.is_punct(0, "(") {
            self.pos += 1;
            self.parse_parameters(&mut block.children)?;
        }
        if self.is_ident(0, "inherits") {
            self.pos += 2;
        }
        if !self.is_punct(0, "{") {
            let line = self.peek().map_or(keyword.line, |t| t.line);
            self.errors.push((line, "class without body".to_string()));
            self.skipped.push(SkippedRegion {
                start_line: keyword.line,
                end_line: line,
                reason: "malformed class".into(),
            });
            return Ok(Node::Block(block));
        }
        let open = self.expect_punct("{")?;
        self.parse_body(Some(&open), &mut block.children)?;
        Ok(Node::Block(block))
    }

    /// `(Type $name = default, ...)` up to and including the closing paren.
    fn parse_parameters(&mut self, out: &mut Vec<Node>) -> Result<(), ParseError> {
        loop {
            let Some(tok) = self.peek().cloned() else {
                return Err(ParseError::new(
                    self.toks.last().map_or(1, |t| t.line),
                    "unclosed parameter list",
                ));
            };
            self.flush_comments(tok.start, out);
            match &tok.tok {
                Tok::Punct(")") => {
                    self.pos += 1;
                    return Ok(());
                }
                Tok::Punct(",") => self.pos += 1,
                Tok::Var(name) => {
                    self.pos += 1;
                    if self.is_punct(0, "=") {
                        self.pos += 1;
                        let (value, _) = self.parse_value(false);
                        out.push(Node::Variable(Variable {
                            name: name.clone(),
                            value,
                            location: self.location(&tok),
                        }));
                    }
                }
                _ => {
                    // type annotations such as String[1] or Optional[Integer]
                    self.skip_balanced_token();
                }
            }
        }
    }

    fn skip_balanced_token(&mut self) {
        let mut depth = 0usize;
        while let Some(tok) = self.peek() {
            match tok.tok {
                Tok::Punct("(" | "[" | "{") => depth += 1,
                Tok::Punct(")" | "]" | "}") => {
                    if depth == 0 {
                        return;
                    }
                    depth -= 1;
                }
                _ => {}
            }
            self.pos += 1;
            if depth == 0 {
                return;
            }
        }
    }

    fn parse_resource(&mut self, type_offset: usize, out: &mut Vec<Node>) -> Result<(), ParseError> {
        self.pos += type_offset;
        let type_tok = self.toks[self.pos].clone();
        let unit_type = match &type_tok.tok {
            Tok::Ident(w) => w.trim_start_matches("::").to_string(),
            _ => unreachable!("caller checked for a resource type"),
        };
        self.pos += 1;
        let open = self.expect_punct("{")?;
        let mut trailing_comments = Vec::new();
        loop {
            let Some(tok) = self.peek().cloned() else {
                return Err(ParseError::new(open.line, "unclosed resource body"));
            };
            if tok.tok == Tok::Punct("}") {
                self.pos += 1;
                break;
            }
            if tok.tok == Tok::Punct(";") {
                self.pos += 1;
                continue;
            }
            // title up to ':' at depth zero
            let title_start = self.pos;
            let mut depth = 0usize;
            while let Some(t) = self.peek() {
                match t.tok {
                    Tok::Punct(":") if depth == 0 => break,
                    Tok::Punct("}") if depth == 0 => break,
                    Tok::Punct("{" | "(" | "[") => depth += 1,
                    Tok::Punct("}" | ")" | "]") => depth = depth.saturating_sub(1),
                    _ => {}
                }
                self.pos += 1;
            }
            if !self.is_punct(0, ":") {
                self.errors.push((tok.line, "resource body without title".into()));
                continue;
            }
            let title_end = self.pos;
            self.pos += 1;
            let title = match &self.toks[title_start..title_end] {
                [t @ Token { tok: Tok::Str { .. }, .. }] => {
                    crate::ir::strip_quotes(&self.src[t.start..t.end]).to_string()
                }
                _ => self.raw_text(title_start, title_end),
            };
            let title_tok = self.toks[title_start.min(title_end.saturating_sub(1))].clone();
            let mut unit = AtomicUnit {
                unit_type: unit_type.clone(),
                title,
                attributes: Vec::new(),
                location: self.location(&title_tok),
            };
            self.parse_attributes(&mut unit, &mut trailing_comments)?;
            out.push(Node::Atomic(unit));
            out.append(&mut trailing_comments);
        }
        Ok(())
    }

    fn parse_attributes(
        &mut self,
        unit: &mut AtomicUnit,
        comments: &mut Vec<Node>,
    ) -> Result<(), ParseError> {
        loop {
            let Some(tok) = self.peek().cloned() else {
                return Ok(());
            };
            self.flush_comments(tok.start, comments);
            match &tok.tok {
                Tok::Punct("}") => return Ok(()),
                Tok::Punct(";") => {
                    self.pos += 1;
                    return Ok(());
                }
                Tok::Punct(",") => self.pos += 1,
                Tok::Ident(name) if self.is_punct(1, "=>") || self.is_punct(1, "+>") => {
                    self.pos += 2;
                    let (value, _) = self.parse_value(false);
                    unit.attributes.push(Attribute {
                        name: name.clone(),
                        value,
                        location: self.location(&tok),
                    });
                }
                Tok::Punct("*") if self.is_punct(1, "=>") => {
                    self.pos += 2;
                    self.parse_value(false);
                }
                _ => {
                    self.errors.push((tok.line, "unexpected token in attribute list".into()));
                    let start = tok.line;
                    let mut depth = 0usize;
                    while let Some(t) = self.peek() {
                        match t.tok {
                            Tok::Punct("," | ";" | "}") if depth == 0 => break,
                            Tok::Punct("{" | "(" | "[") => depth += 1,
                            Tok::Punct("}" | ")" | "]") => depth = depth.saturating_sub(1),
                            _ => {}
                        }
                        self.pos += 1;
                    }
                    let end = self.toks[self.pos.saturating_sub(1)].end_line;
                    self.skipped.push(SkippedRegion {
                        start_line: start,
                        end_line: end,
                        reason: "malformed attribute".into(),
                    });
                }
            }
        }
    }

    fn parse_case(&mut self) -> Result<Node, ParseError> {
        let keyword = self.toks[self.pos].clone();
        self.pos += 1;
        let subject_start = self.pos;
        while let Some(t) = self.peek() {
            if t.tok == Tok::Punct("{") {
                break;
            }
            self.pos += 1;
        }
        let subject = self.classify(subject_start, self.pos);
        let open = self.expect_punct("{")?;
        let mut branches: Vec<Branch> = Vec::new();
        let mut has_default = false;
        loop {
            let Some(tok) = self.peek().cloned() else {
                return Err(ParseError::new(open.line, "unclosed case statement"));
            };
            if let Some(last) = branches.last_mut() {
                self.flush_comments(tok.start, &mut last.body);
            }
            if tok.tok == Tok::Punct("}") {
                self.pos += 1;
                break;
            }
            let guard_start = self.pos;
            while let Some(t) = self.peek() {
                if matches!(t.tok, Tok::Punct(":") | Tok::Punct("{") | Tok::Punct("}")) {
                    break;
                }
                self.pos += 1;
            }
            let guard_end = self.pos;
            if guard_end == guard_start || !self.is_punct(0, ":") {
                return Err(ParseError::new(tok.line, "malformed case branch"));
            }
            self.pos += 1;
            if self.toks[guard_start..guard_end]
                .iter()
                .any(|t| t.tok == Tok::Ident("default".into()))
            {
                has_default = true;
            }
            let guard = self.raw_text(guard_start, guard_end);
            let body_open = self.expect_punct("{")?;
            let mut body = Vec::new();
            self.parse_body(Some(&body_open), &mut body)?;
            branches.push(Branch { guard, body });
        }
        Ok(Node::Condition(ConditionBlock {
            subject,
            branches,
            has_default_branch: has_default,
            location: self.location(&keyword),
        }))
    }

    fn parse_if(&mut self, out: &mut Vec<Node>) -> Result<(), ParseError> {
        loop {
            // skip the keyword and condition up to the body
            self.pos += 1;
            while let Some(t) = self.peek() {
                if t.tok == Tok::Punct("{") {
                    break;
                }
                self.pos += 1;
            }
            let open = self.expect_punct("{")?;
            self.parse_body(Some(&open), out)?;
            if self.is_ident(0, "elsif") || self.is_ident(0, "else") {
                continue;
            }
            return Ok(());
        }
    }
}

fn is_continuation(tok: &Tok) -> bool {
    matches!(
        tok,
        Tok::Punct("=" | "=>" | "+>" | "," | "+" | "-" | "*" | "?" | "(" | "[" | "{" | "==" | "!=" | "=~" | "!~" | "<" | ">" | ">=" | "<=")
    ) || matches!(tok, Tok::Ident(w) if w == "and" || w == "or" || w == "in")
}

/// `${...}` or a bare `$name` inside a double-quoted literal.
pub(crate) fn has_interpolation(text: &str) -> bool {
    let bytes = text.as_bytes();
    bytes.iter().enumerate().any(|(i, &b)| {
        b == b'$'
            && (i == 0 || bytes[i - 1] != b'\\')
            && bytes
                .get(i + 1)
                .is_some_and(|&n| n == b'{' || n == b'_' || n == b':' || n.is_ascii_alphabetic())
    })
}

pub fn parse_puppet(content: &str, path: &str) -> Result<ParseReport, ParseError> {
    let (toks, comments) = Lexer::new(content).run();
    let comment_count = comments.len();
    let mut parser = Parser {
        src: content,
        path,
        toks,
        pos: 0,
        comments,
        next_comment: 0,
        skipped: Vec::new(),
        errors: Vec::new(),
    };
    let mut block = UnitBlock::new(
        path,
        BlockKind::Script,
        Technology::Puppet,
        SourceLocation::new(path, 1, 0),
    );
    parser.parse_body(None, &mut block.children)?;
    Ok(ParseReport {
        block,
        skipped_regions: parser.skipped,
        comment_count,
        parse_errors: parser.errors,
    })
}
