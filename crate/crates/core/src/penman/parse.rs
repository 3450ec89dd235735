use core::fmt;

use super::graph::{AmrGraph, Edge, NodeId, NodeLabel};
use crate::prelude::*;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PenmanError {
    UnbalancedParens { offset: usize },
    DuplicateVariableBinding { variable: String },
    EmptyGraph,
    DanglingReference { variable: String },
    UnexpectedToken { offset: usize, found: String },
}

impl fmt::Display for PenmanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PenmanError::UnbalancedParens { offset } => {
                write!(f, "unbalanced parentheses at byte {offset}")
            }
            PenmanError::DuplicateVariableBinding { variable } => {
                write!(f, "variable {variable:?} is bound more than once")
            }
            PenmanError::EmptyGraph => write!(f, "no graph found"),
            PenmanError::DanglingReference { variable } => {
                write!(f, "variable {variable:?} is referenced but never bound")
            }
            PenmanError::UnexpectedToken { offset, found } => {
                write!(f, "unexpected {found:?} at byte {offset}")
            }
        }
    }
}

impl core::error::Error for PenmanError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok<'a> {
    Open,
    Close,
    Slash,
    Role(&'a str),
    Symbol(&'a str),
    Quoted(String),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, pos: 0 }
    }

    fn skip_trivia(&mut self) {
        let bytes = self.src.as_bytes();
        loop {
            while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            // `#` starts a comment only at the beginning of a line.
            if self.pos < bytes.len() && bytes[self.pos] == b'#' && self.at_line_start() {
                while self.pos < bytes.len() && bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
    }

    fn at_line_start(&self) -> bool {
        self.src[..self.pos]
            .bytes()
            .rev()
            .take_while(|&b| b != b'\n')
            .all(|b| b == b' ' || b == b'\t' || b == b'\r')
    }

    /// Returns the next token with its byte offset. `var_mode` stops symbols
    /// at `/` so that `(b/baby)` tokenizes.
    fn next(&mut self, var_mode: bool) -> Result<Option<(usize, Tok<'a>)>, PenmanError> {
        self.skip_trivia();
        let bytes = self.src.as_bytes();
        let start = self.pos;
        let Some(&c) = bytes.get(start) else {
            return Ok(None);
        };
        let tok = match c {
            b'(' => {
                self.pos += 1;
                Tok::Open
            }
            b')' => {
                self.pos += 1;
                Tok::Close
            }
            b'/' => {
                self.pos += 1;
                Tok::Slash
            }
            b'"' => {
                let mut out = String::new();
                let mut i = start + 1;
                let mut closed = false;
                let mut chars = self.src[i..].char_indices();
                while let Some((off, ch)) = chars.next() {
                    match ch {
                        '"' => {
                            i += off + 1;
                            closed = true;
                            break;
                        }
                        '\\' => {
                            if let Some((_, esc)) = chars.next() {
                                out.push(esc);
                            }
                        }
                        _ => out.push(ch),
                    }
                }
                if !closed {
                    return Err(PenmanError::UnexpectedToken {
                        offset: start,
                        found: "unterminated string".into(),
                    });
                }
                self.pos = i;
                Tok::Quoted(out)
            }
            _ => {
                let mut end = start;
                while end < bytes.len() {
                    let b = bytes[end];
                    if b.is_ascii_whitespace() || b == b'(' || b == b')' || b == b'"' {
                        break;
                    }
                    if var_mode && b == b'/' {
                        break;
                    }
                    end += 1;
                }
                self.pos = end;
                let text = &self.src[start..end];
                if c == b':' {
                    Tok::Role(text)
                } else {
                    Tok::Symbol(text)
                }
            }
        };
        Ok(Some((start, tok)))
    }
}

enum Value {
    Node(Box<AstNode>),
    Atom { text: String, quoted: bool },
}

struct AstNode {
    var: String,
    concept: String,
    edges: Vec<(String, Value)>,
}

struct Parser<'a> {
    lex: Lexer<'a>,
}

impl<'a> Parser<'a> {
    fn bump(&mut self, var_mode: bool) -> Result<Option<(usize, Tok<'a>)>, PenmanError> {
        self.lex.next(var_mode)
    }

    fn eof(&self) -> PenmanError {
        PenmanError::UnbalancedParens { offset: self.lex.src.len() }
    }

    fn node(&mut self) -> Result<AstNode, PenmanError> {
        // caller consumed `(`
        let var = match self.bump(true)? {
            Some((_, Tok::Symbol(s))) => s.to_owned(),
            Some((off, t)) => return Err(unexpected(off, &t)),
            None => return Err(self.eof()),
        };
        match self.bump(false)? {
            Some((_, Tok::Slash)) => {}
            Some((off, t)) => return Err(unexpected(off, &t)),
            None => return Err(self.eof()),
        }
        let concept = match self.bump(false)? {
            Some((_, Tok::Symbol(s))) => s.to_owned(),
            Some((_, Tok::Quoted(s))) => s,
            Some((off, t)) => return Err(unexpected(off, &t)),
            None => return Err(self.eof()),
        };
        let mut edges = Vec::new();
        loop {
            match self.bump(false)? {
                Some((_, Tok::Close)) => break,
                Some((_, Tok::Role(role))) => {
                    let value = match self.bump(false)? {
                        Some((_, Tok::Open)) => Value::Node(Box::new(self.node()?)),
                        Some((_, Tok::Symbol(s))) => Value::Atom { text: s.to_owned(), quoted: false },
                        Some((_, Tok::Quoted(s))) => Value::Atom { text: s, quoted: true },
                        Some((off, t)) => return Err(unexpected(off, &t)),
                        None => return Err(self.eof()),
                    };
                    edges.push((role.to_owned(), value));
                }
                Some((off, t)) => return Err(unexpected(off, &t)),
                None => return Err(self.eof()),
            }
        }
        Ok(AstNode { var, concept, edges })
    }
}

fn unexpected(offset: usize, t: &Tok<'_>) -> PenmanError {
    let found = match t {
        Tok::Open => "(".to_owned(),
        Tok::Close => return PenmanError::UnbalancedParens { offset },
        Tok::Slash => "/".to_owned(),
        Tok::Role(s) | Tok::Symbol(s) => (*s).to_owned(),
        Tok::Quoted(s) => format!("\"{s}\""),
    };
    PenmanError::UnexpectedToken { offset, found }
}

/// Symbols shaped like AMR variables (`x`, `b2`, `s10`). An unquoted atom of
/// this shape that is never bound is reported as a dangling reference rather
/// than read as a constant.
pub(crate) fn looks_like_variable(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => chars.all(|c| c.is_ascii_digit()),
        _ => false,
    }
}

/// Parses one PENMAN expression. Lines starting with `#` are ignored.
pub fn parse_penman(text: &str) -> Result<AmrGraph, PenmanError> {
    let mut p = Parser { lex: Lexer::new(text) };
    let ast = match p.bump(false)? {
        None => return Err(PenmanError::EmptyGraph),
        Some((_, Tok::Open)) => p.node()?,
        Some((off, t)) => return Err(unexpected(off, &t)),
    };
    if let Some((off, t)) = p.bump(false)? {
        return Err(unexpected(off, &t));
    }

    // Variables get ids in binding (pre-)order, constants after them.
    let mut var_ids: BTreeMap<String, NodeId> = BTreeMap::new();
    let mut nodes = Vec::new();
    bind(&ast, &mut var_ids, &mut nodes)?;
    let mut edges = Vec::new();
    collect_edges(&ast, &var_ids, &mut nodes, &mut edges)?;
    Ok(AmrGraph::from_parts_unchecked(NodeId(0), nodes, edges))
}

fn bind(
    n: &AstNode,
    ids: &mut BTreeMap<String, NodeId>,
    nodes: &mut Vec<NodeLabel>,
) -> Result<(), PenmanError> {
    if ids.contains_key(&n.var) {
        return Err(PenmanError::DuplicateVariableBinding { variable: n.var.clone() });
    }
    ids.insert(n.var.clone(), NodeId(nodes.len()));
    nodes.push(NodeLabel::Variable { name: n.var.clone(), concept: n.concept.clone() });
    for (_, v) in &n.edges {
        if let Value::Node(child) = v {
            bind(child, ids, nodes)?;
        }
    }
    Ok(())
}

fn collect_edges(
    n: &AstNode,
    ids: &BTreeMap<String, NodeId>,
    nodes: &mut Vec<NodeLabel>,
    edges: &mut Vec<Edge>,
) -> Result<(), PenmanError> {
    let source = ids[&n.var];
    for (role, v) in &n.edges {
        match v {
            Value::Node(child) => {
                edges.push(Edge { source, role: role.clone(), target: ids[&child.var] });
                collect_edges(child, ids, nodes, edges)?;
            }
            Value::Atom { text, quoted } => {
                let target = match ids.get(text) {
                    Some(&id) if !quoted => id,
                    _ => {
                        if !quoted && looks_like_variable(text) {
                            return Err(PenmanError::DanglingReference { variable: text.clone() });
                        }
                        nodes.push(NodeLabel::Constant { value: text.clone(), quoted: *quoted });
                        NodeId(nodes.len() - 1)
                    }
                };
                edges.push(Edge { source, role: role.clone(), target });
            }
        }
    }
    Ok(())
}
