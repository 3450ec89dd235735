use core::fmt::Write;

use super::graph::{AmrGraph, NodeId, NodeLabel};
use crate::prelude::*;

/// One line of a simplified graph: its indentation depth and its tokens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineTokens {
    pub depth: usize,
    pub tokens: Vec<String>,
}

/// Variable-free, bracket-free line form of a graph. Structure is carried by
/// depth alone; re-entrancies appear as `*k*` pointer tokens.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimplifiedAmr {
    pub lines: Vec<LineTokens>,
}

impl SimplifiedAmr {
    pub fn new(lines: Vec<LineTokens>) -> Self {
        SimplifiedAmr { lines }
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> + '_ {
        self.lines.iter().flat_map(|l| l.tokens.iter().map(String::as_str))
    }

    /// Tab-indented text, one line per entry, tokens separated by a space.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, line) in self.lines.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            for _ in 0..line.depth {
                out.push('\t');
            }
            let _ = write!(out, "{}", line.tokens.join(" "));
        }
        out
    }

    /// Inverse of [`SimplifiedAmr::to_text`].
    pub fn from_text(text: &str) -> Self {
        let lines = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let depth = l.chars().take_while(|&c| c == '\t').count();
                let tokens = l[depth..].split(' ').filter(|t| !t.is_empty()).map(str::to_owned).collect();
                LineTokens { depth, tokens }
            })
            .collect();
        SimplifiedAmr { lines }
    }
}

pub(crate) fn pointer_token(k: usize) -> String {
    format!("*{k}*")
}

/// Grid-token normal form: lowercase, no quotation marks, inner whitespace
/// folded to `_` so a token never splits.
pub fn normalize_token(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for ch in raw.chars() {
        if ch == '"' {
            continue;
        }
        if ch.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push('_');
            pending_space = false;
        }
        for lc in ch.to_lowercase() {
            out.push(lc);
        }
    }
    out
}

/// Replaces variables by their concepts, introduces `*k*` pointers for
/// re-entrant variables (numbered in first-mention order), joins `:name`
/// sub-structures, and lowercases everything.
pub fn simplify(g: &AmrGraph) -> SimplifiedAmr {
    let mentions = g.mention_counts();
    let mut s = Simplifier {
        g,
        reentrant: mentions.iter().map(|&c| c >= 2).collect(),
        pointer: vec![None; g.node_count()],
        next_pointer: 0,
        visited: vec![false; g.node_count()],
        lines: Vec::new(),
    };
    let root = g.root();
    let head = s.node_head(root);
    s.lines.push(LineTokens { depth: 0, tokens: head });
    s.children(root, 0);
    SimplifiedAmr { lines: s.lines }
}

struct Simplifier<'a> {
    g: &'a AmrGraph,
    reentrant: Vec<bool>,
    pointer: Vec<Option<usize>>,
    next_pointer: usize,
    visited: Vec<bool>,
    lines: Vec<LineTokens>,
}

impl Simplifier<'_> {
    /// Tokens for the defining mention of a variable: optional pointer, then
    /// concept. Marks the node visited.
    fn node_head(&mut self, id: NodeId) -> Vec<String> {
        self.visited[id.0] = true;
        let mut toks = Vec::with_capacity(2);
        if self.reentrant[id.0] {
            let k = self.next_pointer;
            self.next_pointer += 1;
            self.pointer[id.0] = Some(k);
            toks.push(pointer_token(k));
        }
        toks.push(normalize_token(self.g.concept(id).unwrap_or_default()));
        toks
    }

    fn children(&mut self, id: NodeId, depth: usize) {
        let edges: Vec<_> = self.g.out_edges(id).cloned().collect();
        for e in edges {
            let mut toks = vec![normalize_token(&e.role)];
            match self.g.node(e.target) {
                NodeLabel::Constant { value, .. } => {
                    toks.push(normalize_token(value));
                    self.lines.push(LineTokens { depth: depth + 1, tokens: toks });
                }
                NodeLabel::Variable { .. } if self.visited[e.target.0] => {
                    let tok = match self.pointer[e.target.0] {
                        Some(k) => pointer_token(k),
                        // A visited variable is always re-entrant; keep the
                        // concept if that ever fails to hold.
                        None => normalize_token(self.g.concept(e.target).unwrap_or_default()),
                    };
                    toks.push(tok);
                    self.lines.push(LineTokens { depth: depth + 1, tokens: toks });
                }
                NodeLabel::Variable { .. } => {
                    if e.role.eq_ignore_ascii_case(":name") {
                        if let Some(parts) = self.name_parts(e.target) {
                            self.visited[e.target.0] = true;
                            toks.extend(parts);
                            self.lines.push(LineTokens { depth: depth + 1, tokens: toks });
                            continue;
                        }
                    }
                    toks.extend(self.node_head(e.target));
                    self.lines.push(LineTokens { depth: depth + 1, tokens: toks });
                    self.children(e.target, depth + 1);
                }
            }
        }
    }

    /// The ordered `:opN` strings of a collapsible name node: concept `name`,
    /// not re-entrant, and only constant `:opN` children.
    fn name_parts(&self, id: NodeId) -> Option<Vec<String>> {
        if self.reentrant[id.0] || !self.g.concept(id)?.eq_ignore_ascii_case("name") {
            return None;
        }
        let mut ops = Vec::new();
        for e in self.g.out_edges(id) {
            let idx: usize = e.role.strip_prefix(":op").or_else(|| e.role.strip_prefix(":OP"))?.parse().ok()?;
            match self.g.node(e.target) {
                NodeLabel::Constant { value, .. } => ops.push((idx, normalize_token(value))),
                NodeLabel::Variable { .. } => return None,
            }
        }
        ops.sort_by_key(|(i, _)| *i);
        Some(ops.into_iter().map(|(_, v)| v).collect())
    }
}
