use core::fmt::Write;

use super::graph::{AmrGraph, NodeId, NodeLabel};
use crate::prelude::*;

/// Writes `g` in indented PENMAN notation. Each edge starts a new line one
/// level deeper than its source; a variable is expanded at its first visit
/// and written bare afterwards.
pub fn serialize_penman(g: &AmrGraph, indent_width: usize) -> String {
    serialize_with(g, indent_width.max(1), false)
}

pub(crate) fn serialize_with(g: &AmrGraph, indent_width: usize, canonical: bool) -> String {
    let mut w = Writer {
        g,
        indent_width,
        canonical,
        out: String::new(),
        visited: vec![false; g.node_count()],
        names: vec![None; g.node_count()],
        next_name: 0,
    };
    w.node(g.root(), 0);
    w.out
}

struct Writer<'a> {
    g: &'a AmrGraph,
    indent_width: usize,
    canonical: bool,
    out: String,
    visited: Vec<bool>,
    names: Vec<Option<String>>,
    next_name: usize,
}

impl Writer<'_> {
    fn name(&mut self, id: NodeId) -> String {
        if !self.canonical {
            return self.g.variable_name(id).unwrap_or_default().to_owned();
        }
        if let Some(n) = &self.names[id.0] {
            return n.clone();
        }
        let n = format!("v{}", self.next_name);
        self.next_name += 1;
        self.names[id.0] = Some(n.clone());
        n
    }

    fn node(&mut self, id: NodeId, depth: usize) {
        self.visited[id.0] = true;
        let name = self.name(id);
        let concept = self.g.concept(id).unwrap_or_default();
        let _ = write!(self.out, "({name} / {concept}");
        let edges: Vec<_> = self.g.out_edges(id).cloned().collect();
        for e in edges {
            self.out.push('\n');
            for _ in 0..(depth + 1) * self.indent_width {
                self.out.push(' ');
            }
            self.out.push_str(&e.role);
            self.out.push(' ');
            match self.g.node(e.target) {
                NodeLabel::Constant { value, quoted } => {
                    if *quoted {
                        self.out.push('"');
                        for ch in value.chars() {
                            if ch == '"' || ch == '\\' {
                                self.out.push('\\');
                            }
                            self.out.push(ch);
                        }
                        self.out.push('"');
                    } else {
                        self.out.push_str(value);
                    }
                }
                NodeLabel::Variable { .. } => {
                    if self.visited[e.target.0] {
                        let n = self.name(e.target);
                        self.out.push_str(&n);
                    } else {
                        self.node(e.target, depth + 1);
                    }
                }
            }
        }
        self.out.push(')');
    }
}
