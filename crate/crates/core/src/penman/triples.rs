use super::graph::{AmrGraph, NodeLabel};
use crate::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TripleKind {
    Instance,
    Attribute,
    Relation,
}

/// A Smatch-style triple. Labels carry no leading `:`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub kind: TripleKind,
    pub source: String,
    pub label: String,
    pub target: String,
}

impl Triple {
    pub fn instance(var: &str, concept: &str) -> Self {
        Triple { kind: TripleKind::Instance, source: var.into(), label: "instance".into(), target: concept.into() }
    }

    pub fn attribute(var: &str, label: &str, value: &str) -> Self {
        Triple { kind: TripleKind::Attribute, source: var.into(), label: label.into(), target: value.into() }
    }

    pub fn relation(a: &str, label: &str, b: &str) -> Self {
        Triple { kind: TripleKind::Relation, source: a.into(), label: label.into(), target: b.into() }
    }
}

/// Label of the synthetic root attribute.
pub const TOP: &str = "TOP";

/// Roles ending in `-of` that are not inverses.
const NON_INVERTED: [&str; 3] = ["consist-of", "prep-out-of", "prep-on-behalf-of"];

/// Splits an inverse role into its base label. `arg0-of` gives `arg0`.
pub(crate) fn inverse_base(label: &str) -> Option<&str> {
    if NON_INVERTED.iter().any(|r| r.eq_ignore_ascii_case(label)) {
        return None;
    }
    label.strip_suffix("-of").or_else(|| label.strip_suffix("-OF")).filter(|b| !b.is_empty())
}

/// One instance triple per variable, one attribute triple per constant-valued
/// edge plus `(root, TOP, root-concept)`, one relation triple per
/// variable-to-variable edge. Inverse roles are flipped to their base label.
/// Case is kept; metrics lowercase before comparing.
pub fn extract_triples(g: &AmrGraph) -> Vec<Triple> {
    let mut out = Vec::with_capacity(g.node_count() + g.edges().len() + 1);
    for label in g.nodes() {
        if let NodeLabel::Variable { name, concept } = label {
            out.push(Triple::instance(name, concept));
        }
    }
    let root = g.root();
    out.push(Triple::attribute(
        g.variable_name(root).unwrap_or_default(),
        TOP,
        g.concept(root).unwrap_or_default(),
    ));
    for e in g.edges() {
        let src = g.variable_name(e.source).unwrap_or_default();
        let label = e.role.trim_start_matches(':');
        match g.node(e.target) {
            NodeLabel::Constant { value, .. } => out.push(Triple::attribute(src, label, value)),
            NodeLabel::Variable { name: tgt, .. } => match inverse_base(label) {
                Some(base) => out.push(Triple::relation(tgt, base, src)),
                None => out.push(Triple::relation(src, label, tgt)),
            },
        }
    }
    out
}
