use rand::seq::SliceRandom;
use rand::Rng;

use super::DatasetError;
use crate::penman::{AmrGraph, Edge, NodeId, NodeLabel};
use crate::prelude::*;
use crate::rng::seeded_rng;

/// One random edit of a gold graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CorruptionOp {
    /// Removes an edge and whatever becomes unreachable.
    DeleteEdge,
    /// Gives a variable-to-variable edge another role seen in the corpus.
    RelabelRelation,
    /// Exchanges `:ARG0` and `:ARG1` below one node.
    SwapArgs,
    /// Deletes a `:polarity` edge, or adds `:polarity -` if there is none.
    TogglePolarity,
    /// Gives a variable another concept seen in the corpus.
    ReplaceConcept,
    /// Removes a `:wiki` edge.
    DeleteWiki,
}

impl CorruptionOp {
    pub const ALL: [CorruptionOp; 6] = [
        CorruptionOp::DeleteEdge,
        CorruptionOp::RelabelRelation,
        CorruptionOp::SwapArgs,
        CorruptionOp::TogglePolarity,
        CorruptionOp::ReplaceConcept,
        CorruptionOp::DeleteWiki,
    ];
}

/// Concepts and relation roles to draw replacements from.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorruptionPool {
    pub concepts: Vec<String>,
    pub relations: Vec<String>,
}

const FALLBACK_CONCEPTS: [&str; 2] = ["thing", "person"];
const FALLBACK_RELATIONS: [&str; 4] = [":ARG0", ":ARG1", ":ARG2", ":mod"];

impl CorruptionPool {
    /// Sorted distinct concepts and variable-to-variable roles of `graphs`.
    pub fn from_graphs<'a>(graphs: impl IntoIterator<Item = &'a AmrGraph>) -> Self {
        let (mut concepts, mut relations) = (BTreeSet::new(), BTreeSet::new());
        for g in graphs {
            concepts.extend(g.variables().filter_map(|v| g.concept(v)).map(str::to_owned));
            relations.extend(g.edges().iter().filter(|e| g.node(e.target).is_variable()).map(|e| e.role.clone()));
        }
        CorruptionPool { concepts: concepts.into_iter().collect(), relations: relations.into_iter().collect() }
    }

    fn pick_other(&self, pool: &[String], fallback: &[&str], current: &str, rng: &mut impl Rng) -> String {
        let others: Vec<&str> = pool.iter().map(String::as_str).filter(|c| *c != current).collect();
        let others = if others.is_empty() {
            fallback.iter().copied().filter(|c| *c != current).collect()
        } else {
            others
        };
        (*others.choose(rng).expect("fallbacks offer two choices")).to_owned()
    }
}

fn role_is(e: &Edge, role: &str) -> bool {
    e.role.eq_ignore_ascii_case(role)
}

fn applicable(g: &AmrGraph, op: CorruptionOp) -> bool {
    match op {
        CorruptionOp::DeleteEdge => !g.edges().is_empty(),
        CorruptionOp::RelabelRelation => g.edges().iter().any(|e| g.node(e.target).is_variable()),
        CorruptionOp::SwapArgs => g.edges().iter().any(|e| role_is(e, ":ARG0") || role_is(e, ":ARG1")),
        CorruptionOp::TogglePolarity | CorruptionOp::ReplaceConcept => true,
        CorruptionOp::DeleteWiki => g.edges().iter().any(|e| role_is(e, ":wiki")),
    }
}

fn positions(g: &AmrGraph, keep: impl Fn(&Edge) -> bool) -> Vec<usize> {
    g.edges().iter().enumerate().filter(|(_, e)| keep(e)).map(|(i, _)| i).collect()
}

fn remove_edge(g: &mut AmrGraph, i: usize) {
    g.edges_mut().remove(i);
    g.prune_unreachable();
}

fn apply(g: &mut AmrGraph, op: CorruptionOp, pool: &CorruptionPool, rng: &mut impl Rng) -> Result<(), DatasetError> {
    if !applicable(g, op) {
        return Err(DatasetError::Uncorruptible(op));
    }
    match op {
        CorruptionOp::DeleteEdge => {
            let i = rng.gen_range(0..g.edges().len());
            remove_edge(g, i);
        }
        CorruptionOp::RelabelRelation => {
            let candidates = positions(g, |e| g.node(e.target).is_variable());
            let i = *candidates.choose(rng).expect("applicable");
            let role = pool.pick_other(&pool.relations, &FALLBACK_RELATIONS, &g.edges()[i].role, rng);
            g.edges_mut()[i].role = role;
        }
        CorruptionOp::SwapArgs => {
            let candidates = positions(g, |e| role_is(e, ":ARG0") || role_is(e, ":ARG1"));
            let i = *candidates.choose(rng).expect("applicable");
            let (source, first) = (g.edges()[i].source, role_is(&g.edges()[i], ":ARG0"));
            let (this, other) = if first { (":ARG1", ":ARG0") } else { (":ARG0", ":ARG1") };
            let partner = g.edges().iter().position(|e| e.source == source && role_is(e, this));
            g.edges_mut()[i].role = this.to_owned();
            if let Some(j) = partner {
                g.edges_mut()[j].role = other.to_owned();
            }
        }
        CorruptionOp::TogglePolarity => {
            let existing = positions(g, |e| role_is(e, ":polarity"));
            if let Some(&i) = existing.choose(rng) {
                remove_edge(g, i);
            } else {
                let vars: Vec<NodeId> = g.variables().collect();
                let source = *vars.choose(rng).expect("the root is a variable");
                let target = NodeId(g.nodes().len());
                g.nodes_mut().push(NodeLabel::Constant { value: "-".into(), quoted: false });
                g.edges_mut().push(Edge { source, role: ":polarity".into(), target });
            }
        }
        CorruptionOp::ReplaceConcept => {
            let vars: Vec<NodeId> = g.variables().collect();
            let v = *vars.choose(rng).expect("the root is a variable");
            let current = g.concept(v).unwrap_or_default().to_owned();
            let fresh = pool.pick_other(&pool.concepts, &FALLBACK_CONCEPTS, &current, rng);
            if let NodeLabel::Variable { concept, .. } = &mut g.nodes_mut()[v.0] {
                *concept = fresh;
            }
        }
        CorruptionOp::DeleteWiki => {
            let candidates = positions(g, |e| role_is(e, ":wiki"));
            let i = *candidates.choose(rng).expect("applicable");
            remove_edge(g, i);
        }
    }
    debug_assert!(g.validate().is_ok());
    Ok(())
}

/// Applies `ops` in order. Fails if one of them finds nothing to edit.
pub fn corrupt_with(gold: &AmrGraph, ops: &[CorruptionOp], pool: &CorruptionPool, seed: u64) -> Result<AmrGraph, DatasetError> {
    let mut rng = seeded_rng(seed);
    let mut g = gold.clone();
    for &op in ops {
        apply(&mut g, op, pool, &mut rng)?;
    }
    Ok(g)
}

/// Applies `ops` uniformly drawn edits. An edit with nothing to act on is
/// replaced by a concept replacement, which every graph admits.
pub fn corrupt(gold: &AmrGraph, ops: usize, pool: &CorruptionPool, seed: u64) -> AmrGraph {
    let mut rng = seeded_rng(seed);
    let mut g = gold.clone();
    for _ in 0..ops {
        let mut op = *CorruptionOp::ALL.choose(&mut rng).expect("non-empty");
        if !applicable(&g, op) {
            op = CorruptionOp::ReplaceConcept;
        }
        apply(&mut g, op, pool, &mut rng).expect("applicability checked");
    }
    g
}
