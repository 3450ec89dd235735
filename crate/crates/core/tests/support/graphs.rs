//! Random small graphs for property and acceptance checks.

use amrq_core::penman::{AmrGraph, Edge, NodeId, NodeLabel};
use amrq_core::seeded_rng;
use rand::Rng;

pub const CONCEPTS: [&str; 8] = ["see-01", "want-01", "person", "dog", "name", "city", "big", "run-02"];
pub const ROLES: [&str; 5] = [":ARG0", ":ARG1", ":ARG2", ":mod", ":location"];

/// A random rooted graph: a spanning tree over variables, a few reentrant
/// edges and a few constants.
pub fn random_graph(seed: u64) -> AmrGraph {
    let mut rng = seeded_rng(seed);
    let n = rng.gen_range(1..7);
    let mut nodes: Vec<NodeLabel> = (0..n)
        .map(|i| NodeLabel::Variable { name: format!("v{i}"), concept: CONCEPTS[rng.gen_range(0..CONCEPTS.len())].into() })
        .collect();
    let mut edges = Vec::new();
    let push = |edges: &mut Vec<Edge>, s: usize, role: &str, t: usize| {
        if !edges.iter().any(|e: &Edge| e.source.0 == s && e.role == role && e.target.0 == t) {
            edges.push(Edge { source: NodeId(s), role: role.into(), target: NodeId(t) });
        }
    };
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        push(&mut edges, parent, ROLES[rng.gen_range(0..ROLES.len())], i);
    }
    for _ in 0..rng.gen_range(0..3) {
        let (s, t) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if s != t {
            push(&mut edges, s, ROLES[rng.gen_range(0..ROLES.len())], t);
        }
    }
    for _ in 0..rng.gen_range(0..3) {
        let s = rng.gen_range(0..n);
        let (role, value, quoted) = match rng.gen_range(0..3) {
            0 => (":polarity", "-", false),
            1 => (":wiki", "Q42", true),
            _ => (":op1", "Ann", true),
        };
        nodes.push(NodeLabel::Constant { value: value.into(), quoted });
        edges.push(Edge { source: NodeId(s), role: role.into(), target: NodeId(nodes.len() - 1) });
    }
    AmrGraph::new(NodeId(0), nodes, edges).expect("generator builds valid graphs")
}
