use rand::seq::SliceRandom;

use super::graph::AmrGraph;
use crate::prelude::*;
use crate::rng::seeded_rng;

/// Returns a copy of `g` in which every node's outgoing edges are visited in
/// an independent uniformly random order. The triple set is unchanged; only
/// the serialization order moves.
pub fn randomize_surface(g: &AmrGraph, seed: u64) -> AmrGraph {
    let mut rng = seeded_rng(seed);
    let mut out = g.clone();
    let mut slots: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, e) in g.edges().iter().enumerate() {
        slots.entry(e.source.0).or_default().push(i);
    }
    let edges = out.edges_mut();
    for positions in slots.values() {
        if positions.len() < 2 {
            continue;
        }
        let mut order = positions.clone();
        order.shuffle(&mut rng);
        for (&dst, &src) in positions.iter().zip(order.iter()) {
            edges[dst] = g.edges()[src].clone();
        }
    }
    out
}
