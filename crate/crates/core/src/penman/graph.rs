use core::fmt;

use crate::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeLabel {
    /// A bound variable together with the concept it instantiates.
    Variable { name: String, concept: String },
    /// A constant; `quoted` remembers whether it was written as a string.
    Constant { value: String, quoted: bool },
}

impl NodeLabel {
    pub fn is_variable(&self) -> bool {
        matches!(self, NodeLabel::Variable { .. })
    }
}

/// A directed edge as written in the PENMAN text: `source` is the node whose
/// bracket contains the role, so inverse roles such as `:arg0-of` keep their
/// surface direction here.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub source: NodeId,
    pub role: String,
    pub target: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphError {
    RootNotVariable,
    NodeOutOfRange(usize),
    ConstantSource(usize),
    ConstantFanIn(usize),
    BadRole(String),
    DuplicateVariable(String),
    Unreachable(usize),
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::RootNotVariable => write!(f, "root must be a variable node"),
            GraphError::NodeOutOfRange(i) => write!(f, "edge refers to missing node {i}"),
            GraphError::ConstantSource(i) => write!(f, "constant node {i} has an outgoing edge"),
            GraphError::ConstantFanIn(i) => {
                write!(f, "constant node {i} must have exactly one incoming edge")
            }
            GraphError::BadRole(r) => write!(f, "relation label {r:?} does not start with ':'"),
            GraphError::DuplicateVariable(v) => write!(f, "variable {v:?} bound twice"),
            GraphError::Unreachable(i) => write!(f, "node {i} is not reachable from the root"),
        }
    }
}

impl core::error::Error for GraphError {}

/// A rooted, labeled, directed graph in PENMAN form.
///
/// Nodes are indexed densely by [`NodeId`]. The edge vector is the traversal
/// order: a node's outgoing edges are visited in the order they appear here.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmrGraph {
    root: NodeId,
    nodes: Vec<NodeLabel>,
    edges: Vec<Edge>,
}

impl AmrGraph {
    /// Builds a graph and checks every structural invariant.
    pub fn new(root: NodeId, nodes: Vec<NodeLabel>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let g = AmrGraph { root, nodes, edges };
        g.validate()?;
        Ok(g)
    }

    pub(crate) fn from_parts_unchecked(root: NodeId, nodes: Vec<NodeLabel>, edges: Vec<Edge>) -> Self {
        AmrGraph { root, nodes, edges }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let n = self.nodes.len();
        match self.nodes.get(self.root.0) {
            Some(l) if l.is_variable() => {}
            _ => return Err(GraphError::RootNotVariable),
        }
        let mut names = BTreeSet::new();
        for label in &self.nodes {
            if let NodeLabel::Variable { name, .. } = label {
                if !names.insert(name.as_str()) {
                    return Err(GraphError::DuplicateVariable(name.clone()));
                }
            }
        }
        let mut fan_in = vec![0usize; n];
        for e in &self.edges {
            if e.source.0 >= n {
                return Err(GraphError::NodeOutOfRange(e.source.0));
            }
            if e.target.0 >= n {
                return Err(GraphError::NodeOutOfRange(e.target.0));
            }
            if !self.nodes[e.source.0].is_variable() {
                return Err(GraphError::ConstantSource(e.source.0));
            }
            if !e.role.starts_with(':') || e.role.len() < 2 {
                return Err(GraphError::BadRole(e.role.clone()));
            }
            fan_in[e.target.0] += 1;
        }
        for (i, label) in self.nodes.iter().enumerate() {
            if !label.is_variable() && fan_in[i] != 1 {
                return Err(GraphError::ConstantFanIn(i));
            }
        }
        let reach = self.reachable();
        if let Some(i) = reach.iter().position(|r| !r) {
            return Err(GraphError::Unreachable(i));
        }
        Ok(())
    }

    /// Marks nodes reachable from the root along written edge direction.
    pub(crate) fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        if self.root.0 >= self.nodes.len() {
            return seen;
        }
        let mut stack = vec![self.root];
        seen[self.root.0] = true;
        while let Some(u) = stack.pop() {
            for e in self.edges.iter().filter(|e| e.source == u) {
                if !seen[e.target.0] {
                    seen[e.target.0] = true;
                    stack.push(e.target);
                }
            }
        }
        seen
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn nodes(&self) -> &[NodeLabel] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &NodeLabel {
        &self.nodes[id.0]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn variable_count(&self) -> usize {
        self.nodes.iter().filter(|l| l.is_variable()).count()
    }

    /// Outgoing edges of `id` in traversal order.
    pub fn out_edges(&self, id: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.source == id)
    }

    pub fn concept(&self, id: NodeId) -> Option<&str> {
        match &self.nodes[id.0] {
            NodeLabel::Variable { concept, .. } => Some(concept),
            NodeLabel::Constant { .. } => None,
        }
    }

    pub fn variable_name(&self, id: NodeId) -> Option<&str> {
        match &self.nodes[id.0] {
            NodeLabel::Variable { name, .. } => Some(name),
            NodeLabel::Constant { .. } => None,
        }
    }

    /// Variable node ids in node order.
    pub fn variables(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_variable())
            .map(|(i, _)| NodeId(i))
    }

    pub(crate) fn edges_mut(&mut self) -> &mut Vec<Edge> {
        &mut self.edges
    }

    pub(crate) fn nodes_mut(&mut self) -> &mut Vec<NodeLabel> {
        &mut self.nodes
    }

    /// Drops every node that is no longer reachable from the root, along with
    /// edges touching it, and compacts the node ids. Relative order of the
    /// surviving nodes and edges is kept.
    pub(crate) fn prune_unreachable(&mut self) {
        let reach = self.reachable();
        if reach.iter().all(|&r| r) {
            return;
        }
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut next = 0;
        for (i, &r) in reach.iter().enumerate() {
            if r {
                remap[i] = next;
                next += 1;
            }
        }
        let nodes = core::mem::take(&mut self.nodes);
        self.nodes = nodes
            .into_iter()
            .zip(reach.iter())
            .filter(|(_, &r)| r)
            .map(|(l, _)| l)
            .collect();
        let edges = core::mem::take(&mut self.edges);
        self.edges = edges
            .into_iter()
            .filter(|e| reach[e.source.0] && reach[e.target.0])
            .map(|e| Edge {
                source: NodeId(remap[e.source.0]),
                role: e.role,
                target: NodeId(remap[e.target.0]),
            })
            .collect();
        self.root = NodeId(remap[self.root.0]);
    }

    /// Renders the graph with variables renamed by depth-first discovery
    /// order. Two graphs with equal canonical strings are isomorphic and
    /// also agree on per-node edge order.
    pub fn canonical_string(&self) -> String {
        super::serialize::serialize_with(self, 1, true)
    }

    /// Variable-renaming-invariant equality that also respects edge order.
    pub fn isomorphic(&self, other: &AmrGraph) -> bool {
        self.canonical_string() == other.canonical_string()
    }

    /// Number of written references to each node, counting the root as one.
    pub(crate) fn mention_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.nodes.len()];
        counts[self.root.0] += 1;
        for e in &self.edges {
            counts[e.target.0] += 1;
        }
        counts
    }
}
