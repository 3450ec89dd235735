//! PENMAN graphs: parsing, serialization, simplification to line tokens,
//! surface randomization and triple extraction.

mod graph;
mod parse;
mod randomize;
mod sembank;
mod serialize;
mod simplify;
mod triples;

pub use graph::{AmrGraph, Edge, GraphError, NodeId, NodeLabel};
pub use parse::{parse_penman, PenmanError};
pub use randomize::randomize_surface;
pub use sembank::{format_entry, split_sembank, SembankEntry};
pub use serialize::serialize_penman;
pub use simplify::{normalize_token, simplify, LineTokens, SimplifiedAmr};
pub use triples::{extract_triples, Triple, TripleKind, TOP};

