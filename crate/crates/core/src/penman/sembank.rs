use super::graph::AmrGraph;
use super::parse::{parse_penman, PenmanError};
use crate::prelude::*;

/// One block of a sembank file: its `# ::` metadata and the raw PENMAN text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SembankEntry {
    /// Position of the block in the file, starting at 0.
    pub index: usize,
    /// 1-based line where the block starts.
    pub line: usize,
    pub metadata: BTreeMap<String, String>,
    pub penman: String,
}

impl SembankEntry {
    pub fn id(&self) -> Option<&str> {
        self.metadata.get("id").map(String::as_str)
    }

    pub fn sentence(&self) -> Option<&str> {
        self.metadata.get("snt").map(String::as_str)
    }

    pub fn parse(&self) -> Result<AmrGraph, PenmanError> {
        parse_penman(&self.penman)
    }
}

/// Parses `# ::key value ::key2 value2` into the map.
fn read_metadata(line: &str, into: &mut BTreeMap<String, String>) {
    let Some(rest) = line.trim_start().strip_prefix('#') else { return };
    for field in rest.split("::").map(str::trim).filter(|f| !f.is_empty()) {
        let (key, value) = match field.split_once(char::is_whitespace) {
            Some((k, v)) => (k, v.trim()),
            None => (field, ""),
        };
        into.insert(key.to_owned(), value.to_owned());
    }
}

/// Splits a sembank into blank-line separated blocks. Blocks that carry only
/// comments are skipped.
pub fn split_sembank(text: &str) -> Vec<SembankEntry> {
    let mut out = Vec::new();
    let mut meta = BTreeMap::new();
    let mut body = String::new();
    let mut start = 0usize;
    let flush = |meta: &mut BTreeMap<String, String>, body: &mut String, start: usize, out: &mut Vec<SembankEntry>| {
        if !body.trim().is_empty() {
            out.push(SembankEntry {
                index: out.len(),
                line: start,
                metadata: core::mem::take(meta),
                penman: core::mem::take(body),
            });
        }
        meta.clear();
        body.clear();
    };
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            flush(&mut meta, &mut body, start, &mut out);
            continue;
        }
        if meta.is_empty() && body.is_empty() {
            start = i + 1;
        }
        let trimmed = line.trim_start();
        if trimmed.starts_with('#') {
            if trimmed.starts_with("# ::") || trimmed.starts_with("#::") {
                read_metadata(trimmed, &mut meta);
            }
            continue;
        }
        if !body.is_empty() {
            body.push('\n');
        }
        body.push_str(line);
    }
    flush(&mut meta, &mut body, start, &mut out);
    out
}

/// Writes a sembank block with `id` and `snt` metadata.
pub fn format_entry(id: &str, sentence: Option<&str>, penman: &str) -> String {
    let mut s = format!("# ::id {id}\n");
    if let Some(snt) = sentence {
        s.push_str("# ::snt ");
        s.push_str(snt);
        s.push('\n');
    }
    s.push_str(penman);
    s.push('\n');
    s
}
