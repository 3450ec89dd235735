//! On-disk formats: JSONL records, sembank and CoNLL-U side files,
//! vocabularies and tab-separated score tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use amrq_core::dataset::DatasetRecord;
use amrq_core::dep::{read_conllu, write_conllu, DepError, DepTree};
use amrq_core::grid::{VocabError, Vocabulary};
use amrq_core::metrics::{QualityVector, QUALITY_DIMS};
use amrq_core::penman::{parse_penman, serialize_penman, split_sembank, PenmanError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Indent width of PENMAN text written by this crate.
pub const PENMAN_INDENT: usize = 4;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Dep { path: String, source: DepError },
    #[error("{path}: {source}")]
    Vocab { path: String, source: VocabError },
    #[error("{path}: line {line}: {reason}")]
    Table { path: String, line: usize, reason: String },
    #[error("id {id:?} appears more than once ({context})")]
    IdCollision { id: String, context: String },
    #[error("{0} contains no records")]
    Empty(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io { path: path.display().to_string(), source }
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

/// One line of a records file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordLine {
    pub id: String,
    pub sentence_id: String,
    pub snt: String,
    pub penman: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_penman: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<f64>>,
}

/// Why one input entry was left out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skipped {
    pub source: String,
    pub id: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct Ingested {
    pub records: Vec<DatasetRecord>,
    pub skipped: Vec<Skipped>,
}

fn penman_reason(e: PenmanError) -> String {
    format!("PENMAN: {e}")
}

fn targets_from(values: &[f64]) -> Result<QualityVector, String> {
    let q = QualityVector::from_slice(values)
        .ok_or_else(|| format!("targets must hold {QUALITY_DIMS} values, found {}", values.len()))?;
    if !values.iter().all(|v| (0.0..=1.0).contains(v)) {
        return Err("targets must lie in [0, 1]".into());
    }
    Ok(q)
}

fn record_from_line(line: RecordLine) -> Result<DatasetRecord, String> {
    let candidate = parse_penman(&line.penman).map_err(penman_reason)?;
    let gold = line.gold_penman.as_deref().map(parse_penman).transpose().map_err(penman_reason)?;
    let targets = line.targets.as_deref().map(targets_from).transpose()?;
    Ok(DatasetRecord {
        id: line.id,
        sentence_id: line.sentence_id,
        sentence: line.snt,
        candidate,
        gold,
        dep: None,
        targets,
    })
}

pub fn record_line(r: &DatasetRecord) -> RecordLine {
    RecordLine {
        id: r.id.clone(),
        sentence_id: r.sentence_id.clone(),
        snt: r.sentence.clone(),
        penman: serialize_penman(&r.candidate, PENMAN_INDENT),
        gold_penman: r.gold.as_ref().map(|g| serialize_penman(g, PENMAN_INDENT)),
        targets: r.targets.as_ref().map(|q| q.to_array().to_vec()),
    }
}

/// Parses a records file. Malformed lines are skipped and reported; a
/// repeated id is an error.
pub fn parse_records(text: &str, source: &str) -> Result<Ingested, FormatError> {
    let mut out = Ingested::default();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: RecordLine = match serde_json::from_str(line) {
            Ok(p) => p,
            Err(e) => {
                out.skipped.push(Skipped { source: source.into(), id: format!("line {}", i + 1), reason: e.to_string() });
                continue;
            }
        };
        if !seen.insert(parsed.id.clone()) {
            return Err(FormatError::IdCollision { id: parsed.id, context: source.into() });
        }
        let id = parsed.id.clone();
        match record_from_line(parsed) {
            Ok(r) => out.records.push(r),
            Err(reason) => out.skipped.push(Skipped { source: source.into(), id, reason }),
        }
    }
    Ok(out)
}

pub fn read_records(path: &Path) -> Result<Ingested, FormatError> {
    parse_records(&read_text(path)?, &path.display().to_string())
}

pub fn render_records(records: &[DatasetRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(&record_line(r)).expect("records serialize"));
        s.push('\n');
    }
    s
}

pub fn write_records(path: &Path, records: &[DatasetRecord]) -> Result<(), FormatError> {
    write_text(path, &render_records(records))
}

/// Gold graphs of a sembank keyed by `# ::id`.
pub struct GoldBank {
    pub graphs: BTreeMap<String, (Option<String>, amrq_core::penman::AmrGraph)>,
    pub skipped: Vec<Skipped>,
}

/// Reads sembanks into one id-keyed map. An id in two places is an error;
/// a block without an id or with unparsable PENMAN is skipped.
pub fn read_gold_sembanks(paths: &[impl AsRef<Path>]) -> Result<GoldBank, FormatError> {
    let mut bank = GoldBank { graphs: BTreeMap::new(), skipped: Vec::new() };
    for path in paths {
        let path = path.as_ref();
        let source = path.display().to_string();
        for entry in split_sembank(&read_text(path)?) {
            let Some(id) = entry.id().map(str::to_owned) else {
                bank.skipped.push(Skipped {
                    source: source.clone(),
                    id: format!("block at line {}", entry.line),
                    reason: "no # ::id".into(),
                });
                continue;
            };
            if bank.graphs.contains_key(&id) {
                return Err(FormatError::IdCollision { id, context: source });
            }
            match entry.parse() {
                Ok(g) => {
                    bank.graphs.insert(id, (entry.sentence().map(str::to_owned), g));
                }
                Err(e) => bank.skipped.push(Skipped { source: source.clone(), id, reason: penman_reason(e) }),
            }
        }
    }
    Ok(bank)
}

/// Fills in gold graphs from `bank`. A record that already carries a gold
/// graph and also appears in the bank is an id collision.
pub fn attach_gold(records: &mut [DatasetRecord], bank: &GoldBank) -> Result<(), FormatError> {
    for r in records {
        if let Some((_, g)) = bank.graphs.get(&r.id) {
            if r.gold.is_some() {
                return Err(FormatError::IdCollision { id: r.id.clone(), context: "records file and sembank".into() });
            }
            r.gold = Some(g.clone());
        }
    }
    Ok(())
}

/// Dependency trees keyed by sentence id.
pub fn read_dep_trees(path: &Path) -> Result<BTreeMap<String, DepTree>, FormatError> {
    let trees = read_conllu(&read_text(path)?)
        .map_err(|source| FormatError::Dep { path: path.display().to_string(), source })?;
    let mut map = BTreeMap::new();
    for t in trees {
        if map.contains_key(&t.sentence_id) {
            return Err(FormatError::IdCollision { id: t.sentence_id, context: path.display().to_string() });
        }
        map.insert(t.sentence_id.clone(), t);
    }
    Ok(map)
}

pub fn attach_deps(records: &mut [DatasetRecord], trees: &BTreeMap<String, DepTree>) {
    for r in records {
        if let Some(t) = trees.get(&r.sentence_id) {
            r.dep = Some(t.clone());
        }
    }
}

/// The distinct trees of `records`, sorted by sentence id.
pub fn render_dep_sidecar(records: &[DatasetRecord]) -> String {
    let trees: BTreeMap<&str, &DepTree> =
        records.iter().filter_map(|r| r.dep.as_ref().map(|t| (r.sentence_id.as_str(), t))).collect();
    write_conllu(&trees.into_values().cloned().collect::<Vec<_>>())
}

pub fn read_vocab(path: &Path) -> Result<Vocabulary, FormatError> {
    Vocabulary::from_text(&read_text(path)?).map_err(|source| FormatError::Vocab { path: path.display().to_string(), source })
}

pub fn write_vocab(path: &Path, v: &Vocabulary) -> Result<(), FormatError> {
    write_text(path, &v.to_text())
}

/// A tab-separated table of named numeric columns keyed by id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreTable {
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl ScoreTable {
    /// Values are written with `decimals` places, or in shortest exact form
    /// when `None`.
    pub fn render(&self, decimals: Option<usize>) -> String {
        let mut s = String::from("id");
        for c in &self.columns {
            s.push('\t');
            s.push_str(c);
        }
        s.push('\n');
        for (id, values) in &self.rows {
            s.push_str(id);
            for v in values {
                s.push('\t');
                match decimals {
                    Some(d) => s.push_str(&format!("{v:.d$}")),
                    None => s.push_str(&v.to_string()),
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str, source: &str) -> Result<Self, FormatError> {
        let bad = |line: usize, reason: String| FormatError::Table { path: source.into(), line, reason };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| FormatError::Empty(source.into()))?;
        let mut head = header.split('\t');
        if head.next() != Some("id") {
            return Err(bad(1, "header must start with `id`".into()));
        }
        let columns: Vec<String> = head.map(str::to_owned).collect();
        let mut rows = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, line) in lines {
            let mut cells = line.split('\t');
            let id = cells.next().unwrap_or_default().to_owned();
            let values = cells
                .map(|c| c.trim().parse::<f64>().map_err(|_| bad(i + 1, format!("not a number: {c:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            if values.len() != columns.len() {
                return Err(bad(i + 1, format!("expected {} values, found {}", columns.len(), values.len())));
            }
            if !seen.insert(id.clone()) {
                return Err(FormatError::IdCollision { id, context: source.into() });
            }
            rows.push((id, values));
        }
        Ok(ScoreTable { columns, rows })
    }

    pub fn read(path: &Path) -> Result<Self, FormatError> {
        Self::parse(&read_text(path)?, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = r#"{"id":"a.1","sentence_id":"a","snt":"The dog runs .","penman":"(r / run-02 :ARG0 (d / dog))"}"#;

    #[test]
    fn records_round_trip() {
        let ing = parse_records(&format!("{LINE}\n\n"), "mem").unwrap();
        assert_eq!(ing.records.len(), 1);
        assert!(ing.records[0].is_predict_only());
        let text = render_records(&ing.records);
        let again = parse_records(&text, "mem").unwrap();
        assert_eq!(again.records, ing.records);
        assert_eq!(render_records(&again.records), text);
    }

    #[test]
    fn malformed_lines_are_skipped_and_duplicates_rejected() {
        let broken = r#"{"id":"b","sentence_id":"b","snt":"x","penman":"(a / b"}"#;
        let ing = parse_records(&format!("{LINE}\nnot json\n{broken}\n"), "mem").unwrap();
        assert_eq!(ing.records.len(), 1);
        assert_eq!(ing.skipped.len(), 2);
        assert_eq!(ing.skipped[1].id, "b");
        assert!(matches!(parse_records(&format!("{LINE}\n{LINE}\n"), "mem"), Err(FormatError::IdCollision { .. })));
    }

    #[test]
    fn targets_are_checked() {
        let short = LINE.replace('}', r#","targets":[0.5]}"#);
        assert_eq!(parse_records(&short, "mem").unwrap().skipped.len(), 1);
        let full = LINE.replace('}', &format!(r#","targets":[{}]}}"#, vec!["0.5"; QUALITY_DIMS].join(",")));
        let ing = parse_records(&full, "mem").unwrap();
        assert_eq!(ing.records[0].targets.unwrap().to_array(), [0.5; QUALITY_DIMS]);
    }

    #[test]
    fn score_tables_round_trip_exactly() {
        let t = ScoreTable { columns: vec!["x".into(), "y".into()], rows: vec![("a".into(), vec![0.1 + 0.2, 1.0 / 3.0])] };
        assert_eq!(ScoreTable::parse(&t.render(None), "mem").unwrap(), t);
        assert_eq!(t.render(Some(4)), "id\tx\ty\na\t0.3000\t0.3333\n");
        assert!(ScoreTable::parse("id\tx\na\t1\t2\n", "mem").is_err());
    }
}
