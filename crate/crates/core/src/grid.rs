//! Vocabularies and the fixed-size token grid.

use core::fmt;

use crate::hash::fnv1a64;
use crate::penman::{LineTokens, SimplifiedAmr};
use crate::prelude::*;

pub const GRID_ROWS: usize = 45;
pub const GRID_COLS: usize = 15;

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const TAB: u32 = 2;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const TAB_TOKEN: &str = "<tab>";
pub const DEFAULT_MIN_FREQ: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VocabError {
    MissingHeader,
    BadHeader(String),
    ReservedMismatch { index: usize, found: String },
    DuplicateToken(String),
}

impl fmt::Display for VocabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VocabError::MissingHeader => write!(f, "vocabulary file is missing its minfreq header"),
            VocabError::BadHeader(h) => write!(f, "malformed vocabulary header {h:?}"),
            VocabError::ReservedMismatch { index, found } => {
                write!(f, "reserved slot {index} holds {found:?}")
            }
            VocabError::DuplicateToken(t) => write!(f, "token {t:?} listed twice"),
        }
    }
}

impl core::error::Error for VocabError {}

/// Token to index map with `<pad>`, `<unk>` and `<tab>` at 0, 1, 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, u32>,
    min_freq: usize,
}

impl Vocabulary {
    fn from_tokens(tokens: Vec<String>, min_freq: usize) -> Result<Self, VocabError> {
        let mut index = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(VocabError::DuplicateToken(t.clone()));
            }
        }
        for (i, r) in [PAD_TOKEN, UNK_TOKEN, TAB_TOKEN].iter().enumerate() {
            if tokens.get(i).map(String::as_str) != Some(r) {
                return Err(VocabError::ReservedMismatch { index: i, found: tokens.get(i).cloned().unwrap_or_default() });
            }
        }
        Ok(Vocabulary { tokens, index, min_freq })
    }

    /// The reserved tokens only.
    pub fn reserved(min_freq: usize) -> Self {
        let tokens = [PAD_TOKEN, UNK_TOKEN, TAB_TOKEN].iter().map(|t| (*t).to_owned()).collect();
        Vocabulary::from_tokens(tokens, min_freq).expect("reserved tokens are distinct")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_freq(&self) -> usize {
        self.min_freq
    }

    /// Index of `token`, `<unk>` when absent.
    pub fn lookup(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, index: u32) -> Option<&str> {
        self.tokens.get(index as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// File form: `minfreq=<k>`, then one token per line in index order.
    pub fn to_text(&self) -> String {
        let mut out = format!("minfreq={}\n", self.min_freq);
        for t in &self.tokens {
            out.push_str(t);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, VocabError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(VocabError::MissingHeader)?;
        let min_freq = header
            .strip_prefix("minfreq=")
            .and_then(|k| k.trim().parse().ok())
            .ok_or_else(|| VocabError::BadHeader(header.to_owned()))?;
        let tokens = lines.map(str::to_owned).collect();
        Vocabulary::from_tokens(tokens, min_freq)
    }

    /// Checksum of the file form; checkpoints record it to detect a vocabulary
    /// that does not belong to them.
    pub fn checksum(&self) -> u64 {
        fnv1a64(self.to_text().as_bytes())
    }
}

/// Counts tokens over `corpus` and keeps those seen at least `min_freq`
/// times, ordered by count descending and then by token.
pub fn build_vocab<'a>(corpus: impl IntoIterator<Item = &'a SimplifiedAmr>, min_freq: usize) -> Vocabulary {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in corpus {
        for t in s.tokens() {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|(t, c)| *c >= min_freq && ![PAD_TOKEN, UNK_TOKEN, TAB_TOKEN].contains(t))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let mut tokens: Vec<String> = [PAD_TOKEN, UNK_TOKEN, TAB_TOKEN].iter().map(|t| (*t).to_owned()).collect();
    tokens.extend(kept.into_iter().map(|(t, _)| t.to_owned()));
    Vocabulary::from_tokens(tokens, min_freq).expect("counted tokens are distinct")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Amr,
    Dep,
}

/// Which parts of the input did not fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Truncation {
    pub rows: bool,
    pub cols: bool,
}

impl Truncation {
    pub fn any(&self) -> bool {
        self.rows || self.cols
    }
}

/// A `rows × cols` matrix of vocabulary indices, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenGrid {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<u32>,
    pub side: Side,
    pub truncation: Truncation,
}

impl TokenGrid {
    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.cells[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.cells[r * self.cols..(r + 1) * self.cols]
    }

    /// Rebuilds the line structure: leading `<tab>` cells give the depth,
    /// trailing `<pad>` cells are dropped, empty rows end the content.
    pub fn to_lines(&self, v: &Vocabulary) -> SimplifiedAmr {
        let mut lines = Vec::new();
        for r in 0..self.rows {
            let row = self.row(r);
            let end = row.iter().rposition(|&c| c != PAD).map_or(0, |p| p + 1);
            if end == 0 {
                break;
            }
            let depth = row[..end].iter().take_while(|&&c| c == TAB).count();
            let tokens = row[depth..end].iter().map(|&c| v.token(c).unwrap_or(UNK_TOKEN).to_owned()).collect();
            lines.push(LineTokens { depth, tokens });
        }
        SimplifiedAmr::new(lines)
    }
}

/// Projects onto the default 45×15 grid.
pub fn project(s: &SimplifiedAmr, v: &Vocabulary, side: Side) -> TokenGrid {
    project_sized(s, v, side, GRID_ROWS, GRID_COLS)
}

/// Line `i` fills row `i` with `depth` tab cells, then its token indices,
/// then padding. Lines and cells that do not fit are dropped and flagged.
pub fn project_sized(s: &SimplifiedAmr, v: &Vocabulary, side: Side, rows: usize, cols: usize) -> TokenGrid {
    let mut cells = vec![PAD; rows * cols];
    let mut truncation = Truncation { rows: s.lines.len() > rows, cols: false };
    for (r, line) in s.lines.iter().take(rows).enumerate() {
        let content = core::iter::repeat(TAB).take(line.depth).chain(line.tokens.iter().map(|t| v.lookup(t)));
        let row = &mut cells[r * cols..(r + 1) * cols];
        let mut n = 0;
        for idx in content {
            if n == cols {
                truncation.cols = true;
                break;
            }
            row[n] = idx;
            n += 1;
        }
    }
    TokenGrid { rows, cols, cells, side, truncation }
}
