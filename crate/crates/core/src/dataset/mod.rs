//! Records, target generation, sentence-level splitting, surface debiasing,
//! grid encoding and the corruption-based synthetic corpus.

use core::fmt;

use rand::seq::SliceRandom;

use crate::dep::{render_dep_lines, render_sentence_only, DepTree};
use crate::exec::Executor;
use crate::grid::{build_vocab, project_sized, Side, Truncation, Vocabulary};
use crate::hash::fnv1a64;
use crate::metrics::{quality_targets, QualityVector};
use crate::model::{target_columns, Example, GridPair};
use crate::penman::{normalize_token, randomize_surface, simplify, AmrGraph, LineTokens, SimplifiedAmr};
use crate::prelude::*;
use crate::rng::{mix_seed, seeded_rng};

mod corrupt;
mod synth;

pub use corrupt::{corrupt, corrupt_with, CorruptionOp, CorruptionPool};
pub use synth::{synthetic_corpus, synthetic_gold, GoldItem, SynthOptions};

/// One candidate parse of one sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetRecord {
    pub id: String,
    pub sentence_id: String,
    pub sentence: String,
    pub candidate: AmrGraph,
    pub gold: Option<AmrGraph>,
    pub dep: Option<DepTree>,
    pub targets: Option<QualityVector>,
}

impl DatasetRecord {
    /// Nothing to learn from or score against.
    pub fn is_predict_only(&self) -> bool {
        self.gold.is_none() && self.targets.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DatasetError {
    MissingGold(String),
    MissingTargets(String),
    MissingDependency(String),
    InvalidSplit(String),
    Uncorruptible(CorruptionOp),
}

impl fmt::Display for DatasetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetError::MissingGold(id) => write!(f, "record {id} has no gold graph"),
            DatasetError::MissingTargets(id) => write!(f, "record {id} has no target scores"),
            DatasetError::MissingDependency(id) => write!(f, "record {id} has no dependency tree"),
            DatasetError::InvalidSplit(why) => write!(f, "invalid split: {why}"),
            DatasetError::Uncorruptible(op) => write!(f, "graph offers nothing for {op:?}"),
        }
    }
}

impl core::error::Error for DatasetError {}

/// Per-record seed that does not depend on record order.
fn record_seed(seed: u64, id: &str) -> u64 {
    mix_seed(seed, fnv1a64(id.as_bytes()))
}

/// Scores every candidate against its gold graph, corrected for features
/// absent from both.
pub fn generate_targets<E: Executor>(
    records: &mut [DatasetRecord],
    restarts: usize,
    seed: u64,
    exec: &E,
) -> Result<(), DatasetError> {
    if let Some(r) = records.iter().find(|r| r.gold.is_none()) {
        return Err(DatasetError::MissingGold(r.id.clone()));
    }
    let scores = exec.map(records, |_, r| {
        let gold = r.gold.as_ref().expect("checked above");
        quality_targets(&r.candidate, gold, restarts, record_seed(seed, &r.id))
    });
    for (r, q) in records.iter_mut().zip(scores) {
        r.targets = Some(q);
    }
    Ok(())
}

/// Train/dev/test fractions over sentence ids.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train: 0.8, dev: 0.1, test: 0.1, seed: 0 }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let parts = [self.train, self.dev, self.test];
        if parts.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(DatasetError::InvalidSplit("fractions must be positive".into()));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(DatasetError::InvalidSplit(format!("fractions sum to {sum}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Split {
    pub train: Vec<DatasetRecord>,
    pub dev: Vec<DatasetRecord>,
    pub test: Vec<DatasetRecord>,
}

/// Shuffles the distinct sentence ids and cuts them by the fractions, so all
/// parses of a sentence land in one partition. Records keep their input
/// order inside a partition.
pub fn resplit_by_sentence(records: Vec<DatasetRecord>, spec: &SplitSpec) -> Result<Split, DatasetError> {
    spec.validate()?;
    let ids: BTreeSet<&str> = records.iter().map(|r| r.sentence_id.as_str()).collect();
    let mut ids: Vec<String> = ids.into_iter().map(str::to_owned).collect();
    ids.shuffle(&mut seeded_rng(spec.seed));
    let n = ids.len();
    let n_train = libm::round(n as f64 * spec.train) as usize;
    let n_dev = (libm::round(n as f64 * spec.dev) as usize).min(n - n_train.min(n));
    let part: BTreeMap<String, u8> = ids
        .into_iter()
        .enumerate()
        .map(|(i, id)| (id, if i < n_train { 0 } else if i < n_train + n_dev { 1 } else { 2 }))
        .collect();
    let mut split = Split::default();
    for r in records {
        match part[&r.sentence_id] {
            0 => split.train.push(r),
            1 => split.dev.push(r),
            _ => split.test.push(r),
        }
    }
    Ok(split)
}

/// Replaces each candidate by a surface-randomized copy. Scores do not move.
pub fn debias_surface(records: &mut [DatasetRecord], seed: u64) {
    for r in records {
        r.candidate = randomize_surface(&r.candidate, record_seed(seed, &r.id));
    }
}

/// The line form fed to the second branch.
pub fn dep_lines(r: &DatasetRecord, use_dependency: bool) -> Result<SimplifiedAmr, DatasetError> {
    match (&r.dep, use_dependency) {
        (Some(t), true) => Ok(render_dep_lines(t)),
        (None, true) => Err(DatasetError::MissingDependency(r.id.clone())),
        (Some(t), false) => Ok(render_sentence_only(t)),
        (None, false) => {
            let tokens: Vec<String> = r.sentence.split_whitespace().map(normalize_token).collect();
            Ok(if tokens.is_empty() {
                SimplifiedAmr::default()
            } else {
                SimplifiedAmr::new(vec![LineTokens { depth: 0, tokens }])
            })
        }
    }
}

/// Vocabularies for both branches, from training records only.
pub fn build_vocabs(
    train: &[DatasetRecord],
    use_dependency: bool,
    min_freq: usize,
) -> Result<(Vocabulary, Vocabulary), DatasetError> {
    let amr: Vec<SimplifiedAmr> = train.iter().map(|r| simplify(&r.candidate)).collect();
    let dep = train.iter().map(|r| dep_lines(r, use_dependency)).collect::<Result<Vec<_>, _>>()?;
    Ok((build_vocab(&amr, min_freq), build_vocab(&dep, min_freq)))
}

/// Grid sizes and vocabularies shared by every encoded record.
#[derive(Clone, Copy, Debug)]
pub struct Encoder<'a> {
    pub amr_vocab: &'a Vocabulary,
    pub dep_vocab: &'a Vocabulary,
    pub use_dependency: bool,
    pub rows: usize,
    pub cols: usize,
}

impl Encoder<'_> {
    /// Both grids plus whatever did not fit, merged over the two sides.
    pub fn encode(&self, r: &DatasetRecord) -> Result<(GridPair, Truncation), DatasetError> {
        let amr = project_sized(&simplify(&r.candidate), self.amr_vocab, Side::Amr, self.rows, self.cols);
        let dep = project_sized(&dep_lines(r, self.use_dependency)?, self.dep_vocab, Side::Dep, self.rows, self.cols);
        let t = Truncation { rows: amr.truncation.rows || dep.truncation.rows, cols: amr.truncation.cols || dep.truncation.cols };
        Ok((GridPair { amr, dep }, t))
    }

    /// A training example whose target holds the columns an `out_dims` head
    /// predicts.
    pub fn example(&self, r: &DatasetRecord, out_dims: usize) -> Result<Example, DatasetError> {
        let q = r.targets.as_ref().ok_or_else(|| DatasetError::MissingTargets(r.id.clone()))?;
        let (input, _) = self.encode(r)?;
        Ok(Example { input, target: target_row(q, out_dims) })
    }
}

/// The slice of `q` an `out_dims` head predicts, empty for unsupported sizes.
pub fn target_row(q: &QualityVector, out_dims: usize) -> Vec<f64> {
    let all = q.to_array();
    target_columns(out_dims).map(|r| all[r].to_vec()).unwrap_or_default()
}
