use core::fmt;

use crate::prelude::*;

/// The twelve metric families, in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Smatch,
    Unlabeled,
    NoWsd,
    Concepts,
    NamedEnt,
    Negations,
    Wikification,
    IgnoreVars,
    Frames,
    NsFrames,
    Reentrancies,
    Srl,
}

impl Family {
    pub const ALL: [Family; 12] = [
        Family::Smatch,
        Family::Unlabeled,
        Family::NoWsd,
        Family::Concepts,
        Family::NamedEnt,
        Family::Negations,
        Family::Wikification,
        Family::IgnoreVars,
        Family::Frames,
        Family::NsFrames,
        Family::Reentrancies,
        Family::Srl,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column-name stem, e.g. `ns_frames`.
    pub fn key(self) -> &'static str {
        match self {
            Family::Smatch => "smatch",
            Family::Unlabeled => "unlabeled",
            Family::NoWsd => "no_wsd",
            Family::Concepts => "concepts",
            Family::NamedEnt => "named_ent",
            Family::Negations => "negations",
            Family::Wikification => "wikification",
            Family::IgnoreVars => "ignore_vars",
            Family::Frames => "frames",
            Family::NsFrames => "ns_frames",
            Family::Reentrancies => "reentrancies",
            Family::Srl => "srl",
        }
    }

    /// Families whose score is reset to 1 when neither graph has the feature.
    pub fn is_correctable(self) -> bool {
        !matches!(
            self,
            Family::Smatch | Family::Unlabeled | Family::NoWsd | Family::IgnoreVars | Family::Concepts
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Precision, recall and F1.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub const PERFECT: Prf = Prf { precision: 1.0, recall: 1.0, f1: 1.0 };

    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Prf { precision, recall, f1 }
    }

    /// From a match count and the two totals; empty sides score 0.
    pub fn from_counts(matched: usize, candidate_total: usize, gold_total: usize) -> Self {
        let p = if candidate_total > 0 { matched as f64 / candidate_total as f64 } else { 0.0 };
        let r = if gold_total > 0 { matched as f64 / gold_total as f64 } else { 0.0 };
        Prf::from_pr(p, r)
    }
}

/// 36 scores: each family contributes precision, recall, F1 in that order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QualityVector {
    pub scores: [Prf; 12],
}

pub const QUALITY_DIMS: usize = 36;

impl QualityVector {
    pub fn perfect() -> Self {
        QualityVector { scores: [Prf::PERFECT; 12] }
    }

    pub fn get(&self, family: Family) -> Prf {
        self.scores[family.index()]
    }

    pub fn set(&mut self, family: Family, value: Prf) {
        self.scores[family.index()] = value;
    }

    pub fn to_array(&self) -> [f64; QUALITY_DIMS] {
        let mut out = [0.0; QUALITY_DIMS];
        for (i, s) in self.scores.iter().enumerate() {
            out[3 * i] = s.precision;
            out[3 * i + 1] = s.recall;
            out[3 * i + 2] = s.f1;
        }
        out
    }

    pub fn from_slice(values: &[f64]) -> Option<Self> {
        if values.len() != QUALITY_DIMS {
            return None;
        }
        let mut q = QualityVector::default();
        for (i, s) in q.scores.iter_mut().enumerate() {
            *s = Prf { precision: values[3 * i], recall: values[3 * i + 1], f1: values[3 * i + 2] };
        }
        Some(q)
    }

    /// True when every value lies in [0,1] and every F1 agrees with its P and
    /// R to 1e-9.
    pub fn is_consistent(&self) -> bool {
        self.scores.iter().all(|s| {
            let in_range = [s.precision, s.recall, s.f1].iter().all(|v| (0.0..=1.0).contains(v));
            in_range && (Prf::from_pr(s.precision, s.recall).f1 - s.f1).abs() <= 1e-9
        })
    }
}

/// Canonical column names, `smatch_p`, `smatch_r`, `smatch_f1`, ...
pub fn dimension_names() -> Vec<String> {
    let mut v = Vec::with_capacity(QUALITY_DIMS);
    for f in Family::ALL {
        for s in ["p", "r", "f1"] {
            v.push(format!("{}_{}", f.key(), s));
        }
    }
    v
}
