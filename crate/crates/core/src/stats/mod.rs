//! Evaluation statistics: correlation, error, ordinal classification and
//! significance tests.

mod classify;
mod distributions;
mod regression;
mod report;

use core::fmt;

pub use classify::{bin_five_way, confusion, macro_f1, per_class_f1, quadratic_weighted_kappa, QualityClass, CLASSES};
pub use distributions::{fisher_z_test, normal_cdf, paired_t_test, regularized_incomplete_beta, student_t_cdf};
pub use regression::{mean, pearson, rmse};
pub use report::{evaluate, Classification, DimensionScore, EvalReport, Significance};

#[derive(Clone, Debug, PartialEq)]
pub enum StatsError {
    LengthMismatch { left: usize, right: usize },
    TooFewSamples { needed: usize, found: usize },
    DegenerateVariance,
    OutOfRange(f64),
    DegenerateInput(&'static str),
}

impl fmt::Display for StatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsError::LengthMismatch { left, right } => write!(f, "length mismatch: {left} vs {right}"),
            StatsError::TooFewSamples { needed, found } => {
                write!(f, "need at least {needed} samples, found {found}")
            }
            StatsError::DegenerateVariance => write!(f, "zero variance"),
            StatsError::OutOfRange(v) => write!(f, "value {v} outside [0, 1]"),
            StatsError::DegenerateInput(why) => write!(f, "degenerate input: {why}"),
        }
    }
}

impl core::error::Error for StatsError {}

pub(crate) fn same_len(a: usize, b: usize) -> Result<(), StatsError> {
    if a == b {
        Ok(())
    } else {
        Err(StatsError::LengthMismatch { left: a, right: b })
    }
}
