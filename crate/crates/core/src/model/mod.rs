//! The dual-branch convolutional rater and its training loop.

use core::fmt;

use crate::nn::NnError;
use crate::prelude::*;

mod config;
mod rater;
mod train;

pub use config::{target_columns, target_names, ConfigError, Dims, ModelConfig, ShapeTrace};
pub use rater::{Example, GridPair, Gradients, Projections, RaterModel};
pub use train::{train, EpochReport, TrainOptions, TrainReport};

#[derive(Clone, Debug, PartialEq)]
pub enum ModelError {
    Nn(NnError),
    Config(ConfigError),
    EmptySplit(&'static str),
    TargetDimensionMismatch { expected: usize, found: usize },
    GridShape { expected: (usize, usize), found: (usize, usize) },
    ParameterMismatch(String),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Nn(e) => write!(f, "{e}"),
            ModelError::Config(e) => write!(f, "{e}"),
            ModelError::EmptySplit(which) => write!(f, "the {which} split is empty"),
            ModelError::TargetDimensionMismatch { expected, found } => {
                write!(f, "targets have {found} values but the model predicts {expected}")
            }
            ModelError::GridShape { expected, found } => write!(
                f,
                "grid is {}x{} but the model reads {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            ModelError::ParameterMismatch(why) => write!(f, "stored parameters do not fit the model: {why}"),
        }
    }
}

impl core::error::Error for ModelError {}

impl From<NnError> for ModelError {
    fn from(e: NnError) -> Self {
        ModelError::Nn(e)
    }
}

impl From<ConfigError> for ModelError {
    fn from(e: ConfigError) -> Self {
        ModelError::Config(e)
    }
}
