use core::fmt;
use core::str::FromStr;

use crate::grid::{GRID_COLS, GRID_ROWS};
use crate::metrics::{dimension_names, QUALITY_DIMS};
use crate::nn::Pooling;
use crate::prelude::*;

/// Architecture and data-shape settings of a rater.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    pub rows: usize,
    pub cols: usize,
    pub embed_dim: usize,
    pub conv1_filters: usize,
    pub conv1_kernel: (usize, usize),
    pub pool1: (usize, usize),
    pub conv2_filters: usize,
    pub conv2_kernel: (usize, usize),
    pub pool2: (usize, usize),
    pub hidden: usize,
    /// 3 predicts Smatch P/R/F1; 33 predicts the eleven other families.
    pub out_dims: usize,
    pub amr_vocab: usize,
    pub dep_vocab: usize,
    /// False when the second branch sees the bare sentence on one row.
    pub use_dependency: bool,
    /// Both branches read one embedding table sized by `amr_vocab`.
    pub share_vocab: bool,
    pub pooling: Pooling,
    pub hidden_bias: bool,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConfigError {
    Invalid(String),
    MissingKey(&'static str),
    BadValue { key: String, value: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Invalid(why) => write!(f, "invalid model configuration: {why}"),
            ConfigError::MissingKey(k) => write!(f, "model configuration lacks {k}"),
            ConfigError::BadValue { key, value } => write!(f, "bad value {value:?} for {key}"),
        }
    }
}

impl core::error::Error for ConfigError {}

/// Intermediate sizes for one forward pass.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dims {
    pub l1: [usize; 3],
    pub l2: [usize; 3],
    pub conv2: [usize; 3],
    pub pooled: [usize; 3],
    pub g: usize,
    pub j_res: usize,
    pub j_glob: usize,
    pub j: usize,
}

/// Sizes observed during one forward pass, per branch where applicable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapeTrace {
    pub l1: Vec<usize>,
    pub l2: Vec<usize>,
    pub conv2: Vec<usize>,
    pub g: usize,
    pub j_res: usize,
    pub j_glob: usize,
    pub j: usize,
    pub hidden: usize,
    pub out: usize,
}

impl ModelConfig {
    /// The published architecture: 45×15 grids, 128-d embeddings, 256 3×3
    /// filters, 3×3 pooling, 128 10×5 filters, 5×5 pooling, 512 hidden units.
    pub fn paper(amr_vocab: usize, dep_vocab: usize, out_dims: usize) -> Self {
        ModelConfig {
            rows: GRID_ROWS,
            cols: GRID_COLS,
            embed_dim: 128,
            conv1_filters: 256,
            conv1_kernel: (3, 3),
            pool1: (3, 3),
            conv2_filters: 128,
            conv2_kernel: (10, 5),
            pool2: (5, 5),
            hidden: 512,
            out_dims,
            amr_vocab,
            dep_vocab,
            use_dependency: true,
            share_vocab: false,
            pooling: Pooling::Max,
            hidden_bias: true,
            seed: 0,
        }
    }

    pub fn dims(&self) -> Dims {
        let l1 = [self.rows, self.cols, self.conv1_filters];
        let l2 = [self.rows.div_ceil(self.pool1.0), self.cols.div_ceil(self.pool1.1), self.conv1_filters];
        let conv2 = [l2[0], l2[1], self.conv2_filters];
        let pooled = [conv2[0].div_ceil(self.pool2.0), conv2[1].div_ceil(self.pool2.1), self.conv2_filters];
        let g = pooled.iter().product();
        let j_res = 2 * self.conv1_filters;
        let j_glob = 2 * g;
        Dims { l1, l2, conv2, pooled, g, j_res, j_glob, j: j_res + j_glob }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("rows", self.rows),
            ("cols", self.cols),
            ("embed_dim", self.embed_dim),
            ("conv1_filters", self.conv1_filters),
            ("conv1_kernel", self.conv1_kernel.0.min(self.conv1_kernel.1)),
            ("pool1", self.pool1.0.min(self.pool1.1)),
            ("conv2_filters", self.conv2_filters),
            ("conv2_kernel", self.conv2_kernel.0.min(self.conv2_kernel.1)),
            ("pool2", self.pool2.0.min(self.pool2.1)),
            ("hidden", self.hidden),
        ];
        if let Some((k, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(ConfigError::Invalid(format!("{k} must be positive")));
        }
        if target_columns(self.out_dims).is_none() {
            return Err(ConfigError::Invalid(format!("out_dims must be 3 or 33, not {}", self.out_dims)));
        }
        if self.amr_vocab < 3 || (!self.share_vocab && self.dep_vocab < 3) {
            return Err(ConfigError::Invalid("vocabularies must hold the three reserved tokens".into()));
        }
        Ok(())
    }

    /// `key = value` lines in a fixed order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let pair = |(a, b): (usize, usize)| format!("{a}x{b}");
        vec![
            ("rows", self.rows.to_string()),
            ("cols", self.cols.to_string()),
            ("embed_dim", self.embed_dim.to_string()),
            ("conv1_filters", self.conv1_filters.to_string()),
            ("conv1_kernel", pair(self.conv1_kernel)),
            ("pool1", pair(self.pool1)),
            ("conv2_filters", self.conv2_filters.to_string()),
            ("conv2_kernel", pair(self.conv2_kernel)),
            ("pool2", pair(self.pool2)),
            ("hidden", self.hidden.to_string()),
            ("out_dims", self.out_dims.to_string()),
            ("amr_vocab", self.amr_vocab.to_string()),
            ("dep_vocab", self.dep_vocab.to_string()),
            ("use_dependency", self.use_dependency.to_string()),
            ("share_vocab", self.share_vocab.to_string()),
            ("pooling", match self.pooling {
                Pooling::Max => "max".to_owned(),
                Pooling::Mean => "mean".to_owned(),
            }),
            ("hidden_bias", self.hidden_bias.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self, ConfigError> {
        let map: BTreeMap<&str, &str> = pairs.into_iter().collect();
        fn get<'m, T: FromStr>(map: &BTreeMap<&str, &'m str>, key: &'static str) -> Result<T, ConfigError> {
            let v = map.get(key).ok_or(ConfigError::MissingKey(key))?;
            v.parse().map_err(|_| ConfigError::BadValue { key: key.into(), value: (*v).into() })
        }
        fn pair(map: &BTreeMap<&str, &str>, key: &'static str) -> Result<(usize, usize), ConfigError> {
            let v = map.get(key).ok_or(ConfigError::MissingKey(key))?;
            let bad = || ConfigError::BadValue { key: key.into(), value: (*v).into() };
            let (a, b) = v.split_once('x').ok_or_else(bad)?;
            Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?))
        }
        let pooling = match *map.get("pooling").ok_or(ConfigError::MissingKey("pooling"))? {
            "max" => Pooling::Max,
            "mean" => Pooling::Mean,
            other => return Err(ConfigError::BadValue { key: "pooling".into(), value: other.into() }),
        };
        let cfg = ModelConfig {
            rows: get(&map, "rows")?,
            cols: get(&map, "cols")?,
            embed_dim: get(&map, "embed_dim")?,
            conv1_filters: get(&map, "conv1_filters")?,
            conv1_kernel: pair(&map, "conv1_kernel")?,
            pool1: pair(&map, "pool1")?,
            conv2_filters: get(&map, "conv2_filters")?,
            conv2_kernel: pair(&map, "conv2_kernel")?,
            pool2: pair(&map, "pool2")?,
            hidden: get(&map, "hidden")?,
            out_dims: get(&map, "out_dims")?,
            amr_vocab: get(&map, "amr_vocab")?,
            dep_vocab: get(&map, "dep_vocab")?,
            use_dependency: get(&map, "use_dependency")?,
            share_vocab: get(&map, "share_vocab")?,
            pooling,
            hidden_bias: get(&map, "hidden_bias")?,
            seed: get(&map, "seed")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Quality-vector columns predicted by a head of `out_dims` outputs.
pub fn target_columns(out_dims: usize) -> Option<core::ops::Range<usize>> {
    match out_dims {
        3 => Some(0..3),
        33 => Some(3..QUALITY_DIMS),
        _ => None,
    }
}

/// Column names of a head of `out_dims` outputs.
pub fn target_names(out_dims: usize) -> Vec<String> {
    let names = dimension_names();
    target_columns(out_dims).map(|r| names[r].to_vec()).unwrap_or_default()
}
