//! Model checkpoints.
//!
//! Layout: a UTF-8 manifest of `key = value` lines ending with
//! `end-manifest`, then every tensor as little-endian f32 in manifest order,
//! then the FNV-1a 64-bit hash of those bytes, little-endian.

use std::path::Path;

use amrq_core::fnv1a64;
use amrq_core::grid::Vocabulary;
use amrq_core::model::{ModelConfig, ModelError, RaterModel};
use amrq_core::nn::Tensor;
use thiserror::Error;

pub const MAGIC: &str = "amrq-checkpoint";
pub const FORMAT_VERSION: u32 = 1;
const END: &str = "end-manifest";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint {path}: {source}")]
    IoFailure { path: String, source: std::io::Error },
    #[error("checkpoint version mismatch: {0}")]
    VersionMismatch(String),
    #[error("checkpoint checksum mismatch: {0}")]
    ChecksumMismatch(String),
    #[error("checkpoint manifest: {0}")]
    Manifest(String),
    #[error("checkpoint parameters: {0}")]
    Model(#[from] ModelError),
}

/// A loaded model plus the vocabulary fingerprints it was trained with.
pub struct Checkpoint {
    pub model: RaterModel<f32>,
    pub amr_vocab: u64,
    pub dep_vocab: u64,
}

impl Checkpoint {
    /// Fails unless `amr` and `dep` are the vocabularies of training.
    pub fn check_vocabs(&self, amr: &Vocabulary, dep: &Vocabulary) -> Result<(), CheckpointError> {
        for (side, want, got) in [("amr", self.amr_vocab, amr.checksum()), ("dep", self.dep_vocab, dep.checksum())] {
            if want != got {
                return Err(CheckpointError::VersionMismatch(format!(
                    "{side} vocabulary checksum {got:016x} differs from the trained {want:016x}"
                )));
            }
        }
        Ok(())
    }
}

pub fn encode_checkpoint(model: &RaterModel<f32>, amr: &Vocabulary, dep: &Vocabulary) -> Vec<u8> {
    let mut manifest = format!("{MAGIC}\nformat-version = {FORMAT_VERSION}\n");
    for (k, v) in model.config().to_pairs() {
        manifest.push_str(&format!("config.{k} = {v}\n"));
    }
    manifest.push_str(&format!("vocab.amr = {:016x}\nvocab.dep = {:016x}\n", amr.checksum(), dep.checksum()));
    let mut blob = Vec::new();
    for p in model.params() {
        let shape: Vec<String> = p.value.shape().iter().map(ToString::to_string).collect();
        manifest.push_str(&format!(
            "tensor = {} {} {} {}\n",
            p.name,
            shape.join("x"),
            blob.len(),
            p.value.len() * 4
        ));
        for v in p.value.data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    manifest.push_str(END);
    manifest.push('\n');
    let mut out = manifest.into_bytes();
    let sum = fnv1a64(&blob);
    out.extend_from_slice(&blob);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

pub fn save_checkpoint(path: &Path, model: &RaterModel<f32>, amr: &Vocabulary, dep: &Vocabulary) -> Result<(), CheckpointError> {
    let io = |source| CheckpointError::IoFailure { path: path.display().to_string(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, encode_checkpoint(model, amr, dep)).map_err(io)
}

struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
    length: usize,
}

fn parse_tensor(v: &str) -> Result<TensorEntry, CheckpointError> {
    let bad = || CheckpointError::Manifest(format!("bad tensor line {v:?}"));
    let parts: Vec<&str> = v.split_whitespace().collect();
    let [name, shape, offset, length] = parts[..] else { return Err(bad()) };
    let shape = shape.split('x').map(|d| d.parse().map_err(|_| bad())).collect::<Result<Vec<usize>, _>>()?;
    Ok(TensorEntry {
        name: name.to_owned(),
        shape,
        offset: offset.parse().map_err(|_| bad())?,
        length: length.parse().map_err(|_| bad())?,
    })
}

fn hex(key: &str, v: Option<&str>) -> Result<u64, CheckpointError> {
    let v = v.ok_or_else(|| CheckpointError::Manifest(format!("missing {key}")))?;
    u64::from_str_radix(v, 16).map_err(|_| CheckpointError::Manifest(format!("bad {key} {v:?}")))
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    let marker = format!("\n{END}\n");
    let Some(pos) = bytes.windows(marker.len()).position(|w| w == marker.as_bytes()) else {
        let head = &bytes[..bytes.len().min(MAGIC.len())];
        if !bytes.is_empty() && MAGIC.as_bytes().starts_with(head) {
            return Err(CheckpointError::ChecksumMismatch("file ends inside the manifest".into()));
        }
        return Err(CheckpointError::VersionMismatch("not a checkpoint file".into()));
    };
    let manifest = std::str::from_utf8(&bytes[..pos]).map_err(|_| CheckpointError::Manifest("not UTF-8".into()))?;
    let mut lines = manifest.lines();
    if lines.next() != Some(MAGIC) {
        return Err(CheckpointError::VersionMismatch("not a checkpoint file".into()));
    }
    let mut config = Vec::new();
    let mut tensors = Vec::new();
    let (mut version, mut amr, mut dep) = (None, None, None);
    for line in lines {
        let (k, v) = line.split_once(" = ").ok_or_else(|| CheckpointError::Manifest(format!("bad line {line:?}")))?;
        match k {
            "format-version" => version = Some(v),
            "vocab.amr" => amr = Some(v),
            "vocab.dep" => dep = Some(v),
            "tensor" => tensors.push(parse_tensor(v)?),
            _ => match k.strip_prefix("config.") {
                Some(key) => config.push((key, v)),
                None => return Err(CheckpointError::Manifest(format!("unknown key {k:?}"))),
            },
        }
    }
    if version != Some(FORMAT_VERSION.to_string().as_str()) {
        return Err(CheckpointError::VersionMismatch(format!(
            "format {} found, {FORMAT_VERSION} supported",
            version.unwrap_or("none")
        )));
    }
    let rest = &bytes[pos + marker.len()..];
    let blob_len: usize = tensors.iter().map(|t| t.length).sum();
    if rest.len() != blob_len + 8 {
        return Err(CheckpointError::ChecksumMismatch(format!(
            "expected {} bytes after the manifest, found {}",
            blob_len + 8,
            rest.len()
        )));
    }
    let (blob, tail) = rest.split_at(blob_len);
    let stored = u64::from_le_bytes(tail.try_into().expect("eight bytes"));
    let actual = fnv1a64(blob);
    if stored != actual {
        return Err(CheckpointError::ChecksumMismatch(format!("stored {stored:016x}, computed {actual:016x}")));
    }
    let config = ModelConfig::from_pairs(config).map_err(ModelError::from)?;
    let mut values = Vec::with_capacity(tensors.len());
    for t in tensors {
        let count: usize = t.shape.iter().product();
        if t.length != count * 4 || t.offset + t.length > blob.len() {
            return Err(CheckpointError::Manifest(format!("tensor {} has inconsistent extent", t.name)));
        }
        let data = blob[t.offset..t.offset + t.length]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("four bytes")))
            .collect();
        let tensor = Tensor::new(&t.shape, data).map_err(ModelError::from)?;
        values.push((t.name, tensor));
    }
    Ok(Checkpoint {
        model: RaterModel::from_values(config, values)?,
        amr_vocab: hex("vocab.amr", amr)?,
        dep_vocab: hex("vocab.dep", dep)?,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let bytes =
        std::fs::read(path).map_err(|source| CheckpointError::IoFailure { path: path.display().to_string(), source })?;
    decode_checkpoint(&bytes)
}
