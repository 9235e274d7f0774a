//! Binary checkpoint: magic, manifest length, JSON manifest, raw blobs.
//!
//! ```text
//! "MACBIG01" | u32 LE manifest length | manifest | f32 LE blobs in manifest order
//! ```
//!
//! Entry offsets are byte offsets into the blob section.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{HyperParams, Model};
use crate::nn::Parameters;
use crate::rng::Rng;
use crate::tensor::Float;

pub const MAGIC: &[u8; 8] = b"MACBIG01";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("bad magic: not a checkpoint file")]
    BadMagic,
    #[error("truncated checkpoint: {0}")]
    Truncated(String),
    #[error("inconsistent checkpoint: {0}")]
    Inconsistent(String),
    #[error("malformed checkpoint manifest: {0}")]
    Manifest(String),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CheckpointError {
    /// Stable machine-readable code per failure kind.
    pub fn code(&self) -> &'static str {
        match self {
            CheckpointError::BadMagic => "bad_magic",
            CheckpointError::Truncated(_) => "truncated",
            CheckpointError::Inconsistent(_) => "inconsistent",
            CheckpointError::Manifest(_) => "manifest",
            CheckpointError::Io(_) => "io",
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format_version: u32,
    hyperparams: HyperParams,
    vocab: Vec<String>,
    entries: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

pub fn to_bytes(model: &Model, vocab: &[String]) -> Result<Vec<u8>, CheckpointError> {
    if vocab.len() != model.vocab_size() {
        return Err(CheckpointError::Inconsistent(format!(
            "{} vocabulary entries for {} embedding rows",
            vocab.len(),
            model.vocab_size()
        )));
    }
    let mut entries = Vec::new();
    let mut blob = Vec::new();
    for (name, _, t) in model.params() {
        entries.push(Entry {
            name,
            shape: t.shape().to_vec(),
            offset: blob.len(),
        });
        for &v in t.data() {
            blob.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        hyperparams: model.hp.clone(),
        vocab: vocab.to_vec(),
        entries,
    };
    let text = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| CheckpointError::Manifest(e.to_string()))?;
    let len = u32::try_from(text.len())
        .map_err(|_| CheckpointError::Inconsistent("manifest larger than 4 GiB".into()))?;
    let mut out = Vec::with_capacity(12 + text.len() + blob.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&text);
    out.extend_from_slice(&blob);
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<(Model, Vec<String>), CheckpointError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let header = bytes
        .get(8..12)
        .ok_or_else(|| CheckpointError::Truncated("missing manifest length".into()))?;
    let len = u32::from_le_bytes(header.try_into().expect("4-byte slice")) as usize;
    let text = bytes.get(12..12 + len).ok_or_else(|| {
        CheckpointError::Truncated(format!("manifest of {len} bytes runs past end of file"))
    })?;
    let manifest: Manifest =
        serde_json::from_slice(text).map_err(|e| CheckpointError::Manifest(e.to_string()))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(CheckpointError::Inconsistent(format!(
            "unsupported format version {}",
            manifest.format_version
        )));
    }
    let blob = &bytes[12 + len..];

    let mut model = Model::new(
        manifest.hyperparams.clone(),
        manifest.vocab.len(),
        &mut Rng::new(0),
    )
    .map_err(|e| CheckpointError::Inconsistent(e.to_string()))?;
    let mut params = model.params_mut();
    if params.len() != manifest.entries.len() {
        return Err(CheckpointError::Inconsistent(format!(
            "{} entries, model has {} parameter tensors",
            manifest.entries.len(),
            params.len()
        )));
    }
    let mut expected_offset = 0;
    for (entry, (name, _, tensor)) in manifest.entries.iter().zip(params.iter_mut()) {
        if entry.name != *name || entry.shape != tensor.shape() {
            return Err(CheckpointError::Inconsistent(format!(
                "entry {} {:?} where {} {:?} was expected",
                entry.name,
                entry.shape,
                name,
                tensor.shape()
            )));
        }
        let size = tensor.len() * 4;
        let end = entry.offset.saturating_add(size);
        if end > blob.len() {
            return Err(CheckpointError::Truncated(format!(
                "entry {} spans bytes {}..{} of a {}-byte blob",
                entry.name,
                entry.offset,
                end,
                blob.len()
            )));
        }
        if entry.offset != expected_offset {
            return Err(CheckpointError::Inconsistent(format!(
                "entry {} at offset {}, expected {}",
                entry.name, entry.offset, expected_offset
            )));
        }
        for (dst, chunk) in tensor
            .data_mut()
            .iter_mut()
            .zip(blob[entry.offset..end].chunks_exact(4))
        {
            *dst = f32::from_le_bytes(chunk.try_into().expect("4-byte chunk")) as Float;
        }
        expected_offset = end;
    }
    if expected_offset != blob.len() {
        return Err(CheckpointError::Inconsistent(format!(
            "{} trailing bytes after the last entry",
            blob.len() - expected_offset
        )));
    }
    Ok((model, manifest.vocab))
}

pub fn save(
    model: &Model,
    vocab: &[String],
    path: impl AsRef<Path>,
) -> Result<(), CheckpointError> {
    std::fs::write(path, to_bytes(model, vocab)?)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<(Model, Vec<String>), CheckpointError> {
    from_bytes(&std::fs::read(path)?)
}
