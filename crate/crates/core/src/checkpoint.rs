//! JSON checkpoint container.
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "k": 100, "tau": 64,
//!   "encoder_kind": "attn_average",
//!   "attn_divide_by_n": true,
//!   "vocab_hash": "<sha256 hex>",
//!   "tensors": { "<name>": { "shape": [..], "values": [..] }, ... }
//! }
//! ```
//!
//! Tensor names are those of [`ModelParams::named_tensors`]; the map is
//! written in sorted key order. Floats use shortest round-trip formatting,
//! so save -> load -> save is byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::data::Vocabulary;
use crate::error::{Error, Result};
use crate::model::{EncoderKind, GruCell, ModelParams, GRU_SLOTS};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format_version: u32,
    k: usize,
    tau: usize,
    encoder_kind: EncoderKind,
    attn_divide_by_n: bool,
    vocab_hash: String,
    tensors: BTreeMap<String, Tensor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub vocab_hash: String,
}

impl Checkpoint {
    pub fn new(params: ModelParams, vocab: &Vocabulary) -> Self {
        Self {
            params,
            vocab_hash: vocab.fingerprint(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let p = &self.params;
        let file = CheckpointFile {
            format_version: FORMAT_VERSION,
            k: p.k,
            tau: p.tau,
            encoder_kind: p.encoder,
            attn_divide_by_n: p.attn_divide_by_n,
            vocab_hash: self.vocab_hash.clone(),
            tensors: p
                .named_tensors()
                .into_iter()
                .map(|(n, t)| (n, t.clone()))
                .collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Version {
            format_version: u32,
        }
        let v: Version = serde_json::from_str(text)
            .map_err(|e| Error::Checkpoint(format!("unreadable header: {e}")))?;
        if v.format_version != FORMAT_VERSION {
            return Err(Error::CheckpointVersion {
                found: v.format_version,
                expected: FORMAT_VERSION,
            });
        }
        let mut file: CheckpointFile =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let mut take = |name: &str, shape: &[usize]| -> Result<Tensor> {
            let t = file
                .tensors
                .remove(name)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")))?;
            let expected: usize = t.shape().iter().product();
            if t.len() != expected {
                return Err(Error::Checkpoint(format!(
                    "tensor {name} has inconsistent length"
                )));
            }
            if !shape.is_empty() && t.shape() != shape {
                return Err(Error::Checkpoint(format!(
                    "tensor {name} has shape {:?}, expected {shape:?}",
                    t.shape()
                )));
            }
            Ok(t)
        };
        let (k, tau) = (file.k, file.tau);
        let entity = take("entity", &[])?;
        let relation = take("relation", &[])?;
        for (name, t) in [("entity", &entity), ("relation", &relation)] {
            if t.shape().len() != 2 || t.shape()[1] != k {
                return Err(Error::Checkpoint(format!("tensor {name} is not [n, {k}]")));
            }
        }
        let attn_w = take("attn_w", &[1, k])?;
        let filters = take("filters", &[tau, 3])?;
        let score_w = take("score_w", &[tau * k])?;
        let mut gru = Vec::new();
        for d in 0..file.encoder_kind.gru_directions() {
            let mut slots = Vec::new();
            for name in GRU_SLOTS {
                let shape: &[usize] = if name.starts_with('b') { &[k] } else { &[k, k] };
                slots.push(take(&format!("gru.{d}.{name}"), shape)?);
            }
            gru.push(GruCell { slots });
        }
        if let Some(extra) = file.tensors.keys().next() {
            return Err(Error::Checkpoint(format!("unexpected tensor {extra}")));
        }
        let params = ModelParams {
            k,
            tau,
            encoder: file.encoder_kind,
            attn_divide_by_n: file.attn_divide_by_n,
            entity,
            relation,
            attn_w,
            filters,
            score_w,
            gru,
        };
        if !params.all_finite() {
            return Err(Error::Checkpoint("non-finite parameter values".into()));
        }
        Ok(Self {
            params,
            vocab_hash: file.vocab_hash,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Logs a warning when the checkpoint was written for another
    /// vocabulary. Returns whether the fingerprints agree.
    pub fn check_vocab(&self, vocab: &Vocabulary) -> bool {
        let ok = self.vocab_hash == vocab.fingerprint();
        if !ok {
            log::warn!(
                "checkpoint vocabulary hash {} differs from the loaded data ({})",
                self.vocab_hash,
                vocab.fingerprint()
            );
        }
        ok
    }
}
