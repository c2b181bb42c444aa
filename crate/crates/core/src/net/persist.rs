//! Model container: magic, format version, JSON header describing the
//! architecture and tensors, then raw little-endian `f64` tensor data.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{InversionModel, ModelConfig, Params, SmootherMode};
use crate::ema::ChannelStats;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"ARTINVM\0";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    smoother_mode: SmootherMode,
    frozen: bool,
    seed: u64,
    stats: Option<ChannelStats>,
    tensors: Vec<TensorInfo>,
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
struct TensorInfo {
    name: String,
    shape: Vec<usize>,
}

pub fn encode_model(model: &InversionModel) -> Vec<u8> {
    let header = Header {
        config: model.config.clone(),
        smoother_mode: model.smoother_mode,
        frozen: model.is_smoother_frozen(),
        seed: model.seed,
        stats: model.stats.clone(),
        tensors: model
            .params
            .shapes()
            .into_iter()
            .map(|(name, shape)| TensorInfo { name, shape })
            .collect(),
    };
    let header = serde_json::to_vec(&header).expect("model header serializes");
    let mut out = Vec::with_capacity(32 + header.len() + 8 * model.parameter_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&MODEL_FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for (_, t) in model.params.tensors() {
        for v in t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::Persistence(format!("model file truncated while reading {what}")));
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

pub fn decode_model(mut bytes: &[u8]) -> Result<InversionModel> {
    let cursor = &mut bytes;
    if take(cursor, MAGIC.len(), "magic")? != MAGIC {
        return Err(Error::Persistence("not a model file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(take(cursor, 4, "version")?.try_into().unwrap());
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::Persistence(format!(
            "unsupported model format version {version}, expected {MODEL_FORMAT_VERSION}"
        )));
    }
    let header_len = u64::from_le_bytes(take(cursor, 8, "header length")?.try_into().unwrap());
    let header_bytes = take(cursor, header_len as usize, "header")?;
    let header: Header = serde_json::from_slice(header_bytes)
        .map_err(|e| Error::Persistence(format!("corrupt model header: {e}")))?;
    header
        .config
        .validate()
        .map_err(|e| Error::Persistence(e.to_string()))?;

    let mut params = Params::zeros(&header.config, header.frozen);
    let expected: Vec<TensorInfo> = params
        .shapes()
        .into_iter()
        .map(|(name, shape)| TensorInfo { name, shape })
        .collect();
    if expected != header.tensors {
        return Err(Error::Persistence(
            "tensor table does not match the declared architecture".into(),
        ));
    }
    for (name, t) in params.tensors_mut() {
        let raw = take(cursor, 8 * t.len(), &name)?;
        for (dst, chunk) in t.iter_mut().zip(raw.chunks_exact(8)) {
            *dst = f64::from_le_bytes(chunk.try_into().unwrap());
        }
    }
    if !cursor.is_empty() {
        return Err(Error::Persistence(format!(
            "{} trailing bytes after tensor data",
            cursor.len()
        )));
    }
    Ok(InversionModel {
        config: header.config,
        params,
        smoother_mode: header.smoother_mode,
        seed: header.seed,
        stats: header.stats,
    })
}

pub fn save_model(model: &InversionModel, path: &Path) -> Result<()> {
    fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<InversionModel> {
    let bytes = fs::read(path).map_err(|e| Error::Persistence(format!("{}: {e}", path.display())))?;
    decode_model(&bytes)
}
