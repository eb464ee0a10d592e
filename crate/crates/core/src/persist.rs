//! Model files.
//!
//! Layout, all integers little-endian:
//!
//! | field   | size                                           |
//! |---------|------------------------------------------------|
//! | magic   | 4 bytes, `SEMT`                                |
//! | version | u32                                            |
//! | header  | u32 length, then that many bytes of JSON       |
//! | payload | u64 parameter count, then that many f64 values |
//! | crc     | u32 CRC-32 of everything between magic and crc |
//!
//! The header holds the model configuration and the feature layout.
//! Parameters follow [`ModelParams::params`] order.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelConfig, ModelError, ModelParams};

pub const MAGIC: &[u8; 4] = b"SEMT";
pub const FORMAT_VERSION: u32 = 1;

/// Recorded in every header; the order in which pooled features are laid
/// out and parameters are serialized.
pub const FEATURE_LAYOUT: &str = "maps tags,classes,text; width groups in config order; filters in index order";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("model not found: {0}")]
    NotFound(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a model file (bad magic bytes)")]
    Magic,
    #[error("model format version {found}, this build reads version {expected}")]
    Version { found: u32, expected: u32 },
    #[error("model file is truncated or corrupt (checksum mismatch)")]
    Checksum,
    #[error("malformed model file: {0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    layout: String,
    param_count: u64,
}

pub fn to_bytes(params: &ModelParams) -> Vec<u8> {
    let header = serde_json::to_vec(&Header {
        config: params.config.clone(),
        layout: FEATURE_LAYOUT.into(),
        param_count: params.param_count() as u64,
    })
    .expect("model header serializes");
    let mut out = Vec::with_capacity(24 + header.len() + 8 * params.param_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(params.param_count() as u64).to_le_bytes());
    for x in params.params().flatten() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    let crc = crc32fast::hash(&out[MAGIC.len()..]);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Reads little-endian fields off the front of a byte slice.
struct Cursor<'a>(&'a [u8]);

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PersistError> {
        if self.0.len() < n {
            return Err(PersistError::Format("unexpected end of data".into()));
        }
        let (head, rest) = self.0.split_at(n);
        self.0 = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32, PersistError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, PersistError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<ModelParams, PersistError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(if MAGIC.starts_with(bytes) {
            PersistError::Checksum
        } else {
            PersistError::Magic
        });
    }
    if bytes.len() < MAGIC.len() + 8 {
        return Err(PersistError::Checksum);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(PersistError::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let (body, crc) = bytes[MAGIC.len()..].split_at(bytes.len() - MAGIC.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().unwrap()) {
        return Err(PersistError::Checksum);
    }
    let mut cur = Cursor(&body[4..]);
    let header_len = cur.u32()? as usize;
    let header: Header = serde_json::from_slice(cur.take(header_len)?)
        .map_err(|e| PersistError::Format(format!("header: {e}")))?;
    if header.layout != FEATURE_LAYOUT {
        return Err(PersistError::Format(format!("unknown feature layout {:?}", header.layout)));
    }
    let mut params = ModelParams::zeros(header.config)?;
    let count = cur.u64()?;
    if count != header.param_count || count != params.param_count() as u64 {
        return Err(PersistError::Format(format!(
            "{count} stored parameters, configuration implies {}",
            params.param_count()
        )));
    }
    for x in params.params_mut().flatten() {
        *x = f64::from_le_bytes(cur.take(8)?.try_into().unwrap());
    }
    if !cur.0.is_empty() {
        return Err(PersistError::Format("trailing bytes after parameters".into()));
    }
    Ok(params)
}

pub fn save_model(params: &ModelParams, path: &Path) -> Result<(), PersistError> {
    std::fs::write(path, to_bytes(params)).map_err(|source| PersistError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<ModelParams, PersistError> {
    let bytes = std::fs::read(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            PersistError::NotFound(path.display().to_string())
        } else {
            PersistError::Io {
                path: path.display().to_string(),
                source,
            }
        }
    })?;
    from_bytes(&bytes)
}
