use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{GbdtModel, ModelError};
use crate::corpus::DomainLabel;
use crate::features::FittedPipeline;

pub const BUNDLE_MAGIC: &str = "REPODOMAIN-MODEL";
pub const BUNDLE_SCHEMA_VERSION: u32 = 1;

/// A trained model plus everything needed to score raw records with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBundle {
    pub model: GbdtModel,
    /// Fitted feature pipeline; absent for models trained on bare matrices.
    pub pipeline: Option<FittedPipeline>,
    /// Training class counts, kept for the ZeroR baseline.
    pub class_counts: BTreeMap<DomainLabel, usize>,
    /// Free-form description of how the bundle was produced.
    pub provenance: serde_json::Value,
}

/// Writes `REPODOMAIN-MODEL <version> <sha256> <length>\n` followed by the
/// JSON payload the header describes.
pub fn save_bundle(bundle: &ModelBundle, path: &Path) -> Result<(), ModelError> {
    let payload = serde_json::to_vec(bundle).expect("bundle serializes");
    let digest = hex::encode(Sha256::digest(&payload));
    let mut bytes = format!("{BUNDLE_MAGIC} {BUNDLE_SCHEMA_VERSION} {digest} {}\n", payload.len()).into_bytes();
    bytes.extend_from_slice(&payload);
    fs::write(path, bytes).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_bundle(path: &Path) -> Result<ModelBundle, ModelError> {
    let bytes = fs::read(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let Some(nl) = bytes.iter().position(|&b| b == b'\n') else {
        return Err(if bytes.starts_with(&BUNDLE_MAGIC.as_bytes()[..bytes.len().min(BUNDLE_MAGIC.len())]) {
            ModelError::ChecksumMismatch
        } else {
            ModelError::SchemaMismatch("not a model bundle".into())
        });
    };
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| ModelError::SchemaMismatch("header is not UTF-8".into()))?;
    let parts: Vec<&str> = header.split(' ').collect();
    let [magic, version, digest, len] = parts.as_slice() else {
        return Err(ModelError::SchemaMismatch(format!("malformed header `{header}`")));
    };
    if *magic != BUNDLE_MAGIC {
        return Err(ModelError::SchemaMismatch("not a model bundle".into()));
    }
    if *version != BUNDLE_SCHEMA_VERSION.to_string() {
        return Err(ModelError::SchemaMismatch(format!(
            "bundle version {version}, this build reads {BUNDLE_SCHEMA_VERSION}"
        )));
    }
    let len: usize = len
        .parse()
        .map_err(|_| ModelError::SchemaMismatch(format!("bad payload length `{len}`")))?;
    let payload = &bytes[nl + 1..];
    if payload.len() != len || hex::encode(Sha256::digest(payload)) != *digest {
        return Err(ModelError::ChecksumMismatch);
    }
    serde_json::from_slice(payload).map_err(|e| ModelError::SchemaMismatch(e.to_string()))
}
