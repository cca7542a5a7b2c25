//! Versioned, checksummed persistence of everything needed to answer a query.
//!
//! File layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       8     magic "VENUEREC"
//! 8       4     format version (u32)
//! 12      8     payload length in bytes (u64)
//! 20      32    SHA-256 of the payload
//! 52      ...   payload: JSON document
//! ```
//!
//! Floating-point values are written with shortest round-trip formatting and
//! parsed back exactly, so a loaded bundle is bit-identical to the saved one.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::classify::LogitModel;
use crate::features::{FeatureKind, FeatureSpec};
use crate::nmf::NmfModel;
use crate::recommend::VenueProfile;
use crate::text::TfidfModel;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"VENUEREC";
const HEADER_LEN: usize = 8 + 4 + 8 + 32;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("cannot access bundle {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a model bundle (bad magic bytes)")]
    BadMagic,
    #[error("bundle format version {found} is not supported (this build reads version {supported})")]
    Version { found: u32, supported: u32 },
    #[error("bundle is truncated: expected {expected} payload bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("bundle checksum mismatch")]
    Checksum,
    #[error("cannot decode bundle payload: {0}")]
    Decode(#[from] serde_json::Error),
    #[error("inconsistent bundle: {0}")]
    Inconsistent(String),
}

/// All trained components behind one recommender.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub tfidf: TfidfModel,
    pub nmf: NmfModel,
    pub logit: LogitModel,
    pub feature_kind: FeatureKind,
    pub profiles: Vec<VenueProfile>,
    pub corpus_fingerprint: String,
    pub config_hash: String,
}

impl ModelBundle {
    /// Checks that all components agree on vocabulary, topics and venues.
    pub fn validate(&self) -> Result<(), BundleError> {
        let bad = |m: String| Err(BundleError::Inconsistent(m));
        if self.nmf.num_terms() != self.tfidf.dim() {
            return bad(format!(
                "NMF has {} terms, vocabulary has {}",
                self.nmf.num_terms(),
                self.tfidf.dim()
            ));
        }
        let spec = FeatureSpec::new(self.feature_kind, &self.tfidf, Some(&self.nmf))
            .map_err(|e| BundleError::Inconsistent(e.to_string()))?;
        if spec.dim() != self.logit.num_features() {
            return bad(format!(
                "classifier expects {} features, {} produces {}",
                self.logit.num_features(),
                self.feature_kind,
                spec.dim()
            ));
        }
        let labels = self.logit.labels();
        if self.profiles.len() != labels.len() {
            return bad(format!(
                "{} venue profiles for {} venues",
                self.profiles.len(),
                labels.len()
            ));
        }
        for (i, p) in self.profiles.iter().enumerate() {
            if p.venue != labels.label(i) {
                return bad(format!("profile {i} is for {:?}, expected {:?}", p.venue, labels.label(i)));
            }
            if p.topics.len() != self.nmf.num_topics() {
                return bad(format!("profile {i} has {} topics", p.topics.len()));
            }
        }
        Ok(())
    }

    pub fn venues(&self) -> &[String] {
        self.logit.labels().labels()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, BundleError> {
        let payload = serde_json::to_vec(self)?;
        let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&Sha256::digest(&payload));
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, BundleError> {
        if bytes.len() < 12 {
            return Err(if bytes.len() >= 8 && &bytes[..8] != MAGIC {
                BundleError::BadMagic
            } else {
                BundleError::Truncated {
                    expected: HEADER_LEN as u64,
                    found: bytes.len() as u64,
                }
            });
        }
        if &bytes[..8] != MAGIC {
            return Err(BundleError::BadMagic);
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(BundleError::Version {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        if bytes.len() < HEADER_LEN {
            return Err(BundleError::Truncated {
                expected: HEADER_LEN as u64,
                found: bytes.len() as u64,
            });
        }
        let len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
        let payload = &bytes[HEADER_LEN..];
        if (payload.len() as u64) < len {
            return Err(BundleError::Truncated {
                expected: len,
                found: payload.len() as u64,
            });
        }
        if payload.len() as u64 != len {
            return Err(BundleError::Checksum);
        }
        if Sha256::digest(payload).as_slice() != &bytes[20..52] {
            return Err(BundleError::Checksum);
        }
        let bundle: ModelBundle = serde_json::from_slice(payload)?;
        bundle.validate()?;
        Ok(bundle)
    }
}

pub fn save_bundle(bundle: &ModelBundle, path: impl AsRef<Path>) -> Result<(), BundleError> {
    let path = path.as_ref();
    bundle.validate()?;
    let bytes = bundle.to_bytes()?;
    fs::write(path, bytes).map_err(|source| BundleError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<ModelBundle, BundleError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| BundleError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ModelBundle::from_bytes(&bytes)
}
