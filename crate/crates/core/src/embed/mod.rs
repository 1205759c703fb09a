//! Text encoders: a deterministic hashed bag-of-words embedder and a client
//! for a remote embedding service.

mod hashed;
mod remote;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use hashed::{hashed_bow_embed, token_hash, token_slot, tokenize};
pub use remote::{RemoteEmbedder, RemoteOptions, MAX_BATCH, TOKEN_ENV};

use crate::http::HttpError;

pub const MIN_DIM: usize = 8;
pub const DEFAULT_DIM: usize = 256;

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("invalid embedder spec: {0}")]
    InvalidSpec(String),
    #[error("text at position {0} is empty")]
    EmptyText(usize),
    #[error(transparent)]
    Http(#[from] HttpError),
    #[error("embedding service returned {got} vectors for {expected} texts")]
    CountMismatch { expected: usize, got: usize },
    #[error("embedding service returned dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("embedding service returned a non-finite value")]
    NonFinite,
}

/// A dense vector with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f32>);

impl Embedding {
    pub fn from_vec(values: Vec<f32>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt()
    }

    /// Scales to unit Euclidean norm; the zero vector stays zero.
    pub fn normalized(mut self) -> Self {
        normalize_in_place(&mut self.0);
        self
    }
}

pub(crate) fn normalize_in_place(v: &mut [f32]) {
    let norm = v
        .iter()
        .map(|&x| f64::from(x) * f64::from(x))
        .sum::<f64>()
        .sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x = (f64::from(*x) / norm) as f32;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbedderKind {
    HashedBow,
    Remote,
}

impl std::str::FromStr for EmbedderKind {
    type Err = EmbedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hashed-bow" => Ok(EmbedderKind::HashedBow),
            "remote" => Ok(EmbedderKind::Remote),
            other => Err(EmbedError::InvalidSpec(format!(
                "unknown embedder kind {other:?}"
            ))),
        }
    }
}

/// Everything that determines the vectors an embedder produces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedderSpec {
    pub kind: EmbedderKind,
    pub dim: usize,
    pub normalize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
}

impl Default for EmbedderSpec {
    fn default() -> Self {
        Self::hashed_bow(DEFAULT_DIM, 0)
    }
}

impl EmbedderSpec {
    pub fn hashed_bow(dim: usize, seed: u64) -> Self {
        Self {
            kind: EmbedderKind::HashedBow,
            dim,
            normalize: true,
            seed: Some(seed),
            endpoint: None,
        }
    }

    pub fn remote(endpoint: impl Into<String>, dim: usize) -> Self {
        Self {
            kind: EmbedderKind::Remote,
            dim,
            normalize: true,
            seed: None,
            endpoint: Some(endpoint.into()),
        }
    }

    pub fn with_normalize(mut self, normalize: bool) -> Self {
        self.normalize = normalize;
        self
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dim < MIN_DIM {
            return Err(EmbedError::InvalidSpec(format!(
                "dim {} is below the minimum of {MIN_DIM}",
                self.dim
            )));
        }
        match (self.kind, &self.endpoint) {
            (EmbedderKind::Remote, None) => Err(EmbedError::InvalidSpec(
                "remote embedder requires an endpoint".into(),
            )),
            (EmbedderKind::HashedBow, Some(_)) => Err(EmbedError::InvalidSpec(
                "endpoint is only valid for the remote embedder".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Stable 64-bit digest of the spec, stored in index files.
    pub fn fingerprint(&self) -> u64 {
        let canonical = serde_json::to_vec(self).expect("spec serializes");
        let digest = Sha256::digest(&canonical);
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }
}

/// A ready-to-use encoder built from an [`EmbedderSpec`].
#[derive(Debug)]
pub enum Embedder {
    HashedBow {
        dim: usize,
        seed: u64,
        normalize: bool,
    },
    Remote {
        client: RemoteEmbedder,
        normalize: bool,
    },
}

impl Embedder {
    pub fn from_spec(spec: &EmbedderSpec) -> Result<Self, EmbedError> {
        Self::with_options(spec, RemoteOptions::default())
    }

    pub fn with_options(spec: &EmbedderSpec, options: RemoteOptions) -> Result<Self, EmbedError> {
        spec.validate()?;
        Ok(match spec.kind {
            EmbedderKind::HashedBow => Embedder::HashedBow {
                dim: spec.dim,
                seed: spec.seed.unwrap_or(0),
                normalize: spec.normalize,
            },
            EmbedderKind::Remote => Embedder::Remote {
                client: RemoteEmbedder::new(
                    spec.endpoint.as_deref().expect("validated"),
                    spec.dim,
                    options,
                )?,
                normalize: spec.normalize,
            },
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Embedder::HashedBow { dim, .. } => *dim,
            Embedder::Remote { client, .. } => client.dim(),
        }
    }

    /// One embedding per input, in order.
    pub fn embed(&self, texts: &[&str]) -> Result<Vec<Embedding>, EmbedError> {
        if let Some(i) = texts.iter().position(|t| t.is_empty()) {
            return Err(EmbedError::EmptyText(i));
        }
        let (raw, normalize) = match self {
            Embedder::HashedBow {
                dim,
                seed,
                normalize,
            } => (
                texts
                    .iter()
                    .map(|t| hashed_bow_embed(t, *dim, *seed))
                    .collect(),
                *normalize,
            ),
            Embedder::Remote { client, normalize } => (client.embed(texts)?, *normalize),
        };
        Ok(if normalize {
            raw.into_iter().map(Embedding::normalized).collect()
        } else {
            raw
        })
    }

    pub fn embed_one(&self, text: &str) -> Result<Embedding, EmbedError> {
        Ok(self.embed(&[text])?.pop().expect("one embedding per text"))
    }
}

/// Builds the embedder for `spec` and encodes `texts`.
pub fn embed_texts(spec: &EmbedderSpec, texts: &[&str]) -> Result<Vec<Embedding>, EmbedError> {
    Embedder::from_spec(spec)?.embed(texts)
}
