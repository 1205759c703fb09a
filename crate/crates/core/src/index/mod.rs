//! Exact brute-force dense retrieval over an embedded corpus.

mod persist;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use persist::{load, load_with_spec, persist, LoadedIndex, FORMAT_VERSION, MAGIC};

use crate::embed::{normalize_in_place, EmbedError, Embedder, EmbedderSpec, Embedding};
use crate::model::Corpus;
use crate::ranking::{RankedList, ScoredDoc};

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("cannot build an index over an empty corpus")]
    EmptyCorpus,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("embedding passages {first}..{last} failed: {source}")]
    EmbedPassages {
        first: String,
        last: String,
        #[source]
        source: EmbedError,
    },
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("query dimension {got} does not match index dimension {expected}")]
    QueryDim { expected: usize, got: usize },
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("index format error: {0}")]
    Format(String),
    #[error("unsupported index format version {0}")]
    Version(u32),
    #[error("index fingerprint mismatch: header {header:016x}, stored spec {stored:016x}")]
    Fingerprint { header: u64, stored: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    Dot,
    Cosine,
}

impl Similarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Similarity::Dot => "dot",
            Similarity::Cosine => "cosine",
        }
    }
}

impl fmt::Display for Similarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Similarity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dot" => Ok(Similarity::Dot),
            "cosine" | "cos" => Ok(Similarity::Cosine),
            other => Err(format!(
                "unknown similarity {other:?} (expected dot|cosine)"
            )),
        }
    }
}

/// Dot product accumulated in f64, left to right.
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum()
}

/// An immutable embedded corpus. Rows are stored unit-normalized for cosine
/// similarity; query vectors are normalized the same way at search time.
#[derive(Debug)]
pub struct Index {
    dim: usize,
    similarity: Similarity,
    doc_ids: Vec<String>,
    matrix: Vec<f32>,
    spec: EmbedderSpec,
    embedder: Embedder,
}

const EMBED_CHUNK: usize = 256;

/// Embeds every passage once and stores the rows.
pub fn build_index(
    corpus: &Corpus,
    spec: &EmbedderSpec,
    similarity: Similarity,
) -> Result<Index, IndexError> {
    build_index_with(corpus, spec, Embedder::from_spec(spec)?, similarity)
}

/// Like [`build_index`] with a caller-configured embedder for `spec`.
pub fn build_index_with(
    corpus: &Corpus,
    spec: &EmbedderSpec,
    embedder: Embedder,
    similarity: Similarity,
) -> Result<Index, IndexError> {
    if corpus.is_empty() {
        return Err(IndexError::EmptyCorpus);
    }
    let passages = corpus.passages();
    let mut matrix = Vec::with_capacity(passages.len() * spec.dim);
    for chunk in passages.chunks(EMBED_CHUNK) {
        let texts: Vec<&str> = chunk.iter().map(|p| p.text.as_str()).collect();
        let vectors = embedder
            .embed(&texts)
            .map_err(|source| IndexError::EmbedPassages {
                first: chunk[0].id.clone(),
                last: chunk[chunk.len() - 1].id.clone(),
                source,
            })?;
        for v in vectors {
            matrix.extend_from_slice(v.values());
        }
    }
    Index::from_parts(
        spec.clone(),
        embedder,
        similarity,
        corpus.ids().map(str::to_string).collect(),
        matrix,
    )
}

impl Index {
    /// Assembles an index from raw rows; cosine rows are normalized here.
    pub fn from_parts(
        spec: EmbedderSpec,
        embedder: Embedder,
        similarity: Similarity,
        doc_ids: Vec<String>,
        mut matrix: Vec<f32>,
    ) -> Result<Self, IndexError> {
        let dim = spec.dim;
        if matrix.len() != doc_ids.len() * dim {
            return Err(IndexError::Format(format!(
                "{} values for {} rows of dimension {dim}",
                matrix.len(),
                doc_ids.len()
            )));
        }
        if similarity == Similarity::Cosine {
            for row in matrix.chunks_mut(dim) {
                normalize_in_place(row);
            }
        }
        Ok(Self {
            dim,
            similarity,
            doc_ids,
            matrix,
            spec,
            embedder,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn similarity(&self) -> Similarity {
        self.similarity
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn matrix(&self) -> &[f32] {
        &self.matrix
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    pub fn spec(&self) -> &EmbedderSpec {
        &self.spec
    }

    pub fn embedder(&self) -> &Embedder {
        &self.embedder
    }

    /// Query vector as it is scored against rows.
    pub fn embed_query(&self, query: &str) -> Result<Embedding, IndexError> {
        let q = self.embedder.embed_one(query)?;
        Ok(match self.similarity {
            Similarity::Cosine => q.normalized(),
            Similarity::Dot => q,
        })
    }

    /// Similarity of every row to `query`, in corpus order.
    pub fn scores(&self, query: &Embedding) -> Result<Vec<f64>, IndexError> {
        if query.dim() != self.dim {
            return Err(IndexError::QueryDim {
                expected: self.dim,
                got: query.dim(),
            });
        }
        let q = query.values();
        Ok(self
            .matrix
            .chunks(self.dim)
            .map(|row| dot(q, row))
            .collect())
    }

    pub fn top_k(&self, query: &str, k: usize) -> Result<RankedList, IndexError> {
        if k < 1 {
            return Err(IndexError::InvalidK);
        }
        let q = self.embed_query(query)?;
        self.top_k_vector(&q, k)
    }

    /// Top-k by an already embedded (and, for cosine, normalized) query.
    pub fn top_k_vector(&self, query: &Embedding, k: usize) -> Result<RankedList, IndexError> {
        if k < 1 {
            return Err(IndexError::InvalidK);
        }
        let scores = self.scores(query)?;
        let mut order: Vec<usize> = (0..scores.len()).collect();
        let cmp = |&a: &usize, &b: &usize| -> Ordering {
            scores[b]
                .total_cmp(&scores[a])
                .then_with(|| self.doc_ids[a].cmp(&self.doc_ids[b]))
        };
        let k = k.min(order.len());
        if k < order.len() {
            order.select_nth_unstable_by(k - 1, cmp);
            order.truncate(k);
        }
        order.sort_unstable_by(cmp);
        let items = order
            .into_iter()
            .map(|i| ScoredDoc::new(self.doc_ids[i].clone(), scores[i]))
            .collect();
        Ok(RankedList::new(items).expect("index rows are distinct and finite"))
    }

    /// True when ids, dimension, similarity and every matrix bit agree.
    pub fn same_contents(&self, other: &Index) -> bool {
        self.dim == other.dim
            && self.similarity == other.similarity
            && self.doc_ids == other.doc_ids
            && self.matrix.len() == other.matrix.len()
            && self
                .matrix
                .iter()
                .zip(&other.matrix)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}
