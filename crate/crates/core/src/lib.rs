//! Boolean dense retrieval: exact vector search, Boolean query decomposition
//! and merging, retrieval metrics, and synthesis of Boolean question
//! benchmarks from a passage corpus.

pub mod chat;
pub mod cli;
pub mod config;
pub mod embed;
pub mod eval;
pub mod genpipe;
pub mod http;
pub mod index;
pub mod model;
pub mod query;
pub mod ranking;

pub use embed::{embed_texts, Embedder, EmbedderSpec, Embedding};
pub use index::{build_index, Index, Similarity};
pub use model::{Corpus, Judgment, Passage, QuestionType};
pub use ranking::{RankedList, ScoredDoc};
