//! Passages, corpora, relevance judgments and dataset statistics.

mod corpus;
mod judgment;
mod stats;

use std::path::{Path, PathBuf};

pub use corpus::{load_corpus, save_corpus, Corpus, Passage};
pub use judgment::{
    judgments_to_jsonl, load_judgments, parse_judgment_line, save_judgments, Judgment, QuestionType,
};
pub use stats::{
    compute_stats, question_category, DatasetStats, TypeStats, CATEGORY_TOKENS, OTHER_CATEGORY,
};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: schema error: {message}")]
    Schema { line: usize, message: String },
    #[error("duplicate passage id {id:?}{}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    DuplicateId { id: String, line: Option<usize> },
    #[error(
        "question {question_id:?}: passage {passage_id:?} is labeled both positive and negative"
    )]
    Overlap {
        question_id: String,
        passage_id: String,
    },
    #[error("unknown question type {0:?}")]
    UnknownQuestionType(String),
    #[error("question {question_id:?}: passage {passage_id:?} is not in the corpus")]
    UnknownPassage {
        question_id: String,
        passage_id: String,
    },
    #[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        line: Option<usize>,
        message: String,
    },
}

impl ModelError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        ModelError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
