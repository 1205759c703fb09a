//! Boolean queries over dense retrieval: parsing, per-atom candidate
//! retrieval and set-algebra merging of the candidate lists.

mod decompose;
mod engine;
mod expr;
mod merge;
mod parser;

pub use decompose::{
    decompose_prompt, decompose_question, fallback_split, Decomposition, DecompositionSource,
    DECOMPOSE_SYSTEM, NOT_CONNECTIVES,
};
pub use engine::{
    evaluate_expr, evaluate_untruncated, retrieve_atom, whole_query_retrieve, MergePolicy,
};
pub use expr::{BoolOp, BooleanExpr};
pub use merge::{merge_and, merge_not, merge_or, min_max_normalize, NotMode, UnknownNotMode};
pub use parser::{parse_boolean_query, ParseError};

use crate::chat::ChatError;
use crate::index::IndexError;

#[derive(Debug, thiserror::Error)]
pub enum QueryError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Chat(#[from] ChatError),
    #[error("invalid merge policy: {0}")]
    InvalidPolicy(String),
    #[error("could not decompose question {0:?}")]
    Unparseable(String),
}
