//! Scored, ordered retrieval results.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RankingError {
    #[error("doc id {0:?} appears more than once")]
    DuplicateId(String),
    #[error("doc {0:?} has a non-finite score")]
    NonFinite(String),
    #[error("items out of order at position {0}")]
    OutOfOrder(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

impl ScoredDoc {
    pub fn new(doc_id: impl Into<String>, score: f64) -> Self {
        Self {
            doc_id: doc_id.into(),
            score,
        }
    }
}

/// Ranking order: higher score first, ties by ascending doc id.
pub fn rank_order(a: &ScoredDoc, b: &ScoredDoc) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.doc_id.cmp(&b.doc_id))
}

/// Docs in non-increasing score order with distinct ids; equal scores are
/// ordered by ascending doc id.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct RankedList {
    items: Vec<ScoredDoc>,
}

impl RankedList {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Accepts an already ordered list, rejecting anything that breaks the
    /// ordering, uniqueness or finiteness invariants.
    pub fn new(items: Vec<ScoredDoc>) -> Result<Self, RankingError> {
        check_entries(&items)?;
        if let Some(i) = items
            .windows(2)
            .position(|w| rank_order(&w[0], &w[1]) != Ordering::Less)
        {
            return Err(RankingError::OutOfOrder(i + 1));
        }
        Ok(Self { items })
    }

    /// Sorts arbitrary scored docs into ranking order.
    pub fn from_unsorted(mut items: Vec<ScoredDoc>) -> Result<Self, RankingError> {
        check_entries(&items)?;
        items.sort_by(rank_order);
        Ok(Self { items })
    }

    pub fn from_pairs<S: Into<String>>(
        pairs: impl IntoIterator<Item = (S, f64)>,
    ) -> Result<Self, RankingError> {
        Self::from_unsorted(
            pairs
                .into_iter()
                .map(|(id, s)| ScoredDoc::new(id, s))
                .collect(),
        )
    }

    /// Caller guarantees distinct ids and finite scores.
    pub(crate) fn sort_trusted(mut items: Vec<ScoredDoc>) -> Self {
        items.sort_by(rank_order);
        Self { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[ScoredDoc] {
        &self.items
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ScoredDoc> {
        self.items.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|d| d.doc_id.as_str())
    }

    pub fn into_items(self) -> Vec<ScoredDoc> {
        self.items
    }

    pub fn truncate(&mut self, k: usize) {
        self.items.truncate(k);
    }

    pub fn truncated(mut self, k: usize) -> Self {
        self.items.truncate(k);
        self
    }

    pub fn top(&self, k: usize) -> &[ScoredDoc] {
        &self.items[..k.min(self.items.len())]
    }

    pub fn score_of(&self, doc_id: &str) -> Option<f64> {
        self.items
            .iter()
            .find(|d| d.doc_id == doc_id)
            .map(|d| d.score)
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.items.iter().any(|d| d.doc_id == doc_id)
    }
}

impl<'de> Deserialize<'de> for RankedList {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let items = Vec::<ScoredDoc>::deserialize(d)?;
        RankedList::new(items).map_err(serde::de::Error::custom)
    }
}

impl<'a> IntoIterator for &'a RankedList {
    type Item = &'a ScoredDoc;
    type IntoIter = std::slice::Iter<'a, ScoredDoc>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

fn check_entries(items: &[ScoredDoc]) -> Result<(), RankingError> {
    let mut seen = HashSet::with_capacity(items.len());
    for d in items {
        if !d.score.is_finite() {
            return Err(RankingError::NonFinite(d.doc_id.clone()));
        }
        if !seen.insert(d.doc_id.as_str()) {
            return Err(RankingError::DuplicateId(d.doc_id.clone()));
        }
    }
    Ok(())
}
