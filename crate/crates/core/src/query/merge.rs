//! Set algebra over ranked lists: intersection with summed scores, union with
//! max scores, and difference (hard) or score subtraction (soft).

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ranking::{RankedList, ScoredDoc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NotMode {
    /// Drop every doc of the left list that appears in the right list.
    #[default]
    Hard,
    /// Keep all left docs, subtracting the right score where present.
    Soft,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown NOT mode {0:?} (expected hard|soft)")]
pub struct UnknownNotMode(pub String);

impl FromStr for NotMode {
    type Err = UnknownNotMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hard" => Ok(NotMode::Hard),
            "soft" => Ok(NotMode::Soft),
            _ => Err(UnknownNotMode(s.to_string())),
        }
    }
}

impl fmt::Display for NotMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NotMode::Hard => "hard",
            NotMode::Soft => "soft",
        })
    }
}

fn score_map(list: &RankedList) -> HashMap<&str, f64> {
    list.iter().map(|d| (d.doc_id.as_str(), d.score)).collect()
}

pub fn merge_and(a: &RankedList, b: &RankedList) -> RankedList {
    let bs = score_map(b);
    RankedList::sort_trusted(
        a.iter()
            .filter_map(|d| {
                bs.get(d.doc_id.as_str())
                    .map(|s| ScoredDoc::new(d.doc_id.clone(), d.score + s))
            })
            .collect(),
    )
}

pub fn merge_or(a: &RankedList, b: &RankedList) -> RankedList {
    let mut merged: HashMap<&str, f64> = score_map(a);
    for d in b {
        merged
            .entry(d.doc_id.as_str())
            .and_modify(|s| *s = s.max(d.score))
            .or_insert(d.score);
    }
    RankedList::sort_trusted(
        merged
            .into_iter()
            .map(|(id, s)| ScoredDoc::new(id, s))
            .collect(),
    )
}

pub fn merge_not(a: &RankedList, b: &RankedList, mode: NotMode) -> RankedList {
    let bs = score_map(b);
    let items = match mode {
        NotMode::Hard => a
            .iter()
            .filter(|d| !bs.contains_key(d.doc_id.as_str()))
            .cloned()
            .collect(),
        NotMode::Soft => a
            .iter()
            .map(|d| {
                let sub = bs.get(d.doc_id.as_str()).copied().unwrap_or(0.0);
                ScoredDoc::new(d.doc_id.clone(), d.score - sub)
            })
            .collect(),
    };
    RankedList::sort_trusted(items)
}

/// Rescales scores linearly onto [0, 1]. A list whose scores are all equal
/// maps to all 1.0.
pub fn min_max_normalize(list: &RankedList) -> RankedList {
    let (lo, hi) = list
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
            (lo.min(d.score), hi.max(d.score))
        });
    let span = hi - lo;
    RankedList::sort_trusted(
        list.iter()
            .map(|d| {
                let s = if span > 0.0 {
                    (d.score - lo) / span
                } else {
                    1.0
                };
                ScoredDoc::new(d.doc_id.clone(), s)
            })
            .collect(),
    )
}
