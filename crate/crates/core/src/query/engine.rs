use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::merge::{merge_and, merge_not, merge_or, min_max_normalize, NotMode};
use super::{BoolOp, BooleanExpr, QueryError};
use crate::index::Index;
use crate::ranking::RankedList;

/// How atom candidate lists are retrieved and combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergePolicy {
    /// Per-atom retrieval depth is `candidate_depth_factor * final_k`.
    pub candidate_depth_factor: usize,
    pub not_mode: NotMode,
    pub final_k: usize,
    /// Min-max normalize each atom list before merging.
    #[serde(default)]
    pub normalize_scores: bool,
}

impl Default for MergePolicy {
    fn default() -> Self {
        Self {
            candidate_depth_factor: 2,
            not_mode: NotMode::Hard,
            final_k: 10,
            normalize_scores: false,
        }
    }
}

impl MergePolicy {
    pub fn with_final_k(mut self, k: usize) -> Self {
        self.final_k = k;
        self
    }

    pub fn with_not_mode(mut self, mode: NotMode) -> Self {
        self.not_mode = mode;
        self
    }

    pub fn with_depth_factor(mut self, factor: usize) -> Self {
        self.candidate_depth_factor = factor;
        self
    }

    pub fn validate(&self) -> Result<(), QueryError> {
        if self.candidate_depth_factor < 1 {
            return Err(QueryError::InvalidPolicy(
                "candidate_depth_factor must be at least 1".into(),
            ));
        }
        if self.final_k < 1 {
            return Err(QueryError::InvalidPolicy(
                "final_k must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn atom_depth(&self) -> usize {
        self.candidate_depth_factor.saturating_mul(self.final_k)
    }
}

/// Candidate list for one atomic query.
pub fn retrieve_atom(index: &Index, atom: &str, depth: usize) -> Result<RankedList, QueryError> {
    Ok(index.top_k(atom, depth)?)
}

/// Baseline: rank by the undecomposed question text.
pub fn whole_query_retrieve(
    index: &Index,
    question: &str,
    k: usize,
) -> Result<RankedList, QueryError> {
    Ok(index.top_k(question, k)?)
}

/// Retrieves each distinct atom once; atoms are fetched on separate threads
/// when there is more than one.
fn retrieve_atoms<'e>(
    index: &Index,
    expr: &'e BooleanExpr,
    policy: &MergePolicy,
) -> Result<HashMap<&'e str, RankedList>, QueryError> {
    let mut atoms = expr.atoms();
    atoms.sort_unstable();
    atoms.dedup();
    let depth = policy.atom_depth();
    let fetch = |atom: &str| -> Result<RankedList, QueryError> {
        let list = retrieve_atom(index, atom, depth)?;
        Ok(if policy.normalize_scores {
            min_max_normalize(&list)
        } else {
            list
        })
    };
    let lists: Vec<Result<RankedList, QueryError>> = if atoms.len() <= 1 {
        atoms.iter().map(|a| fetch(a)).collect()
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = atoms.iter().map(|a| s.spawn(|| fetch(a))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("atom retrieval panicked"))
                .collect()
        })
    };
    atoms
        .into_iter()
        .zip(lists)
        .map(|(a, l)| l.map(|l| (a, l)))
        .collect()
}

fn fold(expr: &BooleanExpr, lists: &HashMap<&str, RankedList>, not_mode: NotMode) -> RankedList {
    match expr {
        BooleanExpr::Atom(text) => lists[text.as_str()].clone(),
        _ => {
            let (op, l, r) = expr.as_binary().expect("internal node");
            let (l, r) = (fold(l, lists, not_mode), fold(r, lists, not_mode));
            match op {
                BoolOp::And => merge_and(&l, &r),
                BoolOp::Or => merge_or(&l, &r),
                BoolOp::Not => merge_not(&l, &r, not_mode),
            }
        }
    }
}

/// Merged candidate list for `expr` before the final truncation.
pub fn evaluate_untruncated(
    index: &Index,
    expr: &BooleanExpr,
    policy: &MergePolicy,
) -> Result<RankedList, QueryError> {
    policy.validate()?;
    let lists = retrieve_atoms(index, expr, policy)?;
    Ok(fold(expr, &lists, policy.not_mode))
}

/// Decomposed-query retrieval: per-atom candidates merged bottom-up through
/// the expression, then cut to `final_k`.
pub fn evaluate_expr(
    index: &Index,
    expr: &BooleanExpr,
    policy: &MergePolicy,
) -> Result<RankedList, QueryError> {
    Ok(evaluate_untruncated(index, expr, policy)?.truncated(policy.final_k))
}
