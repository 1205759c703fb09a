//! Turns a natural-language Boolean question into a [`BooleanExpr`], using a
//! chat model when available and a connective splitter otherwise.

use super::{parse_boolean_query, BoolOp, BooleanExpr, QueryError};
use crate::chat::ChatModel;

pub const DECOMPOSE_SYSTEM: &str = "You rewrite search questions as Boolean expressions over simple questions. \
Output only the expression, with each simple question in double quotes, joined by AND, OR or NOT, \
using parentheses where needed. NOT is binary: A NOT B means results for A excluding results for B.";

pub fn decompose_prompt(question: &str) -> String {
    format!(
        "Decompose the following question into a Boolean expression of simple questions.\n\n{question}"
    )
}

/// NOT connectives, tried in order; the first match splits the question.
pub const NOT_CONNECTIVES: [&str; 8] = [
    " but not related to ",
    " but is unrelated to ",
    " but unrelated to ",
    " not related to ",
    " but not ",
    " excluding ",
    " except ",
    ", not ",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecompositionSource {
    Model,
    Fallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub expr: BooleanExpr,
    pub source: DecompositionSource,
    /// Raw model output, when a model was asked.
    pub model_output: Option<String>,
}

/// Extracts an expression from model output: the whole reply, a fenced code
/// block, or the first line that parses.
fn parse_model_output(output: &str) -> Option<BooleanExpr> {
    let trimmed = output.trim();
    if let Ok(e) = parse_boolean_query(trimmed) {
        return Some(e);
    }
    let unfenced = trimmed
        .trim_start_matches("```")
        .trim_end_matches("```")
        .trim_start_matches(|c: char| c.is_alphanumeric());
    if let Ok(e) = parse_boolean_query(unfenced.trim()) {
        return Some(e);
    }
    trimmed
        .lines()
        .find_map(|l| parse_boolean_query(l.trim()).ok())
}

/// Byte ranges of `needle` in `haystack` outside parentheses, matched
/// case-insensitively.
fn top_level_matches(haystack: &str, needle: &str) -> Vec<usize> {
    let lower = haystack.to_lowercase();
    if lower.len() != haystack.len() {
        // lowercasing changed byte lengths; fall back to exact matching
        return top_level_positions(haystack, haystack, needle);
    }
    top_level_positions(haystack, &lower, needle)
}

fn top_level_positions(original: &str, search: &str, needle: &str) -> Vec<usize> {
    let mut depth = 0i32;
    let mut depth_at = vec![0i32; original.len() + 1];
    for (i, c) in original.char_indices() {
        depth_at[i] = depth;
        match c {
            '(' => depth += 1,
            ')' => depth = (depth - 1).max(0),
            _ => {}
        }
    }
    search
        .match_indices(needle)
        .map(|(i, _)| i)
        .filter(|&i| depth_at[i] == 0)
        .collect()
}

fn split_on<'a>(text: &'a str, needle: &str) -> Vec<&'a str> {
    let mut parts = Vec::new();
    let mut start = 0;
    for i in top_level_matches(text, needle) {
        if i < start {
            continue;
        }
        parts.push(&text[start..i]);
        start = i + needle.len();
    }
    parts.push(&text[start..]);
    parts
}

fn chain(parts: Vec<BooleanExpr>, op: BoolOp) -> Option<BooleanExpr> {
    parts
        .into_iter()
        .reduce(|l, r| BooleanExpr::binary(op, l, r))
}

fn atom_of(text: &str) -> Option<BooleanExpr> {
    let t = text.trim().trim_start_matches(',').trim();
    if t.trim_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
        .is_empty()
    {
        None
    } else {
        Some(BooleanExpr::atom(t))
    }
}

/// OR of AND-chains of atoms.
fn split_or_and(text: &str) -> Option<BooleanExpr> {
    let disjuncts: Vec<BooleanExpr> = split_on(text, " or ")
        .into_iter()
        .filter_map(|d| {
            chain(
                split_on(d, " and ")
                    .into_iter()
                    .filter_map(atom_of)
                    .collect(),
                BoolOp::And,
            )
        })
        .collect();
    chain(disjuncts, BoolOp::Or)
}

/// Deterministic splitter: the first NOT connective separates kept and
/// excluded parts; each part is an OR of AND-chains.
pub fn fallback_split(question: &str) -> Option<BooleanExpr> {
    for conn in NOT_CONNECTIVES {
        if let Some(&i) = top_level_matches(question, conn).first() {
            let (kept, excluded) = (&question[..i], &question[i + conn.len()..]);
            return match (split_or_and(kept), split_or_and(excluded)) {
                (Some(k), Some(e)) => Some(BooleanExpr::not(k, e)),
                (Some(k), None) => Some(k),
                (None, Some(_)) | (None, None) => atom_of(question),
            };
        }
    }
    split_or_and(question)
}

pub fn decompose_question(
    question: &str,
    client: Option<&dyn ChatModel>,
) -> Result<Decomposition, QueryError> {
    let mut model_output = None;
    if let Some(client) = client {
        let output = client.complete(DECOMPOSE_SYSTEM, &decompose_prompt(question))?;
        if let Some(expr) = parse_model_output(&output) {
            return Ok(Decomposition {
                expr,
                source: DecompositionSource::Model,
                model_output: Some(output),
            });
        }
        log::debug!("model decomposition did not parse, using fallback splitter: {output:?}");
        model_output = Some(output);
    }
    let expr =
        fallback_split(question).ok_or_else(|| QueryError::Unparseable(question.to_string()))?;
    Ok(Decomposition {
        expr,
        source: DecompositionSource::Fallback,
        model_output,
    })
}
