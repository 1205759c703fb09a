//! Token statistics backing the template generator and its answerability
//! proxy: a passage answers an atom iff it contains every token of the atom.

use std::collections::{BTreeSet, HashMap};

use crate::embed::tokenize;
use crate::model::Corpus;
use crate::query::{parse_boolean_query, BoolOp, BooleanExpr};

use super::GenError;

pub const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "all", "also", "am", "an", "and", "any", "are", "as",
    "at", "be", "because", "been", "before", "being", "below", "between", "both", "but", "by",
    "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for", "from",
    "further", "had", "has", "have", "having", "he", "her", "here", "hers", "him", "his", "how",
    "i", "if", "in", "into", "is", "it", "its", "just", "me", "mentions", "more", "most", "my",
    "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "out",
    "over", "own", "passage", "related", "same", "say", "she", "should", "so", "some", "such",
    "than", "that", "the", "their", "them", "then", "there", "these", "they", "this", "those",
    "through", "to", "too", "under", "until", "up", "very", "was", "we", "were", "what", "when",
    "where", "which", "while", "who", "whom", "why", "will", "with", "would", "you", "your",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

#[derive(Debug, Clone)]
pub struct TemplateContext {
    df: HashMap<String, usize>,
    tokens: HashMap<String, BTreeSet<String>>,
}

impl TemplateContext {
    pub fn new(corpus: &Corpus) -> Self {
        let mut df: HashMap<String, usize> = HashMap::new();
        let mut tokens = HashMap::with_capacity(corpus.len());
        for p in corpus.iter() {
            let set: BTreeSet<String> = tokenize(&p.text).collect();
            for t in &set {
                *df.entry(t.clone()).or_default() += 1;
            }
            tokens.insert(p.id.clone(), set);
        }
        Self { df, tokens }
    }

    pub fn tokens_of(&self, passage_id: &str) -> Result<&BTreeSet<String>, GenError> {
        self.tokens
            .get(passage_id)
            .ok_or_else(|| GenError::UnknownPassage(passage_id.to_string()))
    }

    fn rank(&self, mut candidates: Vec<&String>, limit: usize) -> Vec<String> {
        candidates.sort_by_key(|t| (self.df.get(*t).copied().unwrap_or(0), *t));
        candidates.into_iter().take(limit).cloned().collect()
    }

    /// Up to `limit` content tokens of `passage_id` absent from every passage
    /// in `others`, rarest first. Falls back to the passage's rarest content
    /// tokens when nothing sets it apart.
    pub fn distinctive(
        &self,
        passage_id: &str,
        others: &[&str],
        limit: usize,
    ) -> Result<Vec<String>, GenError> {
        let own = self.tokens_of(passage_id)?;
        let other_sets = others
            .iter()
            .map(|o| self.tokens_of(o))
            .collect::<Result<Vec<_>, _>>()?;
        let content: Vec<&String> = own.iter().filter(|t| !is_stopword(t)).collect();
        let unique: Vec<&String> = content
            .iter()
            .copied()
            .filter(|t| other_sets.iter().all(|s| !s.contains(*t)))
            .collect();
        Ok(if unique.is_empty() {
            self.rank(content, limit)
        } else {
            self.rank(unique, limit)
        })
    }

    /// Up to `limit` content tokens present in every passage, rarest first.
    pub fn shared(&self, passage_ids: &[&str], limit: usize) -> Result<Vec<String>, GenError> {
        let sets = passage_ids
            .iter()
            .map(|p| self.tokens_of(p))
            .collect::<Result<Vec<_>, _>>()?;
        let Some((first, rest)) = sets.split_first() else {
            return Ok(Vec::new());
        };
        let common: Vec<&String> = first
            .iter()
            .filter(|t| !is_stopword(t) && rest.iter().all(|s| s.contains(*t)))
            .collect();
        Ok(self.rank(common, limit))
    }

    pub fn answers(&self, key: &BooleanExpr, passage_id: &str) -> Result<bool, GenError> {
        Ok(satisfies(key, self.tokens_of(passage_id)?))
    }
}

pub fn satisfies(key: &BooleanExpr, tokens: &BTreeSet<String>) -> bool {
    match key {
        BooleanExpr::Atom(a) => a.split_whitespace().all(|t| tokens.contains(t)),
        _ => {
            let (op, l, r) = key.as_binary().expect("internal node");
            match op {
                BoolOp::And => satisfies(l, tokens) && satisfies(r, tokens),
                BoolOp::Or => satisfies(l, tokens) || satisfies(r, tokens),
                BoolOp::Not => satisfies(l, tokens) && !satisfies(r, tokens),
            }
        }
    }
}

pub(crate) fn parse_key(question_id: &str, key: &str) -> Result<BooleanExpr, GenError> {
    parse_boolean_query(key).map_err(|e| GenError::Label {
        question_id: question_id.to_string(),
        message: format!("bad answer key: {e}"),
    })
}
