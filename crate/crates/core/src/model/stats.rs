use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Judgment, QuestionType};

/// Leading tokens that get their own category bucket; anything else is `other`.
pub const CATEGORY_TOKENS: [&str; 12] = [
    "what", "how", "who", "where", "when", "why", "is", "are", "did", "do", "does", "can",
];

pub const OTHER_CATEGORY: &str = "other";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeStats {
    pub count: usize,
    pub avg_positives: f64,
    pub avg_negatives: f64,
    pub categories: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub overall: TypeStats,
    /// Only types with at least one question are present.
    pub per_type: BTreeMap<QuestionType, TypeStats>,
}

impl DatasetStats {
    pub fn get(&self, qtype: QuestionType) -> Option<&TypeStats> {
        self.per_type.get(&qtype)
    }

    /// Plain-text summary table, one row per non-empty slice.
    pub fn render_table(&self) -> String {
        let mut out = format!(
            "{:<12} {:>10} {:>10} {:>10}\n",
            "type", "#questions", "avg #pos", "avg #neg"
        );
        let mut row = |name: &str, s: &TypeStats| {
            out.push_str(&format!(
                "{:<12} {:>10} {:>10.2} {:>10.2}\n",
                name, s.count, s.avg_positives, s.avg_negatives
            ));
        };
        if self.overall.count > 0 {
            row("ALL", &self.overall);
        }
        for (t, s) in &self.per_type {
            row(t.as_str(), s);
        }
        out
    }
}

/// Category bucket for a question, keyed on its lowercased first token.
pub fn question_category(question: &str) -> &'static str {
    let first = question
        .split_whitespace()
        .next()
        .unwrap_or("")
        .trim_matches(|c: char| c.is_ascii_punctuation())
        .to_lowercase();
    CATEGORY_TOKENS
        .iter()
        .find(|t| **t == first)
        .copied()
        .unwrap_or(OTHER_CATEGORY)
}

#[derive(Default)]
struct Acc {
    count: usize,
    pos: usize,
    neg: usize,
    categories: BTreeMap<String, usize>,
}

impl Acc {
    fn add(&mut self, j: &Judgment) {
        self.count += 1;
        self.pos += j.positives.len();
        self.neg += j.negatives.len();
        *self
            .categories
            .entry(question_category(&j.question).to_string())
            .or_default() += 1;
    }

    fn finish(self) -> TypeStats {
        let mean = |total: usize| {
            if self.count == 0 {
                0.0
            } else {
                total as f64 / self.count as f64
            }
        };
        TypeStats {
            count: self.count,
            avg_positives: mean(self.pos),
            avg_negatives: mean(self.neg),
            categories: self.categories,
        }
    }
}

/// Per-type and overall counts over explicit labels only.
pub fn compute_stats(judgments: &[Judgment]) -> DatasetStats {
    let mut overall = Acc::default();
    let mut per_type: BTreeMap<QuestionType, Acc> = BTreeMap::new();
    for j in judgments {
        overall.add(j);
        per_type.entry(j.qtype).or_default().add(j);
    }
    DatasetStats {
        overall: overall.finish(),
        per_type: per_type.into_iter().map(|(k, v)| (k, v.finish())).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j(id: &str, q: &str, t: QuestionType, pos: &[&str], neg: &[&str]) -> Judgment {
        Judgment::new(id, q, t, pos.iter().copied(), neg.iter().copied()).unwrap()
    }

    #[test]
    fn single_and_question() {
        let s = compute_stats(&[j("q1", "What is x", QuestionType::And, &["p1"], &["p2"])]);
        let and = s.get(QuestionType::And).unwrap();
        assert_eq!(and.count, 1);
        assert_eq!(and.avg_positives, 1.0);
        assert_eq!(and.avg_negatives, 1.0);
        assert_eq!(s.overall.count, 1);
    }

    #[test]
    fn or_mean_positives() {
        let s = compute_stats(&[
            j("q1", "a", QuestionType::Or, &["p1", "p2"], &[]),
            j("q2", "b", QuestionType::Or, &["p3"], &[]),
        ]);
        assert_eq!(s.get(QuestionType::Or).unwrap().avg_positives, 1.5);
    }

    #[test]
    fn empty_input_zero_counts() {
        let s = compute_stats(&[]);
        assert_eq!(s.overall.count, 0);
        assert_eq!(s.overall.avg_positives, 0.0);
        assert!(s.per_type.is_empty());
    }

    #[test]
    fn categories() {
        assert_eq!(question_category("What causes pain?"), "what");
        assert_eq!(question_category("  DID he win"), "did");
        assert_eq!(question_category("Which one"), "other");
        assert_eq!(question_category(""), "other");
        assert_eq!(question_category("Is, maybe"), "is");
    }
}
