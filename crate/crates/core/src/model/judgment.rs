use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Corpus, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum QuestionType {
    And,
    Or,
    Not,
    Simple,
    Disjunctive,
}

impl QuestionType {
    pub const ALL: [QuestionType; 5] = [
        QuestionType::And,
        QuestionType::Or,
        QuestionType::Not,
        QuestionType::Simple,
        QuestionType::Disjunctive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionType::And => "AND",
            QuestionType::Or => "OR",
            QuestionType::Not => "NOT",
            QuestionType::Simple => "SIMPLE",
            QuestionType::Disjunctive => "DISJUNCTIVE",
        }
    }

    /// True for the composite types produced from atomic questions.
    pub fn is_boolean(self) -> bool {
        matches!(
            self,
            QuestionType::And | QuestionType::Or | QuestionType::Not
        )
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuestionType {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QuestionType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| ModelError::UnknownQuestionType(s.to_string()))
    }
}

/// Relevance labels for one question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Judgment {
    pub question_id: String,
    pub question: String,
    pub qtype: QuestionType,
    pub positives: BTreeSet<String>,
    pub negatives: BTreeSet<String>,
}

#[derive(Deserialize)]
struct RawJudgment {
    question_id: String,
    question: String,
    qtype: String,
    positives: Vec<String>,
    negatives: Vec<String>,
}

impl Judgment {
    pub fn new(
        question_id: impl Into<String>,
        question: impl Into<String>,
        qtype: QuestionType,
        positives: impl IntoIterator<Item = impl Into<String>>,
        negatives: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<Self, ModelError> {
        let j = Self {
            question_id: question_id.into(),
            question: question.into(),
            qtype,
            positives: positives.into_iter().map(Into::into).collect(),
            negatives: negatives.into_iter().map(Into::into).collect(),
        };
        j.validate()?;
        Ok(j)
    }

    /// Checks the structural invariants that do not need a corpus.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.question_id.is_empty() {
            return Err(ModelError::Invalid {
                line: None,
                message: "question_id is empty".into(),
            });
        }
        if self.positives.is_empty() {
            return Err(ModelError::Invalid {
                line: None,
                message: format!("question {:?} has no positives", self.question_id),
            });
        }
        if let Some(id) = self.positives.intersection(&self.negatives).next() {
            return Err(ModelError::Overlap {
                question_id: self.question_id.clone(),
                passage_id: id.clone(),
            });
        }
        Ok(())
    }

    /// Checks that every labeled passage exists in `corpus`.
    pub fn validate_against(&self, corpus: &Corpus) -> Result<(), ModelError> {
        for id in self.positives.iter().chain(&self.negatives) {
            if !corpus.contains(id) {
                return Err(ModelError::UnknownPassage {
                    question_id: self.question_id.clone(),
                    passage_id: id.clone(),
                });
            }
        }
        Ok(())
    }
}

fn attach_line(err: ModelError, line: usize) -> ModelError {
    match err {
        ModelError::Invalid {
            line: None,
            message,
        } => ModelError::Invalid {
            line: Some(line),
            message,
        },
        other => other,
    }
}

pub fn parse_judgment_line(line: &str, line_no: usize) -> Result<Judgment, ModelError> {
    let raw: RawJudgment = serde_json::from_str(line).map_err(|e| ModelError::Schema {
        line: line_no,
        message: e.to_string(),
    })?;
    let qtype = raw.qtype.parse::<QuestionType>()?;
    let j = Judgment {
        question_id: raw.question_id,
        question: raw.question,
        qtype,
        positives: raw.positives.into_iter().collect(),
        negatives: raw.negatives.into_iter().collect(),
    };
    j.validate().map_err(|e| attach_line(e, line_no))?;
    Ok(j)
}

pub fn load_judgments(path: impl AsRef<Path>) -> Result<Vec<Judgment>, ModelError> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path).map_err(|e| ModelError::io(path, e))?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| ModelError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_judgment_line(&line, i + 1)?);
    }
    Ok(out)
}

pub fn judgments_to_jsonl(judgments: &[Judgment]) -> String {
    let mut s = String::new();
    for j in judgments {
        s.push_str(&serde_json::to_string(j).expect("judgment serializes"));
        s.push('\n');
    }
    s
}

pub fn save_judgments(path: impl AsRef<Path>, judgments: &[Judgment]) -> Result<(), ModelError> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| ModelError::io(path, e))?);
    w.write_all(judgments_to_jsonl(judgments).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| ModelError::io(path, e))
}
