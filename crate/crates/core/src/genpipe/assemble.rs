use std::collections::BTreeSet;

use crate::model::{compute_stats, Corpus, DatasetStats, Judgment, QuestionType};

use super::{GenError, GeneratedQuestion};

/// Checks the per-type labeling rule for `n` candidates:
/// SIMPLE 1/0, DISJUNCTIVE n/0, AND 1/n-1, OR 2/n-2, NOT n-1/1
/// (positives/negatives), with both sets drawn from the candidates and
/// disjoint.
pub fn check_labels(q: &GeneratedQuestion) -> Result<(), GenError> {
    let fail = |message: String| GenError::Label {
        question_id: q.question_id.clone(),
        message,
    };
    let candidates: BTreeSet<&String> = q.candidate_ids.iter().collect();
    let n = q.candidate_ids.len();
    if candidates.len() != n {
        return Err(fail("duplicate candidate ids".into()));
    }
    if n < 2 {
        return Err(fail(format!("{n} candidates; at least 2 expected")));
    }
    if let Some(id) = q.positives.intersection(&q.negatives).next() {
        return Err(fail(format!("{id} is both positive and negative")));
    }
    if let Some(id) = q
        .positives
        .iter()
        .chain(&q.negatives)
        .find(|id| !candidates.contains(id))
    {
        return Err(fail(format!("{id} is labeled but not a candidate")));
    }
    let expected = match q.qtype {
        QuestionType::Simple => (1, 0),
        QuestionType::Disjunctive => (n, 0),
        QuestionType::And => (1, n - 1),
        QuestionType::Or => (2, n - 2),
        QuestionType::Not => (n - 1, 1),
    };
    let got = (q.positives.len(), q.negatives.len());
    if got != expected {
        return Err(fail(format!(
            "{} with {n} candidates needs {}/{} positives/negatives, got {}/{}",
            q.qtype.as_str(),
            expected.0,
            expected.1,
            got.0,
            got.1
        )));
    }
    Ok(())
}

/// Judgments for the questions that passed filtering, in question id order,
/// with their statistics.
pub fn assemble_dataset(
    questions: &[GeneratedQuestion],
    corpus: &Corpus,
) -> Result<(Vec<Judgment>, DatasetStats), GenError> {
    let mut kept: Vec<&GeneratedQuestion> = questions.iter().filter(|q| q.filtered).collect();
    kept.sort_by(|a, b| a.question_id.cmp(&b.question_id));
    if let Some(w) = kept
        .windows(2)
        .find(|w| w[0].question_id == w[1].question_id)
    {
        return Err(GenError::Label {
            question_id: w[0].question_id.clone(),
            message: "duplicate question id".into(),
        });
    }
    let mut judgments = Vec::with_capacity(kept.len());
    for q in kept {
        check_labels(q)?;
        let wrap = |e| GenError::Label {
            question_id: q.question_id.clone(),
            message: format!("{e}"),
        };
        let j = Judgment::new(
            q.question_id.clone(),
            q.text.clone(),
            q.qtype,
            q.positives.iter().cloned(),
            q.negatives.iter().cloned(),
        )
        .map_err(wrap)?;
        j.validate_against(corpus).map_err(wrap)?;
        judgments.push(j);
    }
    let stats = compute_stats(&judgments);
    Ok((judgments, stats))
}
