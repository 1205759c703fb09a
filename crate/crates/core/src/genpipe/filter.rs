//! Cyclic consistency: every positive must answer the question and every
//! explicit negative must refuse it.

use super::generate::Generator;
use super::prompts::fill;
use super::template::{parse_key, satisfies, TemplateContext};
use super::{parallel_map, GenError, GeneratedQuestion};

/// True when an answerer reply means "Cannot answer".
pub fn is_refusal(response: &str) -> bool {
    response
        .trim()
        .trim_start_matches(['"', '\'', '*'])
        .to_lowercase()
        .starts_with("cannot answer")
}

pub fn template_answers(
    ctx: &TemplateContext,
    question: &GeneratedQuestion,
    passage_id: &str,
) -> Result<bool, GenError> {
    let key = question
        .answer_key
        .as_deref()
        .ok_or_else(|| GenError::Label {
            question_id: question.question_id.clone(),
            message: "template filtering needs an answer key".into(),
        })?;
    let key = parse_key(&question.question_id, key)?;
    Ok(satisfies(&key, ctx.tokens_of(passage_id)?))
}

fn answers(
    gen: &Generator<'_>,
    question: &GeneratedQuestion,
    passage_id: &str,
) -> Result<bool, GenError> {
    match gen {
        Generator::Template(ctx) => template_answers(ctx, question, passage_id),
        Generator::Chat {
            client,
            prompts,
            corpus,
        } => {
            let passage = corpus
                .get(passage_id)
                .ok_or_else(|| GenError::UnknownPassage(passage_id.to_string()))?;
            let prompt = fill(
                &prompts.answer,
                &[("QUESTION", &question.text), ("PARAGRAPHS", &passage.text)],
            );
            let reply = client.complete(&prompts.answerer_system, &prompt)?;
            Ok(!is_refusal(&reply))
        }
    }
}

/// Keep/drop decision for one question. Stops at the first failing passage.
pub fn cyclic_filter(gen: &Generator<'_>, question: &GeneratedQuestion) -> Result<bool, GenError> {
    for p in &question.positives {
        if !answers(gen, question, p)? {
            return Ok(false);
        }
    }
    for n in &question.negatives {
        if answers(gen, question, n)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Sets `filtered` on every question. Questions whose check fails with an
/// error stay unfiltered and are logged.
pub fn filter_questions(
    gen: &Generator<'_>,
    mut questions: Vec<GeneratedQuestion>,
    max_concurrent: usize,
) -> Vec<GeneratedQuestion> {
    let verdicts = parallel_map(questions.len(), max_concurrent, |i| {
        cyclic_filter(gen, &questions[i])
    });
    for (q, v) in questions.iter_mut().zip(verdicts) {
        q.filtered = match v {
            Ok(keep) => keep,
            Err(e) => {
                log::warn!("excluding {}: {e}", q.question_id);
                false
            }
        };
    }
    questions
}
