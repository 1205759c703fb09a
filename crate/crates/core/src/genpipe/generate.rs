use std::collections::BTreeSet;

use rand::Rng;

use crate::chat::ChatModel;
use crate::model::{Corpus, QuestionType};
use crate::query::BooleanExpr;

use super::prompts::fill;
use super::sample::{round_rng, sample_candidates};
use super::template::TemplateContext;
use super::{Cluster, GenError, GeneratedQuestion, GeneratorSpec, PromptSet, Provenance};

/// Content tokens used to name a passage's topic in template questions.
pub const TOPIC_TOKENS: usize = 2;

#[derive(Clone, Copy)]
pub enum Generator<'a> {
    Template(&'a TemplateContext),
    Chat {
        client: &'a dyn ChatModel,
        prompts: &'a PromptSet,
        corpus: &'a Corpus,
    },
}

impl Generator<'_> {
    fn provenance(&self) -> Provenance {
        match self {
            Generator::Template(_) => Provenance::Template,
            Generator::Chat { .. } => Provenance::ChatModel,
        }
    }

    fn ask(&self, prompt: String, what: &str) -> Result<String, GenError> {
        let Generator::Chat {
            client, prompts, ..
        } = self
        else {
            unreachable!("ask is chat-only");
        };
        let out = client.complete(&prompts.questioner_system, &prompt)?;
        let out = out.trim();
        if out.is_empty() {
            return Err(GenError::EmptyOutput(what.to_string()));
        }
        Ok(out.to_string())
    }

    fn text_of(&self, passage_id: &str) -> Result<&str, GenError> {
        let Generator::Chat { corpus, .. } = self else {
            unreachable!("passage text is chat-only");
        };
        corpus
            .get(passage_id)
            .map(|p| p.text.as_str())
            .ok_or_else(|| GenError::UnknownPassage(passage_id.to_string()))
    }
}

/// Simple questions (one per candidate, same order) and the disjunctive
/// question over all candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct Atomic {
    pub simple: Vec<GeneratedQuestion>,
    pub disjunctive: GeneratedQuestion,
    /// Template mode: topic tokens naming each candidate.
    pub topic_tokens: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutput {
    pub atomic: Atomic,
    pub and: GeneratedQuestion,
    pub or: GeneratedQuestion,
    pub not: GeneratedQuestion,
}

fn stem(question: &str) -> &str {
    question.trim().trim_end_matches('?').trim_end()
}

fn about(tokens: &[String]) -> String {
    format!("What does the passage about {} say?", tokens.join(" "))
}

fn set<'a>(ids: impl IntoIterator<Item = &'a String>) -> BTreeSet<String> {
    ids.into_iter().cloned().collect()
}

fn others(candidates: &[String], skip: usize) -> Vec<&str> {
    candidates
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != skip)
        .map(|(_, c)| c.as_str())
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn question(
    gen: &Generator<'_>,
    question_id: String,
    qtype: QuestionType,
    text: String,
    cluster_id: usize,
    candidates: &[String],
    positives: BTreeSet<String>,
    negatives: BTreeSet<String>,
    key: Option<BooleanExpr>,
) -> GeneratedQuestion {
    GeneratedQuestion {
        question_id,
        qtype,
        text,
        source_cluster: cluster_id,
        candidate_ids: candidates.to_vec(),
        positives,
        negatives,
        provenance: gen.provenance(),
        filtered: false,
        answer_key: key.map(|k| k.render()),
    }
}

fn key_of(q: &GeneratedQuestion) -> Option<BooleanExpr> {
    q.answer_key
        .as_deref()
        .map(|k| crate::query::parse_boolean_query(k).expect("generated keys parse"))
}

fn paragraphs(gen: &Generator<'_>, ids: &[&str], marker: Option<&str>) -> Result<String, GenError> {
    let mut parts = Vec::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        let text = gen.text_of(id)?;
        parts.push(match marker {
            Some(m) => format!("[{m}] {text}"),
            None => format!("Paragraph {}: {text}", i + 1),
        });
    }
    Ok(parts.join("\n\n"))
}

pub fn gen_atomic(
    gen: &Generator<'_>,
    cluster_id: usize,
    candidates: &[String],
    round: usize,
) -> Result<Atomic, GenError> {
    if !(2..=3).contains(&candidates.len()) {
        return Err(GenError::InvalidSpec(format!(
            "atomic generation needs 2 or 3 candidates, got {}",
            candidates.len()
        )));
    }
    let ids: Vec<&str> = candidates.iter().map(String::as_str).collect();
    let mut simple = Vec::with_capacity(candidates.len());
    let mut topic_tokens = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        let qid = format!("SIMPLE-{round:05}-{i}");
        let (text, key) = match gen {
            Generator::Template(ctx) => {
                let tokens = ctx.distinctive(c, &others(candidates, i), TOPIC_TOKENS)?;
                let key = BooleanExpr::atom(tokens.join(" "));
                let text = about(&tokens);
                topic_tokens.push(tokens);
                (text, Some(key))
            }
            Generator::Chat { prompts, .. } => {
                let prompt = fill(&prompts.simple, &[("PARAGRAPH", gen.text_of(c)?)]);
                (gen.ask(prompt, &qid)?, None)
            }
        };
        simple.push(question(
            gen,
            qid,
            QuestionType::Simple,
            text,
            cluster_id,
            candidates,
            set([c]),
            BTreeSet::new(),
            key,
        ));
    }
    let qid = format!("DISJUNCTIVE-{round:05}");
    let (text, key) = match gen {
        Generator::Template(ctx) => {
            let shared = ctx.shared(&ids, TOPIC_TOKENS)?;
            if shared.is_empty() {
                let keys = simple.iter().filter_map(key_of);
                let key = keys
                    .reduce(BooleanExpr::or)
                    .expect("at least two candidates");
                let stems: Vec<&str> = simple.iter().map(|q| stem(&q.text)).collect();
                (format!("{}?", stems.join(" or ")), Some(key))
            } else {
                (about(&shared), Some(BooleanExpr::atom(shared.join(" "))))
            }
        }
        Generator::Chat { prompts, .. } => {
            let prompt = fill(
                &prompts.disjunctive,
                &[("PARAGRAPH", &paragraphs(gen, &ids, None)?)],
            );
            (gen.ask(prompt, &qid)?, None)
        }
    };
    let disjunctive = question(
        gen,
        qid,
        QuestionType::Disjunctive,
        text,
        cluster_id,
        candidates,
        set(candidates),
        BTreeSet::new(),
        key,
    );
    Ok(Atomic {
        simple,
        disjunctive,
        topic_tokens,
    })
}

/// One candidate becomes the sole positive; a constraint taken from it is
/// added to the disjunctive question.
pub fn gen_and<R: Rng + ?Sized>(
    gen: &Generator<'_>,
    atomic: &Atomic,
    rng: &mut R,
    question_id: String,
) -> Result<GeneratedQuestion, GenError> {
    let disj = &atomic.disjunctive;
    let candidates = &disj.candidate_ids;
    let p = rng.random_range(0..candidates.len());
    let rest = others(candidates, p);
    let (text, key) = match gen {
        Generator::Template(ctx) => {
            let constraint = ctx.distinctive(&candidates[p], &rest, TOPIC_TOKENS)?;
            let key = BooleanExpr::and(
                key_of(disj).expect("template key"),
                BooleanExpr::atom(constraint.join(" ")),
            );
            (
                format!(
                    "{} and mentions {}?",
                    stem(&disj.text),
                    constraint.join(" ")
                ),
                Some(key),
            )
        }
        Generator::Chat { prompts, .. } => {
            let prompt = fill(
                &prompts.and,
                &[
                    ("QUESTION", &disj.text),
                    (
                        "POSITIVE PARAGRAPHS",
                        &paragraphs(gen, &[&candidates[p]], Some("positive"))?,
                    ),
                    (
                        "NEGATIVE PARAGRAPHS",
                        &paragraphs(gen, &rest, Some("negative"))?,
                    ),
                ],
            );
            (gen.ask(prompt, &question_id)?, None)
        }
    };
    Ok(question(
        gen,
        question_id,
        QuestionType::And,
        text,
        disj.source_cluster,
        candidates,
        set([&candidates[p]]),
        rest.iter().map(|s| s.to_string()).collect(),
        key,
    ))
}

/// Two simple questions joined by OR; their source passages are positive.
pub fn gen_or<R: Rng + ?Sized>(
    gen: &Generator<'_>,
    atomic: &Atomic,
    rng: &mut R,
    question_id: String,
) -> Result<GeneratedQuestion, GenError> {
    let simple = &atomic.simple;
    if simple.len() < 2 {
        return Err(GenError::TooFewSimple {
            needed: 2,
            got: simple.len(),
        });
    }
    let mut pair = rand::seq::index::sample(rng, simple.len(), 2).into_vec();
    pair.sort_unstable();
    let (a, b) = (&simple[pair[0]], &simple[pair[1]]);
    let candidates = &atomic.disjunctive.candidate_ids;
    let (text, key) = match gen {
        Generator::Template(_) => (
            format!("{} or {}", stem(&a.text), b.text.trim()),
            Some(BooleanExpr::or(
                key_of(a).expect("template key"),
                key_of(b).expect("template key"),
            )),
        ),
        Generator::Chat { prompts, .. } => {
            let expr = BooleanExpr::or(BooleanExpr::atom(&a.text), BooleanExpr::atom(&b.text));
            let prompt = fill(&prompts.or, &[("LOGICAL EXPRESSION", &expr.render())]);
            (gen.ask(prompt, &question_id)?, None)
        }
    };
    let positives: BTreeSet<String> = a.positives.union(&b.positives).cloned().collect();
    let negatives = candidates
        .iter()
        .filter(|c| !positives.contains(*c))
        .cloned()
        .collect();
    Ok(question(
        gen,
        question_id,
        QuestionType::Or,
        text,
        atomic.disjunctive.source_cluster,
        candidates,
        positives,
        negatives,
        key,
    ))
}

/// The disjunctive question with one simple question excluded; the excluded
/// question's source passage is the only negative.
pub fn gen_not<R: Rng + ?Sized>(
    gen: &Generator<'_>,
    atomic: &Atomic,
    rng: &mut R,
    question_id: String,
) -> Result<GeneratedQuestion, GenError> {
    let simple = &atomic.simple;
    if simple.is_empty() {
        return Err(GenError::TooFewSimple { needed: 1, got: 0 });
    }
    let e = rng.random_range(0..simple.len());
    let excluded = &simple[e];
    let disj = &atomic.disjunctive;
    let candidates = &disj.candidate_ids;
    let (text, key) = match gen {
        Generator::Template(_) => {
            let tokens = atomic.topic_tokens[e].join(" ");
            (
                format!("{} but not related to {tokens}?", stem(&disj.text)),
                Some(BooleanExpr::not(
                    key_of(disj).expect("template key"),
                    BooleanExpr::atom(tokens),
                )),
            )
        }
        Generator::Chat { prompts, .. } => {
            let expr = BooleanExpr::not(
                BooleanExpr::atom(&disj.text),
                BooleanExpr::atom(&excluded.text),
            );
            let prompt = fill(&prompts.not, &[("LOGICAL EXPRESSION", &expr.render())]);
            (gen.ask(prompt, &question_id)?, None)
        }
    };
    let negatives = excluded.positives.clone();
    let positives = candidates
        .iter()
        .filter(|c| !negatives.contains(*c))
        .cloned()
        .collect();
    Ok(question(
        gen,
        question_id,
        QuestionType::Not,
        text,
        disj.source_cluster,
        candidates,
        positives,
        negatives,
        key,
    ))
}

/// One full round on `cluster`: sample candidates, atomic questions, then
/// one AND, OR and NOT question. Randomness comes from the round's own
/// stream, so rounds are independent of execution order.
pub fn generate_round(
    gen: &Generator<'_>,
    cluster: &Cluster,
    seed: u64,
    round: usize,
) -> Result<RoundOutput, GenError> {
    let mut rng = round_rng(seed, round as u64);
    let candidates = sample_candidates(cluster, &mut rng)?;
    let atomic = gen_atomic(gen, cluster.cluster_id, &candidates, round)?;
    let and = gen_and(gen, &atomic, &mut rng, format!("AND-{round:05}"))?;
    let or = gen_or(gen, &atomic, &mut rng, format!("OR-{round:05}"))?;
    let not = gen_not(gen, &atomic, &mut rng, format!("NOT-{round:05}"))?;
    Ok(RoundOutput {
        atomic,
        and,
        or,
        not,
    })
}

/// Runs `spec.n_per_type` rounds, cycling over clusters with at least two
/// passages, on up to `spec.max_concurrent` threads. Output is sorted by
/// question id.
pub fn generate_questions(
    gen: &Generator<'_>,
    clusters: &[Cluster],
    spec: &GeneratorSpec,
) -> Result<Vec<GeneratedQuestion>, GenError> {
    spec.validate()?;
    let eligible: Vec<&Cluster> = clusters
        .iter()
        .filter(|c| {
            let ok = c.len() >= 2;
            if !ok {
                log::info!(
                    "skipping cluster {} with {} passage(s)",
                    c.cluster_id,
                    c.len()
                );
            }
            ok
        })
        .collect();
    if eligible.is_empty() {
        return Err(GenError::InvalidSpec(
            "no cluster has at least 2 passages".into(),
        ));
    }
    let outputs = super::parallel_map(spec.n_per_type, spec.max_concurrent, |r| {
        generate_round(gen, eligible[r % eligible.len()], spec.seed, r)
    });
    let mut questions = Vec::with_capacity(outputs.len() * 3);
    for out in outputs {
        let out = out?;
        if spec.include_atomic {
            questions.extend(out.atomic.simple);
            questions.push(out.atomic.disjunctive);
        }
        questions.extend([out.and, out.or, out.not]);
    }
    questions.sort_by(|a, b| a.question_id.cmp(&b.question_id));
    Ok(questions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chat::ChatError;
    use crate::genpipe::template::satisfies;
    use crate::model::Passage;

    fn corpus() -> Corpus {
        Corpus::new(vec![
            Passage::new("a", "zorb kel tam fep"),
            Passage::new("b", "zorb kel vin lur"),
            Passage::new("c", "zorb kel pim dox"),
        ])
        .unwrap()
    }

    fn cands(ids: &[&str]) -> Vec<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn atomic_counts_and_labels() {
        let c = corpus();
        let ctx = TemplateContext::new(&c);
        let g = Generator::Template(&ctx);
        let a = gen_atomic(&g, 0, &cands(&["a", "b"]), 0).unwrap();
        assert_eq!(a.simple.len(), 2);
        assert_eq!(a.simple[0].positives, set(&cands(&["a"])));
        assert!(a.simple[0].negatives.is_empty());
        assert_eq!(a.disjunctive.positives.len(), 2);
        assert_eq!(
            a.disjunctive.text,
            "What does the passage about kel zorb say?"
        );
    }

    #[test]
    fn template_keys_agree_with_labels() {
        let c = corpus();
        let ctx = TemplateContext::new(&c);
        let g = Generator::Template(&ctx);
        for round in 0..30 {
            let out = generate_round(
                &g,
                &Cluster {
                    cluster_id: 0,
                    passage_ids: cands(&["a", "b", "c"]),
                },
                1,
                round,
            )
            .unwrap();
            for q in [&out.and, &out.or, &out.not] {
                let key = key_of(q).unwrap();
                for id in &q.positives {
                    assert!(satisfies(&key, ctx.tokens_of(id).unwrap()), "{}", q.text);
                }
                for id in &q.negatives {
                    assert!(!satisfies(&key, ctx.tokens_of(id).unwrap()), "{}", q.text);
                }
            }
            assert!(out.and.text.contains(" and "));
            assert!(out.or.text.contains(" or "));
            assert!(out.not.text.contains(" but not related to "));
        }
    }

    #[test]
    fn or_needs_two_simple() {
        let c = corpus();
        let ctx = TemplateContext::new(&c);
        let g = Generator::Template(&ctx);
        let mut a = gen_atomic(&g, 0, &cands(&["a", "b"]), 0).unwrap();
        a.simple.truncate(1);
        assert!(matches!(
            gen_or(&g, &a, &mut round_rng(0, 0), "OR-0".into()),
            Err(GenError::TooFewSimple { needed: 2, got: 1 })
        ));
    }

    struct Echo;

    impl ChatModel for Echo {
        fn complete(&self, _: &str, user: &str) -> Result<String, ChatError> {
            Ok(format!("Q{}?", user.len()))
        }
    }

    struct Blank;

    impl ChatModel for Blank {
        fn complete(&self, _: &str, _: &str) -> Result<String, ChatError> {
            Ok("  \n".into())
        }
    }

    #[test]
    fn chat_mode_labels_and_empty_output() {
        let c = corpus();
        let prompts = PromptSet::default();
        let g = Generator::Chat {
            client: &Echo,
            prompts: &prompts,
            corpus: &c,
        };
        let cl = Cluster {
            cluster_id: 3,
            passage_ids: cands(&["a", "b", "c"]),
        };
        let out = generate_round(&g, &cl, 0, 0).unwrap();
        assert_eq!(out.and.positives.len(), 1);
        assert_eq!(out.and.provenance, Provenance::ChatModel);
        assert!(out.and.answer_key.is_none());
        assert_eq!(out.not.negatives.len(), 1);

        let g = Generator::Chat {
            client: &Blank,
            prompts: &prompts,
            corpus: &c,
        };
        assert!(matches!(
            generate_round(&g, &cl, 0, 0),
            Err(GenError::EmptyOutput(_))
        ));
    }

    #[test]
    fn questions_sorted_and_deterministic() {
        let c = corpus();
        let ctx = TemplateContext::new(&c);
        let g = Generator::Template(&ctx);
        let cl = [Cluster {
            cluster_id: 0,
            passage_ids: cands(&["a", "b", "c"]),
        }];
        let spec = GeneratorSpec::template(9, 12);
        let a = generate_questions(&g, &cl, &spec).unwrap();
        let b = generate_questions(
            &g,
            &cl,
            &GeneratorSpec {
                max_concurrent: 1,
                ..spec
            },
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 36);
        assert!(a.windows(2).all(|w| w[0].question_id < w[1].question_id));
    }
}
