pub const QUESTIONER_SYSTEM: &str = "You are an experienced questioner and retrieval system tester. You need to generate questions based on the given paragraphs and related instructions, which will be used as queries to test if the retrieval system can understand the Boolean logic contained in natural language. The questions you pose should align as closely as possible with the retrieval system's scenario, meaning the language style of the questions should resemble that of a search engine user. Besides, please vary your expressions more and avoid sticking to just a few ways of saying things. Note, you only need to output one question no longer than 32 words, without any extra content.";

pub const ANSWERER_SYSTEM: &str = "You are an expert answerer who needs to provide answers to the questions based on the given paragraphs. If the question can be answered by the paragraph(s), please provide a brief answer. If the question cannot be answered by the paragraph(s), please respond with \"Cannot answer\". Note, you only need to output one answer no longer than 64 words or \"Cannot answer\", without any extra content.";

pub const SIMPLE_PROMPT: &str =
    "Please propose a question that can be answered by the following paragraph.\n\n[PARAGRAPH]";

pub const DISJUNCTIVE_PROMPT: &str = "Please propose a question that can be answered by any of the following paragraphs. Please make sure that each paragraph can provide answers to the question individually.\n\n[PARAGRAPH]";

pub const AND_PROMPT: &str = "I need to test whether the retrieval system can understand the logical conjunction (AND) implied in natural language. Please generate a new question by adding constraints to the question \"[QUESTION]\", so that only paragraphs marked with [positive] provide the answer to the new question, while paragraphs marked with [negative] cannot provide the answer.\n\n[POSITIVE PARAGRAPHS]\n\n[NEGATIVE PARAGRAPHS]";

pub const OR_PROMPT: &str = "I need to test if the retrieval system can understand the logical disjunction (OR) implied in natural language. Please convert the following expression containing the logical disjunction (OR) into a natural language question.\n\n[LOGICAL EXPRESSION]";

pub const NOT_PROMPT: &str = "I need to test if the retrieval system can understand the logic of negation (NOT) implied in natural language. Please convert the following expression containing the logic of negation (NOT) into a natural language question.\n\n[LOGICAL EXPRESSION]";

pub const ANSWER_PROMPT: &str = "Please provide a brief answer to the following question according to the given paragraph(s). If the question cannot be answered by the paragraph(s), please respond with \"Cannot answer\".\n\nquestion:\n[QUESTION]\n\nparagraphs:\n[PARAGRAPHS]";

/// System messages and per-step prompt templates. Placeholders are written
/// in square brackets, e.g. `[PARAGRAPH]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub questioner_system: String,
    pub answerer_system: String,
    pub simple: String,
    pub disjunctive: String,
    pub and: String,
    pub or: String,
    pub not: String,
    pub answer: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        Self {
            questioner_system: QUESTIONER_SYSTEM.into(),
            answerer_system: ANSWERER_SYSTEM.into(),
            simple: SIMPLE_PROMPT.into(),
            disjunctive: DISJUNCTIVE_PROMPT.into(),
            and: AND_PROMPT.into(),
            or: OR_PROMPT.into(),
            not: NOT_PROMPT.into(),
            answer: ANSWER_PROMPT.into(),
        }
    }
}

/// Substitutes `[NAME]` placeholders in one pass, so substituted values are
/// never re-scanned.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'scan: while let Some(open) = rest.find('[') {
        for (name, value) in values {
            let tail = &rest[open + 1..];
            if tail.starts_with(name) && tail[name.len()..].starts_with(']') {
                out.push_str(&rest[..open]);
                out.push_str(value);
                rest = &tail[name.len() + 1..];
                continue 'scan;
            }
        }
        out.push_str(&rest[..=open]);
        rest = &rest[open + 1..];
    }
    out.push_str(rest);
    out
}
