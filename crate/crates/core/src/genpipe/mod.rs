//! Benchmark synthesis: cluster passages, sample candidates, generate typed
//! Boolean questions, filter them for cyclic consistency and emit judgments.

mod assemble;
mod cluster;
mod filter;
mod generate;
mod pipeline;
mod prompts;
mod sample;
mod svd;
mod synth;
mod template;

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use assemble::{assemble_dataset, check_labels};
pub use cluster::{cluster_passages, cluster_rows, StopRule};
pub use filter::{cyclic_filter, filter_questions, is_refusal, template_answers};
pub use generate::{
    gen_and, gen_atomic, gen_not, gen_or, generate_questions, generate_round, Atomic, Generator,
    RoundOutput,
};
pub use pipeline::{embedding_matrix, run_pipeline, PipelineOutput, PipelineSpec};
pub use prompts::{fill, PromptSet};
pub use sample::{round_rng, sample_candidates};
pub use svd::{reduce_dims, SvdProjection};
pub use synth::{synth_corpus, SynthCorpus, SynthSpec};
pub use template::{TemplateContext, STOPWORDS};

use crate::chat::ChatError;
use crate::embed::EmbedError;
use crate::model::{ModelError, QuestionType};

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("invalid rank {rank} for dimension {dim}")]
    InvalidRank { rank: usize, dim: usize },
    #[error("sample cap {cap} is below rank {rank}")]
    SampleCap { cap: usize, rank: usize },
    #[error("matrix has numerical rank 0")]
    DegenerateRank,
    #[error("clustering needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("invalid stop rule: {0}")]
    InvalidThreshold(String),
    #[error("cluster {cluster_id} has {size} passages; at least 2 are needed")]
    ClusterTooSmall { cluster_id: usize, size: usize },
    #[error("need at least {needed} simple questions, got {got}")]
    TooFewSimple { needed: usize, got: usize },
    #[error("chat model returned empty output for {0}")]
    EmptyOutput(String),
    #[error(transparent)]
    Chat(#[from] ChatError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("question {question_id}: {message}")]
    Label {
        question_id: String,
        message: String,
    },
    #[error("unknown passage {0:?}")]
    UnknownPassage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub cluster_id: usize,
    pub passage_ids: Vec<String>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.passage_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passage_ids.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Template,
    ChatModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedQuestion {
    pub question_id: String,
    pub qtype: QuestionType,
    pub text: String,
    pub source_cluster: usize,
    pub candidate_ids: Vec<String>,
    pub positives: BTreeSet<String>,
    pub negatives: BTreeSet<String>,
    pub provenance: Provenance,
    /// Passed the cyclic-consistency filter.
    #[serde(default)]
    pub filtered: bool,
    /// Template mode only: the question's semantics as a Boolean expression
    /// whose atoms are space-separated token sets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_key: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GenMode {
    #[default]
    Template,
    Chat,
}

impl FromStr for GenMode {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "template" => Ok(GenMode::Template),
            "chat" => Ok(GenMode::Chat),
            other => Err(GenError::InvalidSpec(format!(
                "unknown mode {other:?} (expected template|chat)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub mode: GenMode,
    pub chat_endpoint: Option<String>,
    pub chat_model: Option<String>,
    pub prompts: PromptSet,
    pub seed: u64,
    pub n_per_type: usize,
    pub max_concurrent: usize,
    /// Also emit the intermediate SIMPLE and DISJUNCTIVE questions.
    pub include_atomic: bool,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            mode: GenMode::Template,
            chat_endpoint: None,
            chat_model: None,
            prompts: PromptSet::default(),
            seed: 0,
            n_per_type: 10,
            max_concurrent: 4,
            include_atomic: false,
        }
    }
}

impl GeneratorSpec {
    pub fn template(seed: u64, n_per_type: usize) -> Self {
        Self {
            seed,
            n_per_type,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let chat_fields = self.chat_endpoint.is_some() || self.chat_model.is_some();
        match self.mode {
            GenMode::Template if chat_fields => Err(GenError::InvalidSpec(
                "chat endpoint/model given in template mode".into(),
            )),
            GenMode::Chat if self.chat_model.is_none() => {
                Err(GenError::InvalidSpec("chat mode needs a model name".into()))
            }
            _ if self.max_concurrent == 0 => Err(GenError::InvalidSpec(
                "max_concurrent must be at least 1".into(),
            )),
            _ => Ok(()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> GenError + '_ {
    move |source| GenError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, GenError> {
    let f = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| GenError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("record serializes"));
        out.push('\n');
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<(), GenError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    w.write_all(text.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn clusters_to_jsonl(clusters: &[Cluster]) -> String {
    to_jsonl(clusters)
}

pub fn load_clusters(path: impl AsRef<Path>) -> Result<Vec<Cluster>, GenError> {
    read_jsonl(path.as_ref())
}

pub fn save_clusters(path: impl AsRef<Path>, clusters: &[Cluster]) -> Result<(), GenError> {
    write_text(path.as_ref(), &clusters_to_jsonl(clusters))
}

pub fn questions_to_jsonl(questions: &[GeneratedQuestion]) -> String {
    to_jsonl(questions)
}

pub fn load_questions(path: impl AsRef<Path>) -> Result<Vec<GeneratedQuestion>, GenError> {
    read_jsonl(path.as_ref())
}

pub fn save_questions(
    path: impl AsRef<Path>,
    questions: &[GeneratedQuestion],
) -> Result<(), GenError> {
    write_text(path.as_ref(), &questions_to_jsonl(questions))
}

/// Applies `f` to `0..n` on up to `workers` threads; results keep index order.
pub(crate) fn parallel_map<T: Send>(
    n: usize,
    workers: usize,
    f: impl Fn(usize) -> T + Sync,
) -> Vec<T> {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    let workers = workers.min(n).max(1);
    if workers == 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let out = f(i);
                slots.lock().unwrap()[i] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|o| o.expect("every index ran"))
        .collect()
}
