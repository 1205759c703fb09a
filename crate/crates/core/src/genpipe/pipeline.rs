use nalgebra::DMatrix;

use crate::chat::ChatModel;
use crate::embed::{embed_texts, EmbedderSpec};
use crate::model::{Corpus, DatasetStats, Judgment};

use super::assemble::assemble_dataset;
use super::generate::{generate_questions, Generator};
use super::{
    cluster_passages, filter_questions, reduce_dims, Cluster, GenError, GenMode, GeneratedQuestion,
    GeneratorSpec, StopRule, TemplateContext,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSpec {
    pub embedder: EmbedderSpec,
    pub rank: usize,
    pub sample_cap: usize,
    pub stop: StopRule,
    pub generator: GeneratorSpec,
}

impl Default for PipelineSpec {
    fn default() -> Self {
        Self {
            embedder: EmbedderSpec::default(),
            rank: 128,
            sample_cap: 100_000,
            stop: StopRule::Threshold(0.8),
            generator: GeneratorSpec::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub clusters: Vec<Cluster>,
    /// Every generated question, with `filtered` set.
    pub questions: Vec<GeneratedQuestion>,
    pub judgments: Vec<Judgment>,
    pub stats: DatasetStats,
    pub warnings: Vec<String>,
}

/// Passage embeddings as an `n x dim` matrix.
pub fn embedding_matrix(corpus: &Corpus, spec: &EmbedderSpec) -> Result<DMatrix<f64>, GenError> {
    let vectors = embed_texts(spec, &corpus.texts())?;
    let dim = spec.dim;
    Ok(DMatrix::from_row_iterator(
        vectors.len(),
        dim,
        vectors
            .iter()
            .flat_map(|v| v.values().iter().map(|&x| f64::from(x))),
    ))
}

/// Embeds, reduces, clusters, generates, filters and assembles. `chat` is
/// required in chat mode and ignored in template mode.
pub fn run_pipeline(
    corpus: &Corpus,
    spec: &PipelineSpec,
    chat: Option<&dyn ChatModel>,
) -> Result<PipelineOutput, GenError> {
    spec.generator.validate()?;
    let x = embedding_matrix(corpus, &spec.embedder)?;
    let mut warnings = Vec::new();
    let rank = if spec.rank >= spec.embedder.dim {
        let r = spec.embedder.dim - 1;
        warnings.push(format!("rank {} clamped to {r}", spec.rank));
        r
    } else {
        spec.rank
    };
    let reduced = reduce_dims(&x, rank, spec.sample_cap.max(rank), spec.generator.seed)?;
    warnings.extend(reduced.warnings);
    let ids: Vec<String> = corpus.ids().map(str::to_string).collect();
    let clusters = cluster_passages(&reduced.projected, &ids, spec.stop)?;

    let ctx;
    let gen = match spec.generator.mode {
        GenMode::Template => {
            ctx = TemplateContext::new(corpus);
            Generator::Template(&ctx)
        }
        GenMode::Chat => Generator::Chat {
            client: chat
                .ok_or_else(|| GenError::InvalidSpec("chat mode needs a chat client".into()))?,
            prompts: &spec.generator.prompts,
            corpus,
        },
    };
    let questions = generate_questions(&gen, &clusters, &spec.generator)?;
    let questions = filter_questions(&gen, questions, spec.generator.max_concurrent);
    let (judgments, stats) = assemble_dataset(&questions, corpus)?;
    Ok(PipelineOutput {
        clusters,
        questions,
        judgments,
        stats,
        warnings,
    })
}
