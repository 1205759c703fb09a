//! Python bindings: corpora, hashed embeddings, exact indexes, Boolean query
//! evaluation, metrics and the template generation pipeline.

use std::collections::BTreeSet;
use std::fmt::Display;

use booldr_core::eval::{self, RunResult};
use booldr_core::genpipe::{self, GeneratorSpec, PipelineSpec, StopRule, SynthSpec};
use booldr_core::model::{self, judgments_to_jsonl};
use booldr_core::query::{self, MergePolicy, NotMode};
use booldr_core::{embed_texts, index, EmbedderSpec, RankedList, Similarity};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_ranked(pairs: Vec<(String, f64)>) -> PyResult<RankedList> {
    RankedList::from_pairs(pairs).map_err(value_err)
}

fn to_pairs(list: &RankedList) -> Vec<(String, f64)> {
    list.iter().map(|d| (d.doc_id.clone(), d.score)).collect()
}

fn from_json(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

#[pyclass(name = "Corpus", module = "booldr", skip_from_py_object)]
#[derive(Clone)]
struct PyCorpus(booldr_core::Corpus);

#[pymethods]
impl PyCorpus {
    #[new]
    fn new(passages: Vec<(String, String)>) -> PyResult<Self> {
        let passages = passages
            .into_iter()
            .map(|(id, text)| booldr_core::Passage::new(id, text))
            .collect();
        Ok(Self(booldr_core::Corpus::new(passages).map_err(value_err)?))
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self(model::load_corpus(path).map_err(value_err)?))
    }

    fn save(&self, path: &str) -> PyResult<()> {
        model::save_corpus(path, &self.0).map_err(value_err)
    }

    fn ids(&self) -> Vec<String> {
        self.0.ids().map(str::to_string).collect()
    }

    fn text(&self, id: &str) -> Option<String> {
        self.0.get(id).map(|p| p.text.clone())
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Corpus({} passages)", self.0.len())
    }
}

#[pyclass(name = "BooleanExpr", module = "booldr", eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyExpr(query::BooleanExpr);

#[pymethods]
impl PyExpr {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self(query::parse_boolean_query(text).map_err(value_err)?))
    }

    /// Splits a natural-language question on its connectives without a model.
    #[staticmethod]
    fn decompose(question: &str) -> PyResult<Self> {
        query::fallback_split(question)
            .map(Self)
            .ok_or_else(|| PyValueError::new_err("question has no content"))
    }

    fn render(&self) -> String {
        self.0.render()
    }

    fn atoms(&self) -> Vec<String> {
        self.0.atoms().into_iter().map(str::to_string).collect()
    }

    fn depth(&self) -> usize {
        self.0.depth()
    }

    fn __repr__(&self) -> String {
        format!("BooleanExpr({})", self.0.render())
    }
}

#[pyclass(name = "Index", module = "booldr")]
struct PyIndex(booldr_core::Index);

fn policy(final_k: usize, not_mode: &str, depth_factor: usize) -> PyResult<MergePolicy> {
    let mode: NotMode = not_mode.parse().map_err(value_err)?;
    Ok(MergePolicy::default()
        .with_final_k(final_k)
        .with_not_mode(mode)
        .with_depth_factor(depth_factor))
}

#[pymethods]
impl PyIndex {
    #[staticmethod]
    #[pyo3(signature = (corpus, dim = 256, seed = 0, similarity = "cosine"))]
    fn build(corpus: &PyCorpus, dim: usize, seed: u64, similarity: &str) -> PyResult<Self> {
        let sim: Similarity = similarity.parse().map_err(value_err)?;
        let spec = EmbedderSpec::hashed_bow(dim, seed);
        Ok(Self(
            booldr_core::build_index(&corpus.0, &spec, sim).map_err(value_err)?,
        ))
    }

    /// Loads an index file; embedder mismatch warnings are returned alongside.
    #[staticmethod]
    fn load(path: &str) -> PyResult<(Self, Vec<String>)> {
        let loaded = index::load(path).map_err(value_err)?;
        Ok((Self(loaded.index), loaded.warnings))
    }

    fn save(&self, path: &str) -> PyResult<()> {
        index::persist(&self.0, path).map_err(value_err)
    }

    fn top_k(&self, query: &str, k: usize) -> PyResult<Vec<(String, f64)>> {
        Ok(to_pairs(&self.0.top_k(query, k).map_err(value_err)?))
    }

    #[pyo3(signature = (expr, k = 10, not_mode = "hard", depth_factor = 2))]
    fn evaluate(
        &self,
        py: Python<'_>,
        expr: &PyExpr,
        k: usize,
        not_mode: &str,
        depth_factor: usize,
    ) -> PyResult<Vec<(String, f64)>> {
        let p = policy(k, not_mode, depth_factor)?;
        let out = py
            .detach(|| query::evaluate_expr(&self.0, &expr.0, &p))
            .map_err(value_err)?;
        Ok(to_pairs(&out))
    }

    fn doc_ids(&self) -> Vec<String> {
        self.0.doc_ids().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyfunction]
#[pyo3(signature = (texts, dim = 256, seed = 0, normalize = true))]
fn embed(texts: Vec<String>, dim: usize, seed: u64, normalize: bool) -> PyResult<Vec<Vec<f32>>> {
    let spec = EmbedderSpec::hashed_bow(dim, seed).with_normalize(normalize);
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    Ok(embed_texts(&spec, &refs)
        .map_err(value_err)?
        .into_iter()
        .map(|e| e.into_vec())
        .collect())
}

#[pyfunction]
fn merge_and(a: Vec<(String, f64)>, b: Vec<(String, f64)>) -> PyResult<Vec<(String, f64)>> {
    Ok(to_pairs(&query::merge_and(&to_ranked(a)?, &to_ranked(b)?)))
}

#[pyfunction]
fn merge_or(a: Vec<(String, f64)>, b: Vec<(String, f64)>) -> PyResult<Vec<(String, f64)>> {
    Ok(to_pairs(&query::merge_or(&to_ranked(a)?, &to_ranked(b)?)))
}

#[pyfunction]
#[pyo3(signature = (a, b, mode = "hard"))]
fn merge_not(
    a: Vec<(String, f64)>,
    b: Vec<(String, f64)>,
    mode: &str,
) -> PyResult<Vec<(String, f64)>> {
    let mode: NotMode = mode.parse().map_err(value_err)?;
    Ok(to_pairs(&query::merge_not(
        &to_ranked(a)?,
        &to_ranked(b)?,
        mode,
    )))
}

#[pyfunction]
fn mrr_at_k(ranked: Vec<(String, f64)>, positives: BTreeSet<String>, k: usize) -> PyResult<f64> {
    Ok(eval::mrr_at_k(&to_ranked(ranked)?, &positives, k))
}

#[pyfunction]
fn neg_recall_at_k(
    ranked: Vec<(String, f64)>,
    negatives: BTreeSet<String>,
    k: usize,
) -> PyResult<Option<f64>> {
    Ok(eval::neg_recall_at_k(&to_ranked(ranked)?, &negatives, k))
}

/// Report for a run file against a judgments file, as a dict.
#[pyfunction]
#[pyo3(signature = (run_path, judgments_path, k = 10))]
fn evaluate_run(
    py: Python<'_>,
    run_path: &str,
    judgments_path: &str,
    k: usize,
) -> PyResult<Py<PyAny>> {
    let run = RunResult::load(run_path).map_err(value_err)?;
    let judgments = model::load_judgments(judgments_path).map_err(value_err)?;
    let report = eval::evaluate_run(&run, &judgments, k).map_err(value_err)?;
    from_json(py, &eval::render_report(&report, eval::ReportFormat::Json))
}

#[pyfunction]
fn compute_stats(py: Python<'_>, judgments_path: &str) -> PyResult<Py<PyAny>> {
    let judgments = model::load_judgments(judgments_path).map_err(value_err)?;
    let stats = model::compute_stats(&judgments);
    from_json(py, &serde_json::to_string(&stats).map_err(value_err)?)
}

#[pyfunction]
#[pyo3(signature = (n_topics = 20, passages_per_topic = 8, seed = 0))]
fn synth_corpus(n_topics: usize, passages_per_topic: usize, seed: u64) -> PyCorpus {
    let spec = SynthSpec {
        n_topics,
        passages_per_topic,
        seed,
        ..SynthSpec::default()
    };
    PyCorpus(genpipe::synth_corpus(&spec).corpus)
}

/// Template-mode generation end to end. Returns a dict with `clusters`,
/// `questions` and `judgments` (lists of dicts) and `warnings`.
#[pyfunction]
#[pyo3(signature = (corpus, seed = 0, per_type = 10, clusters = None, threshold = 0.8, dim = 256, rank = 128))]
#[allow(clippy::too_many_arguments)]
fn run_template_pipeline(
    py: Python<'_>,
    corpus: &PyCorpus,
    seed: u64,
    per_type: usize,
    clusters: Option<usize>,
    threshold: f64,
    dim: usize,
    rank: usize,
) -> PyResult<Py<PyAny>> {
    let spec = PipelineSpec {
        embedder: EmbedderSpec::hashed_bow(dim, 0),
        rank,
        stop: clusters.map_or(StopRule::Threshold(threshold), StopRule::TargetCount),
        generator: GeneratorSpec::template(seed, per_type),
        ..PipelineSpec::default()
    };
    let out = py
        .detach(|| genpipe::run_pipeline(&corpus.0, &spec, None))
        .map_err(value_err)?;
    let jsonl_to_list = |text: String| format!("[{}]", text.lines().collect::<Vec<_>>().join(","));
    let body = format!(
        "{{\"clusters\":{},\"questions\":{},\"judgments\":{},\"warnings\":{}}}",
        jsonl_to_list(genpipe::clusters_to_jsonl(&out.clusters)),
        jsonl_to_list(genpipe::questions_to_jsonl(&out.questions)),
        jsonl_to_list(judgments_to_jsonl(&out.judgments)),
        serde_json::to_string(&out.warnings).map_err(value_err)?,
    );
    from_json(py, &body)
}

#[pymodule]
fn booldr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyExpr>()?;
    m.add_class::<PyIndex>()?;
    m.add_function(wrap_pyfunction!(embed, m)?)?;
    m.add_function(wrap_pyfunction!(merge_and, m)?)?;
    m.add_function(wrap_pyfunction!(merge_or, m)?)?;
    m.add_function(wrap_pyfunction!(merge_not, m)?)?;
    m.add_function(wrap_pyfunction!(mrr_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(neg_recall_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_run, m)?)?;
    m.add_function(wrap_pyfunction!(compute_stats, m)?)?;
    m.add_function(wrap_pyfunction!(synth_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(run_template_pipeline, m)?)?;
    Ok(())
}
