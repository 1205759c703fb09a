//! MRR@k and NegRecall@k, macro-averaged overall and per question type.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{Judgment, QuestionType};
use crate::ranking::RankedList;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("run was retrieved to depth {run_k} but evaluation asked for k = {k}")]
    KMismatch { run_k: usize, k: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown report format {0:?} (expected table|json)")]
    UnknownFormat(String),
    #[error("malformed report: {0}")]
    Report(String),
}

/// Reciprocal rank of the first positive within the top `k`, 0 on a miss.
pub fn mrr_at_k(ranked: &RankedList, positives: &BTreeSet<String>, k: usize) -> f64 {
    ranked
        .top(k)
        .iter()
        .position(|d| positives.contains(&d.doc_id))
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

/// Fraction of the explicit negatives found in the top `k`; `None` when
/// there are no negatives.
pub fn neg_recall_at_k(ranked: &RankedList, negatives: &BTreeSet<String>, k: usize) -> Option<f64> {
    if negatives.is_empty() {
        return None;
    }
    let hits = ranked
        .top(k)
        .iter()
        .filter(|d| negatives.contains(&d.doc_id))
        .count();
    Some(hits as f64 / negatives.len() as f64)
}

/// Ranked results per question id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunResult {
    /// Retrieval depth the run was produced with, when known.
    pub k: Option<usize>,
    pub lists: BTreeMap<String, RankedList>,
}

#[derive(Serialize, Deserialize)]
struct RunLine {
    question_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    ranked: RankedList,
}

impl RunResult {
    pub fn new(k: Option<usize>) -> Self {
        Self {
            k,
            lists: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, question_id: impl Into<String>, list: RankedList) {
        self.lists.insert(question_id.into(), list);
    }

    pub fn get(&self, question_id: &str) -> Option<&RankedList> {
        self.lists.get(question_id)
    }

    pub fn parse_jsonl(text: &str) -> Result<Self, EvalError> {
        let mut run = RunResult::default();
        let mut declared: Option<(usize, usize)> = None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: RunLine = serde_json::from_str(line).map_err(|e| EvalError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            if let Some(k) = parsed.k {
                match declared {
                    Some((k0, _)) if k0 != k => {
                        return Err(EvalError::Parse {
                            line: line_no,
                            message: format!("k = {k} disagrees with k = {k0} declared earlier"),
                        })
                    }
                    None => declared = Some((k, line_no)),
                    _ => {}
                }
                if parsed.ranked.len() > k {
                    return Err(EvalError::Parse {
                        line: line_no,
                        message: format!("{} results exceed declared k = {k}", parsed.ranked.len()),
                    });
                }
            }
            if run
                .lists
                .insert(parsed.question_id.clone(), parsed.ranked)
                .is_some()
            {
                return Err(EvalError::Parse {
                    line: line_no,
                    message: format!("duplicate question id {:?}", parsed.question_id),
                });
            }
        }
        run.k = declared.map(|(k, _)| k);
        Ok(run)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (qid, list) in &self.lists {
            let line = RunLine {
                question_id: qid.clone(),
                k: self.k,
                ranked: list.clone(),
            };
            out.push_str(&serde_json::to_string(&line).expect("run line serializes"));
            out.push('\n');
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let io = |source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut text = String::new();
        for line in BufReader::new(File::open(path).map_err(io)?).lines() {
            text.push_str(&line.map_err(io)?);
            text.push('\n');
        }
        Self::parse_jsonl(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EvalError> {
        let path = path.as_ref();
        let io = |source| EvalError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        w.write_all(self.to_jsonl().as_bytes()).map_err(io)?;
        w.flush().map_err(io)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SliceMetrics {
    pub n_questions: usize,
    /// Questions with at least one explicit negative.
    pub n_with_negatives: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mrr_at_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neg_recall_at_k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k: usize,
    pub overall: SliceMetrics,
    pub per_type: BTreeMap<QuestionType, SliceMetrics>,
    /// Judged questions with no entry in the run (scored as empty lists).
    #[serde(default)]
    pub missing: Vec<String>,
}

#[derive(Default)]
struct SliceAcc {
    n: usize,
    mrr_sum: f64,
    n_neg: usize,
    neg_sum: f64,
}

impl SliceAcc {
    fn add(&mut self, mrr: f64, neg: Option<f64>) {
        self.n += 1;
        self.mrr_sum += mrr;
        if let Some(v) = neg {
            self.n_neg += 1;
            self.neg_sum += v;
        }
    }

    fn finish(&self) -> SliceMetrics {
        SliceMetrics {
            n_questions: self.n,
            n_with_negatives: self.n_neg,
            mrr_at_k: (self.n > 0).then(|| self.mrr_sum / self.n as f64),
            neg_recall_at_k: (self.n_neg > 0).then(|| self.neg_sum / self.n_neg as f64),
        }
    }
}

/// Macro-averaged metrics over `judgments`. Judged questions absent from the
/// run count as empty result lists and are listed in `missing`.
pub fn evaluate_run(
    run: &RunResult,
    judgments: &[Judgment],
    k: usize,
) -> Result<EvalReport, EvalError> {
    if k < 1 {
        return Err(EvalError::InvalidK);
    }
    if let Some(run_k) = run.k {
        if k > run_k {
            return Err(EvalError::KMismatch { run_k, k });
        }
    }
    let empty = RankedList::empty();
    let mut overall = SliceAcc::default();
    let mut per_type: BTreeMap<QuestionType, SliceAcc> =
        [QuestionType::And, QuestionType::Or, QuestionType::Not]
            .into_iter()
            .map(|t| (t, SliceAcc::default()))
            .collect();
    let mut missing = Vec::new();
    for j in judgments {
        let ranked = match run.get(&j.question_id) {
            Some(l) => l,
            None => {
                missing.push(j.question_id.clone());
                &empty
            }
        };
        let mrr = mrr_at_k(ranked, &j.positives, k);
        let neg = neg_recall_at_k(ranked, &j.negatives, k);
        overall.add(mrr, neg);
        per_type.entry(j.qtype).or_default().add(mrr, neg);
    }
    if !missing.is_empty() {
        log::warn!("{} judged questions missing from run", missing.len());
    }
    missing.sort();
    Ok(EvalReport {
        k,
        overall: overall.finish(),
        per_type: per_type.into_iter().map(|(t, a)| (t, a.finish())).collect(),
        missing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Json,
}

impl FromStr for ReportFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" | "text-table" | "text" => Ok(ReportFormat::Table),
            "json" => Ok(ReportFormat::Json),
            other => Err(EvalError::UnknownFormat(other.to_string())),
        }
    }
}

/// Formats a fraction as a percentage with two decimals: 0.3761 -> "37.61".
pub fn percent(v: f64) -> String {
    format!("{:.2}", v * 100.0)
}

pub fn render_report(report: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Table => {
            let k = report.k;
            let mut out = format!(
                "{:<12} {:>6} {:>10} {:>14}\n",
                "slice",
                "n",
                format!("MRR@{k}"),
                format!("NegRecall@{k}")
            );
            let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), percent);
            let mut row = |name: &str, m: &SliceMetrics| {
                out.push_str(&format!(
                    "{:<12} {:>6} {:>10} {:>14}\n",
                    name,
                    m.n_questions,
                    cell(m.mrr_at_k),
                    cell(m.neg_recall_at_k)
                ));
            };
            if report.overall.n_questions > 0 {
                row("ALL", &report.overall);
            }
            for (t, m) in &report.per_type {
                if m.n_questions > 0 {
                    row(t.as_str(), m);
                }
            }
            out
        }
    }
}

pub fn parse_report_json(text: &str) -> Result<EvalReport, EvalError> {
    serde_json::from_str(text).map_err(|e| EvalError::Report(e.to_string()))
}
