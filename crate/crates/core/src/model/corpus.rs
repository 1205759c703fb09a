use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// A single retrievable unit of text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub id: String,
    pub text: String,
}

impl Passage {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
        }
    }
}

/// An ordered passage collection with unique ids.
///
/// Iteration order is the insertion order and never changes after
/// construction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    passages: Vec<Passage>,
    positions: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(passages: Vec<Passage>) -> Result<Self, ModelError> {
        let mut positions = HashMap::with_capacity(passages.len());
        for (i, p) in passages.iter().enumerate() {
            validate_passage(p, None)?;
            if positions.insert(p.id.clone(), i).is_some() {
                return Err(ModelError::DuplicateId {
                    id: p.id.clone(),
                    line: None,
                });
            }
        }
        Ok(Self {
            passages,
            positions,
        })
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Passage> {
        self.passages.iter()
    }

    pub fn get(&self, id: &str) -> Option<&Passage> {
        self.positions.get(id).map(|&i| &self.passages[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.positions.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.positions.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.passages.iter().map(|p| p.id.as_str())
    }

    pub fn texts(&self) -> Vec<&str> {
        self.passages.iter().map(|p| p.text.as_str()).collect()
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Passage;
    type IntoIter = std::slice::Iter<'a, Passage>;

    fn into_iter(self) -> Self::IntoIter {
        self.passages.iter()
    }
}

fn validate_passage(p: &Passage, line: Option<usize>) -> Result<(), ModelError> {
    if p.id.is_empty() {
        return Err(ModelError::Invalid {
            line,
            message: "passage id is empty".into(),
        });
    }
    if p.text.is_empty() {
        return Err(ModelError::Invalid {
            line,
            message: format!("passage {:?} has empty text", p.id),
        });
    }
    Ok(())
}

/// Parses one corpus line: a JSON object with `id` and `text`, or an
/// `id<TAB>text` record.
fn parse_corpus_line(line: &str, line_no: usize) -> Result<Passage, ModelError> {
    let trimmed = line.trim_start();
    if trimmed.starts_with('{') {
        return serde_json::from_str::<Passage>(trimmed).map_err(|e| ModelError::Parse {
            line: line_no,
            message: e.to_string(),
        });
    }
    match line.split_once('\t') {
        Some((id, text)) if !text.contains('\t') => Ok(Passage::new(id.trim(), text.trim_end())),
        _ => Err(ModelError::Parse {
            line: line_no,
            message: "expected a JSON object or a 2-column tab-separated record".into(),
        }),
    }
}

/// Reads a corpus file. Blank lines are ignored; line numbers are 1-based.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, ModelError> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path).map_err(|e| ModelError::io(path, e))?);
    let mut passages = Vec::new();
    let mut positions = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| ModelError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let passage = parse_corpus_line(&line, line_no)?;
        validate_passage(&passage, Some(line_no))?;
        if positions
            .insert(passage.id.clone(), passages.len())
            .is_some()
        {
            return Err(ModelError::DuplicateId {
                id: passage.id,
                line: Some(line_no),
            });
        }
        passages.push(passage);
    }
    Ok(Corpus {
        passages,
        positions,
    })
}

pub fn save_corpus(path: impl AsRef<Path>, corpus: &Corpus) -> Result<(), ModelError> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(|e| ModelError::io(path, e))?);
    for p in corpus {
        let line = serde_json::to_string(p).expect("passage serializes");
        writeln!(w, "{line}").map_err(|e| ModelError::io(path, e))?;
    }
    w.flush().map_err(|e| ModelError::io(path, e))
}
