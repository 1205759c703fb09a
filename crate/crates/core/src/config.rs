//! Flat `key = value` configuration. Lines starting with `#` are comments.
//! Command-line flags are applied on top of the file.

use std::path::{Path, PathBuf};

use crate::chat::{CassetteMode, ChatConfig};
use crate::embed::{EmbedderKind, EmbedderSpec};
use crate::genpipe::{GenMode, GeneratorSpec, PipelineSpec, StopRule};
use crate::index::Similarity;
use crate::query::{MergePolicy, NotMode};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected key = value")]
    Syntax { line: usize },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("bad value {value:?} for {key}: {message}")]
    Value {
        key: String,
        value: String,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppConfig {
    pub embedder: EmbedderSpec,
    pub similarity: Similarity,
    pub index: Option<PathBuf>,
    pub merge: MergePolicy,
    pub eval_k: usize,
    pub gen_mode: GenMode,
    pub seed: u64,
    pub per_type: usize,
    pub max_concurrent: usize,
    pub rank: usize,
    pub sample_cap: usize,
    pub stop: StopRule,
    pub chat_endpoint: Option<String>,
    pub chat_model: Option<String>,
    pub chat_cassette: Option<PathBuf>,
    pub chat_cassette_mode: CassetteMode,
    pub log_level: String,
}

impl Default for AppConfig {
    fn default() -> Self {
        let pipeline = PipelineSpec::default();
        let gen = GeneratorSpec::default();
        Self {
            embedder: EmbedderSpec::default(),
            similarity: Similarity::Cosine,
            index: None,
            merge: MergePolicy::default(),
            eval_k: 10,
            gen_mode: gen.mode,
            seed: gen.seed,
            per_type: gen.n_per_type,
            max_concurrent: gen.max_concurrent,
            rank: pipeline.rank,
            sample_cap: pipeline.sample_cap,
            stop: pipeline.stop,
            chat_endpoint: None,
            chat_model: None,
            chat_cassette: None,
            chat_cassette_mode: CassetteMode::Live,
            log_level: "warn".into(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::Value {
        key: key.to_string(),
        value: value.to_string(),
        message: e.to_string(),
    })
}

fn optional(value: &str) -> Option<String> {
    (!value.is_empty()).then(|| value.to_string())
}

impl AppConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.merge_file(path)?;
        Ok(cfg)
    }

    pub fn merge_file(&mut self, path: impl AsRef<Path>) -> Result<(), ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.merge_str(&text)
    }

    pub fn merge_str(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "embedder.kind" => self.embedder.kind = parse::<EmbedderKind>(key, value)?,
            "embedder.dim" => self.embedder.dim = parse(key, value)?,
            "embedder.seed" => {
                self.embedder.seed = optional(value).map(|v| parse(key, &v)).transpose()?
            }
            "embedder.normalize" => self.embedder.normalize = parse(key, value)?,
            "embedder.endpoint" => self.embedder.endpoint = optional(value),
            "similarity" => self.similarity = parse(key, value)?,
            "index" => self.index = optional(value).map(PathBuf::from),
            "merge.depth_factor" => self.merge.candidate_depth_factor = parse(key, value)?,
            "merge.not_mode" => self.merge.not_mode = parse::<NotMode>(key, value)?,
            "merge.final_k" => self.merge.final_k = parse(key, value)?,
            "merge.normalize_scores" => self.merge.normalize_scores = parse(key, value)?,
            "eval.k" => self.eval_k = parse(key, value)?,
            "gen.mode" => self.gen_mode = parse(key, value)?,
            "gen.per_type" => self.per_type = parse(key, value)?,
            "gen.max_concurrent" => self.max_concurrent = parse(key, value)?,
            "gen.rank" => self.rank = parse(key, value)?,
            "gen.sample_cap" => self.sample_cap = parse(key, value)?,
            "gen.threshold" => self.stop = StopRule::Threshold(parse(key, value)?),
            "gen.clusters" => self.stop = StopRule::TargetCount(parse(key, value)?),
            "seed" => self.seed = parse(key, value)?,
            "chat.endpoint" => self.chat_endpoint = optional(value),
            "chat.model" => self.chat_model = optional(value),
            "chat.cassette" => self.chat_cassette = optional(value).map(PathBuf::from),
            "chat.cassette_mode" => self.chat_cassette_mode = parse(key, value)?,
            "log_level" => self.log_level = value.to_string(),
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// The effective configuration in file syntax, one key per line.
    pub fn render(&self) -> String {
        let opt = |v: &Option<String>| v.clone().unwrap_or_default();
        let path = |v: &Option<PathBuf>| {
            v.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        let (stop_key, stop_value) = match self.stop {
            StopRule::Threshold(t) => ("gen.threshold", t.to_string()),
            StopRule::TargetCount(c) => ("gen.clusters", c.to_string()),
        };
        let kind = match self.embedder.kind {
            EmbedderKind::HashedBow => "hashed-bow",
            EmbedderKind::Remote => "remote",
        };
        let mode = match self.gen_mode {
            GenMode::Template => "template",
            GenMode::Chat => "chat",
        };
        let cassette_mode = match self.chat_cassette_mode {
            CassetteMode::Live => "live",
            CassetteMode::Record => "record",
            CassetteMode::Replay => "replay",
        };
        let lines = [
            ("embedder.kind", kind.to_string()),
            ("embedder.dim", self.embedder.dim.to_string()),
            (
                "embedder.seed",
                self.embedder
                    .seed
                    .map(|s| s.to_string())
                    .unwrap_or_default(),
            ),
            ("embedder.normalize", self.embedder.normalize.to_string()),
            ("embedder.endpoint", opt(&self.embedder.endpoint)),
            ("similarity", self.similarity.to_string()),
            ("index", path(&self.index)),
            (
                "merge.depth_factor",
                self.merge.candidate_depth_factor.to_string(),
            ),
            ("merge.not_mode", self.merge.not_mode.to_string()),
            ("merge.final_k", self.merge.final_k.to_string()),
            (
                "merge.normalize_scores",
                self.merge.normalize_scores.to_string(),
            ),
            ("eval.k", self.eval_k.to_string()),
            ("gen.mode", mode.to_string()),
            ("gen.per_type", self.per_type.to_string()),
            ("gen.max_concurrent", self.max_concurrent.to_string()),
            ("gen.rank", self.rank.to_string()),
            ("gen.sample_cap", self.sample_cap.to_string()),
            (stop_key, stop_value),
            ("seed", self.seed.to_string()),
            ("chat.endpoint", opt(&self.chat_endpoint)),
            ("chat.model", opt(&self.chat_model)),
            ("chat.cassette", path(&self.chat_cassette)),
            ("chat.cassette_mode", cassette_mode.to_string()),
            ("log_level", self.log_level.clone()),
        ];
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn generator_spec(&self) -> GeneratorSpec {
        let chat = self.gen_mode == GenMode::Chat;
        GeneratorSpec {
            mode: self.gen_mode,
            chat_endpoint: if chat {
                self.chat_endpoint.clone()
            } else {
                None
            },
            chat_model: if chat { self.chat_model.clone() } else { None },
            seed: self.seed,
            n_per_type: self.per_type,
            max_concurrent: self.max_concurrent,
            ..GeneratorSpec::default()
        }
    }

    pub fn pipeline_spec(&self) -> PipelineSpec {
        PipelineSpec {
            embedder: self.embedder.clone(),
            rank: self.rank,
            sample_cap: self.sample_cap,
            stop: self.stop,
            generator: self.generator_spec(),
        }
    }

    /// Chat settings, when a chat model is configured.
    pub fn chat_config(&self) -> Option<ChatConfig> {
        let model = self.chat_model.clone()?;
        Some(ChatConfig {
            endpoint: self.chat_endpoint.clone(),
            model,
            api_key: None,
            cassette: self.chat_cassette.clone(),
            mode: self.chat_cassette_mode,
            retry: Default::default(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_renders() {
        let mut c = AppConfig::default();
        c.merge_str("# comment\n\nembedder.dim = 64\nmerge.not_mode=soft\ngen.clusters = 7\nchat.model = m\n")
            .unwrap();
        assert_eq!(c.embedder.dim, 64);
        assert_eq!(c.merge.not_mode, NotMode::Soft);
        assert_eq!(c.stop, StopRule::TargetCount(7));
        let mut back = AppConfig::default();
        back.merge_str(&c.render()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn errors() {
        let mut c = AppConfig::default();
        assert!(matches!(
            c.merge_str("nonsense"),
            Err(ConfigError::Syntax { line: 1 })
        ));
        assert!(matches!(
            c.set("bogus", "1"),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            c.set("eval.k", "ten"),
            Err(ConfigError::Value { .. })
        ));
    }
}
