//! Chat-completion client with a record/replay cassette.
//!
//! Wire format: `POST {endpoint}` with
//! `{"model": str, "messages": [{"role", "content"}]}`, answered by
//! `{"choices": [{"message": {"content": str}}]}`.
//!
//! The cassette is JSON Lines of `{"request_hash", "response"}`, keyed by the
//! SHA-256 of the serialized request body.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::http::{self, HttpError, RetryPolicy};

/// Environment variable (after the crate prefix) holding the API key.
pub const API_KEY_ENV: &str = "CHAT_API_KEY";

#[derive(Debug, thiserror::Error)]
pub enum ChatError {
    #[error("chat configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Http(#[from] HttpError),
    #[error("chat response has no message content")]
    EmptyResponse,
    #[error("no cassette entry for request {0}")]
    CassetteMiss(String),
    #[error("cassette {path}: {message}")]
    Cassette { path: PathBuf, message: String },
}

/// Anything that can answer a (system, user) prompt pair.
pub trait ChatModel: Send + Sync {
    fn complete(&self, system: &str, user: &str) -> Result<String, ChatError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CassetteMode {
    /// Network only.
    #[default]
    Live,
    /// Serve from the cassette when possible, otherwise call and append.
    Record,
    /// Cassette only; never touches the network.
    Replay,
}

impl std::str::FromStr for CassetteMode {
    type Err = ChatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(CassetteMode::Live),
            "record" => Ok(CassetteMode::Record),
            "replay" => Ok(CassetteMode::Replay),
            other => Err(ChatError::Config(format!(
                "unknown cassette mode {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatConfig {
    pub endpoint: Option<String>,
    pub model: String,
    pub api_key: Option<String>,
    pub cassette: Option<PathBuf>,
    pub mode: CassetteMode,
    pub retry: RetryPolicy,
}

impl ChatConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: Some(endpoint.into()),
            model: model.into(),
            api_key: None,
            cassette: None,
            mode: CassetteMode::Live,
            retry: RetryPolicy::default(),
        }
    }

    pub fn replay(cassette: impl Into<PathBuf>, model: impl Into<String>) -> Self {
        Self {
            endpoint: None,
            model: model.into(),
            api_key: None,
            cassette: Some(cassette.into()),
            mode: CassetteMode::Replay,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Message<'a> {
    pub role: &'a str,
    pub content: &'a str,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChatRequest<'a> {
    pub model: &'a str,
    pub messages: Vec<Message<'a>>,
}

impl ChatRequest<'_> {
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("request serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CassetteEntry {
    request_hash: String,
    response: String,
}

#[derive(Debug)]
struct Cassette {
    path: PathBuf,
    entries: HashMap<String, String>,
    writer: Option<Mutex<File>>,
}

impl Cassette {
    fn open(path: &Path, writable: bool) -> Result<Self, ChatError> {
        let err = |message: String| ChatError::Cassette {
            path: path.to_path_buf(),
            message,
        };
        let mut entries = HashMap::new();
        if path.exists() {
            let f = File::open(path).map_err(|e| err(e.to_string()))?;
            for (i, line) in BufReader::new(f).lines().enumerate() {
                let line = line.map_err(|e| err(e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: CassetteEntry =
                    serde_json::from_str(&line).map_err(|e| err(format!("line {}: {e}", i + 1)))?;
                entries.insert(entry.request_hash, entry.response);
            }
        } else if !writable {
            return Err(err("file not found".into()));
        }
        let writer = if writable {
            let f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| err(e.to_string()))?;
            Some(Mutex::new(f))
        } else {
            None
        };
        Ok(Self {
            path: path.to_path_buf(),
            entries,
            writer,
        })
    }

    fn append(&self, hash: &str, response: &str) -> Result<(), ChatError> {
        let Some(w) = &self.writer else {
            return Ok(());
        };
        let line = serde_json::to_string(&CassetteEntry {
            request_hash: hash.to_string(),
            response: response.to_string(),
        })
        .expect("entry serializes");
        let mut f = w.lock().unwrap();
        writeln!(f, "{line}").map_err(|e| ChatError::Cassette {
            path: self.path.clone(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug)]
pub struct ChatClient {
    config: ChatConfig,
    api_key: Option<String>,
    http: Option<Client>,
    cassette: Option<Cassette>,
    recorded: Mutex<HashMap<String, String>>,
}

impl ChatClient {
    /// Validates configuration up front: live and record modes need an
    /// endpoint and an API key (from the config or the environment), replay
    /// and record modes need a cassette path.
    pub fn new(config: ChatConfig) -> Result<Self, ChatError> {
        let needs_network = config.mode != CassetteMode::Replay;
        let api_key = config
            .api_key
            .clone()
            .or_else(|| http::env_var(API_KEY_ENV));
        if needs_network {
            if config.endpoint.as_deref().is_none_or(str::is_empty) {
                return Err(ChatError::Config("chat endpoint is not set".into()));
            }
            if api_key.is_none() {
                return Err(ChatError::Config(format!(
                    "missing API key: set {}{API_KEY_ENV}",
                    http::ENV_PREFIX
                )));
            }
        }
        let cassette = match (config.mode, &config.cassette) {
            (CassetteMode::Live, _) => None,
            (mode, Some(path)) => Some(Cassette::open(path, mode == CassetteMode::Record)?),
            (_, None) => {
                return Err(ChatError::Config(
                    "record/replay mode requires a cassette path".into(),
                ))
            }
        };
        let http = if needs_network {
            Some(http::build_client(&config.retry)?)
        } else {
            None
        };
        Ok(Self {
            config,
            api_key,
            http,
            cassette,
            recorded: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &ChatConfig {
        &self.config
    }

    fn call(&self, request: &ChatRequest<'_>) -> Result<String, ChatError> {
        let client = self.http.as_ref().expect("network mode has a client");
        let url = self.config.endpoint.as_deref().expect("validated");
        let body = http::post_json(
            client,
            url,
            request,
            self.api_key.as_deref(),
            &self.config.retry,
        )?;
        let resp: ChatResponse =
            serde_json::from_str(&body).map_err(|e| HttpError::Body(e.to_string()))?;
        resp.choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or(ChatError::EmptyResponse)
    }
}

impl ChatModel for ChatClient {
    fn complete(&self, system: &str, user: &str) -> Result<String, ChatError> {
        let request = ChatRequest {
            model: &self.config.model,
            messages: vec![
                Message {
                    role: "system",
                    content: system,
                },
                Message {
                    role: "user",
                    content: user,
                },
            ],
        };
        let hash = request.hash();
        if let Some(c) = &self.cassette {
            if let Some(r) = c.entries.get(&hash) {
                return Ok(r.clone());
            }
            if let Some(r) = self.recorded.lock().unwrap().get(&hash) {
                return Ok(r.clone());
            }
            if self.config.mode == CassetteMode::Replay {
                return Err(ChatError::CassetteMiss(hash));
            }
        }
        let response = self.call(&request)?;
        if let Some(c) = &self.cassette {
            c.append(&hash, &response)?;
            self.recorded.lock().unwrap().insert(hash, response.clone());
        }
        Ok(response)
    }
}
