use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};

use super::{EmbedError, Embedding};
use crate::http::{self, RetryPolicy};

/// Maximum texts per request.
pub const MAX_BATCH: usize = 64;

/// Environment variable (after the crate prefix) holding the bearer token.
pub const TOKEN_ENV: &str = "EMBED_TOKEN";

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteOptions {
    pub batch_size: usize,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
    /// Overrides the environment token when set.
    pub bearer_token: Option<String>,
}

impl Default for RemoteOptions {
    fn default() -> Self {
        Self {
            batch_size: MAX_BATCH,
            max_in_flight: 4,
            retry: RetryPolicy::default(),
            bearer_token: None,
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f32>>,
}

/// Client for a `POST {endpoint}/embed` service.
type BatchResult = Result<Vec<Embedding>, EmbedError>;

#[derive(Debug)]
pub struct RemoteEmbedder {
    url: String,
    dim: usize,
    options: RemoteOptions,
    token: Option<String>,
    client: Client,
}

impl RemoteEmbedder {
    pub fn new(endpoint: &str, dim: usize, options: RemoteOptions) -> Result<Self, EmbedError> {
        let client = http::build_client(&options.retry)?;
        let token = options
            .bearer_token
            .clone()
            .or_else(|| http::env_var(TOKEN_ENV));
        Ok(Self {
            url: format!("{}/embed", endpoint.trim_end_matches('/')),
            dim,
            options,
            token,
            client,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>, EmbedError> {
        let body = http::post_json(
            &self.client,
            &self.url,
            &EmbedRequest { texts },
            self.token.as_deref(),
            &self.options.retry,
        )?;
        let resp: EmbedResponse =
            serde_json::from_str(&body).map_err(|e| http::HttpError::Body(e.to_string()))?;
        if resp.vectors.len() != texts.len() {
            return Err(EmbedError::CountMismatch {
                expected: texts.len(),
                got: resp.vectors.len(),
            });
        }
        resp.vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.dim {
                    return Err(EmbedError::DimensionMismatch {
                        expected: self.dim,
                        got: v.len(),
                    });
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(EmbedError::NonFinite);
                }
                Ok(Embedding::from_vec(v))
            })
            .collect()
    }

    /// Embeds `texts` in chunks, with at most `max_in_flight` requests open
    /// at once. Output order matches input order.
    pub fn embed(&self, texts: &[&str]) -> Result<Vec<Embedding>, EmbedError> {
        let batch = self.options.batch_size.clamp(1, MAX_BATCH);
        let chunks: Vec<&[&str]> = texts.chunks(batch).collect();
        let workers = self.options.max_in_flight.max(1).min(chunks.len());
        if workers <= 1 {
            let mut out = Vec::with_capacity(texts.len());
            for chunk in chunks {
                out.extend(self.embed_batch(chunk)?);
            }
            return Ok(out);
        }

        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<Option<BatchResult>>> =
            Mutex::new((0..chunks.len()).map(|_| None).collect());
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= chunks.len() {
                        break;
                    }
                    let r = self.embed_batch(chunks[i]);
                    let failed = r.is_err();
                    results.lock().unwrap()[i] = Some(r);
                    if failed {
                        // stop handing out new chunks
                        next.store(chunks.len(), Ordering::Relaxed);
                    }
                });
            }
        });

        let mut out = Vec::with_capacity(texts.len());
        for r in results.into_inner().unwrap() {
            match r {
                Some(Ok(v)) => out.extend(v),
                Some(Err(e)) => return Err(e),
                None => {}
            }
        }
        Ok(out)
    }
}
