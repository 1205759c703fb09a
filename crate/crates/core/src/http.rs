//! Blocking JSON-over-HTTP with bounded exponential-backoff retry.

use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::Serialize;

/// Environment variables are read with this prefix.
pub const ENV_PREFIX: &str = "BOOLDR_";

#[derive(Debug, thiserror::Error)]
pub enum HttpError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response body: {0}")]
    Body(String),
}

impl HttpError {
    fn retryable(&self) -> bool {
        match self {
            HttpError::Transport(_) => true,
            HttpError::Status { status, .. } => *status == 429 || *status >= 500,
            HttpError::Body(_) => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
    pub timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(500),
            timeout: Duration::from_secs(60),
        }
    }
}

pub(crate) fn build_client(policy: &RetryPolicy) -> Result<Client, HttpError> {
    Client::builder()
        .timeout(policy.timeout)
        .build()
        .map_err(|e| HttpError::Transport(e.to_string()))
}

fn post_once<B: Serialize + ?Sized>(
    client: &Client,
    url: &str,
    body: &B,
    bearer: Option<&str>,
) -> Result<String, HttpError> {
    let mut req = client.post(url).json(body);
    if let Some(token) = bearer {
        req = req.bearer_auth(token);
    }
    let resp = req
        .send()
        .map_err(|e| HttpError::Transport(e.to_string()))?;
    let status = resp.status();
    let text = resp
        .text()
        .map_err(|e| HttpError::Transport(e.to_string()))?;
    if status != StatusCode::OK {
        return Err(HttpError::Status {
            status: status.as_u16(),
            body: text,
        });
    }
    Ok(text)
}

/// POSTs `body` as JSON and returns the raw 200 response text.
///
/// Transport failures, 429 and 5xx are retried up to `policy.attempts` total
/// tries, sleeping `base_delay * 2^i` between them. Other statuses fail at once.
pub(crate) fn post_json<B: Serialize + ?Sized>(
    client: &Client,
    url: &str,
    body: &B,
    bearer: Option<&str>,
    policy: &RetryPolicy,
) -> Result<String, HttpError> {
    let attempts = policy.attempts.max(1);
    let mut last = None;
    for attempt in 0..attempts {
        if attempt > 0 {
            std::thread::sleep(policy.base_delay * 2u32.pow(attempt - 1));
        }
        match post_once(client, url, body, bearer) {
            Ok(text) => return Ok(text),
            Err(e) if e.retryable() => {
                log::warn!(
                    "POST {url} failed (attempt {}/{attempts}): {e}",
                    attempt + 1
                );
                last = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

pub(crate) fn env_var(suffix: &str) -> Option<String> {
    std::env::var(format!("{ENV_PREFIX}{suffix}"))
        .ok()
        .filter(|v| !v.is_empty())
}
