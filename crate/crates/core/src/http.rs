//! Blocking JSON-over-HTTP helper shared by the chat and embedding adapters.

use std::time::Duration;

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{url}: {message} (status {status:?}, {attempts} attempt(s))")]
pub struct TransportError {
    pub url: String,
    pub status: Option<u16>,
    pub message: String,
    pub attempts: u32,
    pub timed_out: bool,
}

#[derive(Debug, Clone)]
pub struct JsonClient {
    client: reqwest::blocking::Client,
    api_key: Option<String>,
    retries: u32,
}

impl JsonClient {
    pub fn new(api_key: Option<String>, timeout: Duration, retries: u32) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder().timeout(timeout).build().map_err(|e| TransportError {
            url: String::new(),
            status: None,
            message: format!("cannot build HTTP client: {e}"),
            attempts: 0,
            timed_out: false,
        })?;
        Ok(Self { client, api_key, retries })
    }

    /// POSTs `body`, retrying up to `retries` extra times on transport
    /// failures and 5xx/429 responses.
    pub fn post(&self, url: &str, body: &Value) -> Result<Value, TransportError> {
        let mut attempts = 0;
        loop {
            attempts += 1;
            let err = match self.post_once(url, body) {
                Ok(v) => return Ok(v),
                Err(mut e) => {
                    e.attempts = attempts;
                    e
                }
            };
            let retryable = err.status.is_none_or(|s| s >= 500 || s == 429);
            if !retryable || attempts > self.retries {
                return Err(err);
            }
            log::warn!("retrying {url} after: {}", err.message);
        }
    }

    fn post_once(&self, url: &str, body: &Value) -> Result<Value, TransportError> {
        let fail = |status: Option<u16>, message: String, timed_out: bool| TransportError {
            url: url.to_string(),
            status,
            message,
            attempts: 1,
            timed_out,
        };
        let mut req = self.client.post(url).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| fail(None, e.to_string(), e.is_timeout()))?;
        let status = resp.status();
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(fail(Some(status.as_u16()), format!("HTTP {status}: {}", truncate(&text, 200)), false));
        }
        resp.json::<Value>().map_err(|e| fail(Some(status.as_u16()), format!("invalid JSON body: {e}"), e.is_timeout()))
    }
}

fn truncate(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// `base` joined with `path`, tolerating a trailing slash on `base`.
pub fn join_url(base: &str, path: &str) -> String {
    format!("{}/{}", base.trim_end_matches('/'), path.trim_start_matches('/'))
}
