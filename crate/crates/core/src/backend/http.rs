//! Chat-completions HTTP client.
//!
//! One request per sentence: the system text goes in a `system` message when
//! the server supports it (otherwise it stays at the head of the user
//! message), everything else in a single `user` message. The reply is the
//! first choice's message content.

use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BackendError, Capabilities, ErrorKind, TranslationBackend};
use crate::decoder::prompt::PromptSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpConfig {
    pub base_url: String,
    pub path: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: Option<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
    /// Client-side cap on requests per second across all threads.
    pub rate_limit_rps: Option<f64>,
    pub supports_system_role: bool,
    pub max_prompt_chars: Option<usize>,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            base_url: "http://127.0.0.1:8000".to_string(),
            path: "/v1/chat/completions".to_string(),
            model: "default".to_string(),
            api_key_env: None,
            temperature: 0.0,
            max_tokens: 512,
            timeout_secs: 60,
            rate_limit_rps: None,
            supports_system_role: true,
            max_prompt_chars: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum HttpSetupError {
    #[error("environment variable {0} (api_key_env) is not set")]
    MissingApiKey(String),
    #[error("failed to build HTTP client: {0}")]
    Client(#[from] reqwest::Error),
}

#[derive(Debug, Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Debug, Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
    max_tokens: u32,
}

/// The exact JSON body sent for `prompt`.
pub fn request_body(prompt: &PromptSpec, config: &HttpConfig) -> String {
    let messages = if config.supports_system_role {
        let mut m = Vec::with_capacity(2);
        if !prompt.system_text.is_empty() {
            m.push(ChatMessage {
                role: "system",
                content: &prompt.system_text,
            });
        }
        m.push(ChatMessage {
            role: "user",
            content: &prompt.user_text,
        });
        m
    } else {
        vec![ChatMessage {
            role: "user",
            content: &prompt.rendered,
        }]
    };
    let req = ChatRequest {
        model: &config.model,
        messages,
        temperature: config.temperature,
        max_tokens: config.max_tokens,
    };
    serde_json::to_string(&req).expect("request serialization cannot fail")
}

const OVERLONG_MARKERS: &[&str] = &[
    "context_length",
    "context length",
    "maximum context",
    "too many tokens",
    "too long",
];

/// Maps a non-success HTTP status (and its body) to an error class.
pub fn classify_status(status: u16, body: &str) -> BackendError {
    let detail = format!("HTTP {status}: {}", body.chars().take(200).collect::<String>());
    let lower = body.to_lowercase();
    let kind = match status {
        429 => ErrorKind::RateLimit,
        500..=599 => ErrorKind::Network,
        413 => ErrorKind::OverlongPrompt,
        400 | 422 if OVERLONG_MARKERS.iter().any(|m| lower.contains(m)) => ErrorKind::OverlongPrompt,
        _ => ErrorKind::Protocol,
    };
    BackendError::new(kind, detail)
}

/// Pulls `choices[0].message.content` out of a response body.
pub fn parse_completion(body: &str) -> Result<String, BackendError> {
    let value: serde_json::Value = serde_json::from_str(body)
        .map_err(|e| BackendError::new(ErrorKind::Protocol, format!("invalid JSON body: {e}")))?;
    let content = value
        .pointer("/choices/0/message/content")
        .and_then(serde_json::Value::as_str)
        .ok_or_else(|| BackendError::new(ErrorKind::Protocol, "missing choices[0].message.content"))?;
    if content.trim().is_empty() {
        return Err(BackendError::new(ErrorKind::EmptyOutput, "empty completion"));
    }
    Ok(content.to_string())
}

pub struct HttpBackend {
    config: HttpConfig,
    caps: Capabilities,
    client: Client,
    api_key: Option<String>,
    next_slot: Mutex<Option<Instant>>,
}

impl HttpBackend {
    /// Resolves credentials eagerly so a missing key fails before any request.
    pub fn new(config: HttpConfig) -> Result<Self, HttpSetupError> {
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| HttpSetupError::MissingApiKey(var.clone()))?),
            None => None,
        };
        let client = Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()?;
        let caps = Capabilities {
            name: format!("http:{}", config.model),
            max_prompt_chars: config.max_prompt_chars,
            supports_system_role: config.supports_system_role,
        };
        Ok(HttpBackend {
            config,
            caps,
            client,
            api_key,
            next_slot: Mutex::new(None),
        })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn url(&self) -> String {
        format!("{}{}", self.config.base_url.trim_end_matches('/'), self.config.path)
    }

    fn wait_for_slot(&self) {
        let Some(rps) = self.config.rate_limit_rps.filter(|r| *r > 0.0) else {
            return;
        };
        let interval = Duration::from_secs_f64(1.0 / rps);
        let wait = {
            let mut slot = self.next_slot.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let at = slot.map_or(now, |s| s.max(now));
            *slot = Some(at + interval);
            at - now
        };
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }
}

impl TranslationBackend for HttpBackend {
    fn capabilities(&self) -> &Capabilities {
        &self.caps
    }

    fn translate(&self, prompt: &PromptSpec) -> Result<String, BackendError> {
        self.caps.check_length(prompt)?;
        self.wait_for_slot();
        let mut req = self
            .client
            .post(self.url())
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(request_body(prompt, &self.config));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| BackendError::new(ErrorKind::Network, e.to_string()))?;
        let status = resp.status();
        let body = resp
            .text()
            .map_err(|e| BackendError::new(ErrorKind::Network, e.to_string()))?;
        if !status.is_success() {
            return Err(classify_status(status.as_u16(), &body));
        }
        parse_completion(&body)
    }
}
