//! Translation backends: anything that turns a [`PromptSpec`] into text.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decoder::prompt::PromptSpec;

pub mod http;
pub mod mock;

pub use http::{HttpBackend, HttpConfig};
pub use mock::{IdentityBackend, RecordingBackend, ScriptedBackend, TableBackend};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Network,
    Protocol,
    RateLimit,
    OverlongPrompt,
    EmptyOutput,
}

impl ErrorKind {
    /// Transient failures worth another attempt.
    pub fn default_retryable(self) -> bool {
        matches!(self, ErrorKind::Network | ErrorKind::RateLimit)
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Network => "network",
            ErrorKind::Protocol => "protocol",
            ErrorKind::RateLimit => "rate_limit",
            ErrorKind::OverlongPrompt => "overlong_prompt",
            ErrorKind::EmptyOutput => "empty_output",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{kind} error: {detail}")]
pub struct BackendError {
    pub kind: ErrorKind,
    pub retryable: bool,
    pub detail: String,
}

impl BackendError {
    pub fn new(kind: ErrorKind, detail: impl Into<String>) -> Self {
        BackendError {
            kind,
            retryable: kind.default_retryable(),
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub name: String,
    /// Longest accepted rendered prompt, in characters.
    pub max_prompt_chars: Option<usize>,
    pub supports_system_role: bool,
}

impl Capabilities {
    pub fn named(name: &str) -> Self {
        Capabilities {
            name: name.to_string(),
            max_prompt_chars: None,
            supports_system_role: true,
        }
    }

    pub fn check_length(&self, prompt: &PromptSpec) -> Result<(), BackendError> {
        match self.max_prompt_chars {
            Some(max) if prompt.rendered.chars().count() > max => Err(BackendError::new(
                ErrorKind::OverlongPrompt,
                format!("prompt exceeds {max} characters"),
            )),
            _ => Ok(()),
        }
    }
}

/// A translation engine. Implementations must tolerate concurrent calls.
pub trait TranslationBackend: Send + Sync {
    fn capabilities(&self) -> &Capabilities;

    /// Returns a non-empty hypothesis or a classified error.
    fn translate(&self, prompt: &PromptSpec) -> Result<String, BackendError>;
}

impl<B: TranslationBackend + ?Sized> TranslationBackend for &B {
    fn capabilities(&self) -> &Capabilities {
        (**self).capabilities()
    }

    fn translate(&self, prompt: &PromptSpec) -> Result<String, BackendError> {
        (**self).translate(prompt)
    }
}

impl<B: TranslationBackend + ?Sized> TranslationBackend for Box<B> {
    fn capabilities(&self) -> &Capabilities {
        (**self).capabilities()
    }

    fn translate(&self, prompt: &PromptSpec) -> Result<String, BackendError> {
        (**self).translate(prompt)
    }
}
