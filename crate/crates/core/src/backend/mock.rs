//! Deterministic in-process backends for tests, dry runs and golden files.

use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{BackendError, Capabilities, ErrorKind, TranslationBackend};
use crate::decoder::prompt::PromptSpec;

/// Echoes the current source sentence.
#[derive(Debug, Clone)]
pub struct IdentityBackend {
    caps: Capabilities,
}

impl Default for IdentityBackend {
    fn default() -> Self {
        IdentityBackend {
            caps: Capabilities::named("identity"),
        }
    }
}

impl TranslationBackend for IdentityBackend {
    fn capabilities(&self) -> &Capabilities {
        &self.caps
    }

    fn translate(&self, prompt: &PromptSpec) -> Result<String, BackendError> {
        self.caps.check_length(prompt)?;
        Ok(prompt.current_source.clone())
    }
}

/// Looks the source sentence up in a fixed table.
#[derive(Debug, Clone)]
pub struct TableBackend {
    caps: Capabilities,
    table: HashMap<String, String>,
}

impl TableBackend {
    pub fn new(table: impl IntoIterator<Item = (String, String)>) -> Self {
        TableBackend {
            caps: Capabilities::named("table"),
            table: table.into_iter().collect(),
        }
    }
}

impl TranslationBackend for TableBackend {
    fn capabilities(&self) -> &Capabilities {
        &self.caps
    }

    fn translate(&self, prompt: &PromptSpec) -> Result<String, BackendError> {
        self.caps.check_length(prompt)?;
        self.table
            .get(&prompt.current_source)
            .cloned()
            .ok_or_else(|| BackendError::new(ErrorKind::EmptyOutput, "source not in table"))
    }
}

/// One scripted reply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Reply {
    Text(String),
    Error { error: ErrorKind },
}

impl Reply {
    fn to_result(&self) -> Result<String, BackendError> {
        match self {
            Reply::Text(t) => Ok(t.clone()),
            Reply::Error { error } => Err(BackendError::new(*error, "scripted failure")),
        }
    }
}

/// Script file line: the replies for one sentence, consumed in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub doc_id: String,
    pub seg_index: usize,
    pub replies: Vec<Reply>,
}

/// Plays back replies keyed by `(doc_id, seg_index)`. Once a sentence's
/// script is down to its last reply, that reply repeats. Keying by position
/// keeps output independent of how documents are scheduled.
#[derive(Debug)]
pub struct ScriptedBackend {
    caps: Capabilities,
    scripts: Mutex<HashMap<(String, usize), VecDeque<Reply>>>,
}

impl ScriptedBackend {
    pub fn new(entries: impl IntoIterator<Item = ScriptEntry>) -> Self {
        let mut scripts: HashMap<(String, usize), VecDeque<Reply>> = HashMap::new();
        for e in entries {
            scripts
                .entry((e.doc_id, e.seg_index))
                .or_default()
                .extend(e.replies);
        }
        ScriptedBackend {
            caps: Capabilities::named("scripted"),
            scripts: Mutex::new(scripts),
        }
    }

    /// A script for one document: the i-th reply list answers sentence i.
    pub fn for_document(doc_id: &str, replies: impl IntoIterator<Item = Vec<Reply>>) -> Self {
        Self::new(replies.into_iter().enumerate().map(|(i, r)| ScriptEntry {
            doc_id: doc_id.to_string(),
            seg_index: i,
            replies: r,
        }))
    }
}

impl TranslationBackend for ScriptedBackend {
    fn capabilities(&self) -> &Capabilities {
        &self.caps
    }

    fn translate(&self, prompt: &PromptSpec) -> Result<String, BackendError> {
        self.caps.check_length(prompt)?;
        let mut scripts = self.scripts.lock().unwrap_or_else(|e| e.into_inner());
        let Some(queue) = scripts.get_mut(&(prompt.doc_id.clone(), prompt.seg_index)) else {
            return Err(BackendError::new(
                ErrorKind::Protocol,
                format!("no script for ({}, {})", prompt.doc_id, prompt.seg_index),
            ));
        };
        let reply = if queue.len() > 1 {
            queue.pop_front()
        } else {
            queue.front().cloned()
        };
        match reply {
            Some(r) => r.to_result(),
            None => Err(BackendError::new(ErrorKind::EmptyOutput, "empty script")),
        }
    }
}

/// Wraps a backend and keeps every prompt it is asked to translate.
#[derive(Debug)]
pub struct RecordingBackend<B> {
    inner: B,
    prompts: Mutex<Vec<PromptSpec>>,
}

impl<B> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        RecordingBackend {
            inner,
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn prompts(&self) -> Vec<PromptSpec> {
        self.prompts.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn calls(&self) -> usize {
        self.prompts.lock().unwrap_or_else(|e| e.into_inner()).len()
    }
}

impl<B: TranslationBackend> TranslationBackend for RecordingBackend<B> {
    fn capabilities(&self) -> &Capabilities {
        self.inner.capabilities()
    }

    fn translate(&self, prompt: &PromptSpec) -> Result<String, BackendError> {
        self.prompts
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(prompt.clone());
        self.inner.translate(prompt)
    }
}
