//! Incremental document decoding.
//!
//! A document is translated one sentence at a time, in seg_index order.
//! Each prompt carries the last `history_size` sentences with the
//! hypotheses already produced for them, plus up to `exemplar_count` style
//! exemplars retrieved for the current sentence. By default the exemplar
//! pool is the document's own translated prefix, so every exemplar target is
//! an earlier model output.

use std::sync::OnceLock;
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, ErrorKind, TranslationBackend};
use crate::corpus::Document;
use crate::retrieval::{self, ExemplarIndex, PoolEntry, DEFAULT_ALPHA, DEFAULT_KEYWORDS, DEFAULT_TOP_K};

pub mod prompt;
mod run;

pub use prompt::{ContextEntry, ExemplarEntry, PromptError, PromptSpec, PromptTemplate};
pub use run::{run_corpus, AbortRecord, CorpusRun, RunCounts, RunManifest};

pub const DEFAULT_HISTORY: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    /// Extra attempts after the first one fails.
    pub max_retries: u32,
    pub initial_delay_ms: u64,
    pub backoff_factor: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            initial_delay_ms: 1000,
            backoff_factor: 2.0,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based).
    pub fn delay(&self, retry: u32) -> Duration {
        let ms = self.initial_delay_ms as f64 * self.backoff_factor.powi(retry.saturating_sub(1) as i32);
        Duration::from_millis(ms.min(u64::MAX as f64) as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FallbackPolicy {
    /// Emit the source sentence and mark the segment failed.
    #[default]
    CopySource,
    /// Stop translating the document.
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExemplarSource {
    /// The already-translated prefix of the current document.
    #[default]
    DocumentPrefix,
    /// A prebuilt index over an external parallel pool.
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodingConfig {
    #[serde(alias = "n")]
    pub history_size: usize,
    #[serde(alias = "k")]
    pub exemplar_count: usize,
    pub alpha: f64,
    pub keywords_per_sentence: usize,
    pub template: PromptTemplate,
    pub retry: RetryPolicy,
    pub fallback: FallbackPolicy,
    pub exemplar_source: ExemplarSource,
}

impl Default for DecodingConfig {
    fn default() -> Self {
        DecodingConfig {
            history_size: DEFAULT_HISTORY,
            exemplar_count: DEFAULT_TOP_K,
            alpha: DEFAULT_ALPHA,
            keywords_per_sentence: DEFAULT_KEYWORDS,
            template: PromptTemplate::default(),
            retry: RetryPolicy::default(),
            fallback: FallbackPolicy::default(),
            exemplar_source: ExemplarSource::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("invalid decoding config: {0}")]
    Config(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("document {doc_id}: expected seg_index {expected}, found {found}")]
    OutOfOrder {
        doc_id: String,
        expected: usize,
        found: usize,
    },
    #[error("document {doc_id} aborted at seg {seg_index}: {error}")]
    Aborted {
        doc_id: String,
        seg_index: usize,
        error: BackendError,
    },
}

impl DecodingConfig {
    pub fn validate(&self) -> Result<(), DecodeError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(DecodeError::Config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if self.keywords_per_sentence == 0 {
            return Err(DecodeError::Config("keywords_per_sentence must be >= 1".into()));
        }
        if self.retry.backoff_factor.is_nan() || self.retry.backoff_factor < 1.0 {
            return Err(DecodeError::Config("retry.backoff_factor must be >= 1".into()));
        }
        self.template.check(self.history_size, self.exemplar_count)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodingState {
    doc_id: String,
    history: Vec<ContextEntry>,
}

impl DecodingState {
    pub fn new(doc_id: &str) -> Self {
        DecodingState {
            doc_id: doc_id.to_string(),
            history: Vec::new(),
        }
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    /// seg_index of the next sentence.
    pub fn cursor(&self) -> usize {
        self.history.len()
    }

    pub fn history(&self) -> &[ContextEntry] {
        &self.history
    }

    /// Appends the outcome for the sentence at the cursor.
    pub fn push(&mut self, source: &str, hypothesis: &str) {
        self.history.push(ContextEntry {
            seg_index: self.cursor(),
            source: source.to_string(),
            translation: hypothesis.to_string(),
        });
    }
}

/// Prompt for the sentence at `state`'s cursor. `exemplars` must already
/// satisfy the no-future rule; at most `exemplar_count` of them are used.
pub fn build_prompt(
    state: &DecodingState,
    source: &str,
    exemplars: &[ExemplarEntry],
    config: &DecodingConfig,
) -> Result<PromptSpec, PromptError> {
    let cursor = state.cursor();
    let start = cursor.saturating_sub(config.history_size);
    let context = state.history[start..].to_vec();
    let exemplars = exemplars.iter().take(config.exemplar_count).cloned().collect();
    config
        .template
        .assemble(&state.doc_id, cursor, context, exemplars, source)
}

const QUOTE_PAIRS: &[(char, char)] = &[
    ('"', '"'),
    ('\'', '\''),
    ('\u{201C}', '\u{201D}'),
    ('\u{2018}', '\u{2019}'),
    ('\u{300C}', '\u{300D}'),
    ('\u{300E}', '\u{300F}'),
    ('`', '`'),
];

fn newline_runs() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\s*[\r\n]+\s*").expect("valid regex"))
}

fn wrapping_quote(text: &str) -> Option<(char, char)> {
    let first = text.chars().next()?;
    let last = text.chars().next_back()?;
    if text.chars().count() < 2 {
        return None;
    }
    QUOTE_PAIRS.iter().copied().find(|&(open, close)| {
        first == open && last == close && {
            let inner = &text[open.len_utf8()..text.len() - close.len_utf8()];
            !inner.contains(open) && !inner.contains(close)
        }
    })
}

/// Normalizes raw backend output: trims, drops a quote pair wrapping the
/// whole reply (unless the source is itself quoted), and folds line breaks
/// into single spaces.
pub fn clean_hypothesis(raw: &str, source: &str) -> String {
    let mut text = raw.trim();
    if wrapping_quote(source.trim()).is_none() {
        if let Some((open, close)) = wrapping_quote(text) {
            text = text[open.len_utf8()..text.len() - close.len_utf8()].trim();
        }
    }
    newline_runs().replace_all(text, " ").into_owned()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<BackendError>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub seg_index: usize,
    pub prompt_hash: String,
    pub attempts: Vec<Attempt>,
    pub exemplar_ids: Vec<usize>,
    pub failed: bool,
}

/// One line of the hypothesis file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentOutput {
    pub doc_id: String,
    pub seg_index: usize,
    pub source: String,
    pub hypothesis: String,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentTranslation {
    pub doc_id: String,
    pub segments: Vec<SegmentOutput>,
    pub trace: Vec<TraceEntry>,
}

impl DocumentTranslation {
    pub fn hypotheses(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().map(|s| s.hypothesis.as_str())
    }
}

/// Sentence-by-sentence decoder for one document.
pub struct DocumentDecoder<'a> {
    config: &'a DecodingConfig,
    external: Option<&'a ExemplarIndex>,
    overlay: ExemplarIndex,
    state: DecodingState,
    segments: Vec<SegmentOutput>,
    trace: Vec<TraceEntry>,
}

impl<'a> DocumentDecoder<'a> {
    pub fn new(doc_id: &str, config: &'a DecodingConfig, external: Option<&'a ExemplarIndex>) -> Self {
        DocumentDecoder {
            config,
            external,
            overlay: ExemplarIndex::new(config.keywords_per_sentence),
            state: DecodingState::new(doc_id),
            segments: Vec::new(),
            trace: Vec::new(),
        }
    }

    pub fn state(&self) -> &DecodingState {
        &self.state
    }

    fn select_exemplars(&self, source: &str) -> Vec<ExemplarEntry> {
        let k = self.config.exemplar_count;
        let pool = match self.config.exemplar_source {
            ExemplarSource::DocumentPrefix => &self.overlay,
            ExemplarSource::External => match self.external {
                Some(index) => index,
                None => return Vec::new(),
            },
        };
        let doc_id = self.state.doc_id.as_str();
        let cursor = self.state.cursor();
        retrieval::top_k(source, pool, k, self.config.alpha, |d, s| d == doc_id && s >= cursor)
            .into_iter()
            .map(|s| ExemplarEntry {
                exemplar_id: s.exemplar.exemplar_id,
                doc_id: s.exemplar.doc_id.clone(),
                seg_index: s.exemplar.seg_index,
                source: s.exemplar.source.clone(),
                target: s.exemplar.target.clone(),
            })
            .collect()
    }

    fn call_with_retry(
        &self,
        prompt: &PromptSpec,
        backend: &dyn TranslationBackend,
        attempts: &mut Vec<Attempt>,
    ) -> Result<String, BackendError> {
        let mut retry = 0u32;
        loop {
            let outcome = backend.translate(prompt).and_then(|raw| {
                let text = clean_hypothesis(&raw, &prompt.current_source);
                if text.is_empty() {
                    Err(BackendError::new(ErrorKind::EmptyOutput, "output empty after cleanup"))
                } else {
                    Ok(text)
                }
            });
            match outcome {
                Ok(text) => {
                    attempts.push(Attempt { ok: true, error: None });
                    return Ok(text);
                }
                Err(e) => {
                    attempts.push(Attempt {
                        ok: false,
                        error: Some(e.clone()),
                    });
                    if !e.retryable || retry >= self.config.retry.max_retries {
                        return Err(e);
                    }
                    retry += 1;
                    let delay = self.config.retry.delay(retry);
                    debug!(
                        "{} seg {}: {e}; retry {retry} in {delay:?}",
                        prompt.doc_id, prompt.seg_index
                    );
                    if !delay.is_zero() {
                        thread::sleep(delay);
                    }
                }
            }
        }
    }

    /// Translates the sentence at the cursor and advances.
    pub fn step(&mut self, source: &str, backend: &dyn TranslationBackend) -> Result<&SegmentOutput, DecodeError> {
        let seg_index = self.state.cursor();
        let exemplars = self.select_exemplars(source);
        let prompt = build_prompt(&self.state, source, &exemplars, self.config)?;
        let mut attempts = Vec::new();
        let result = self.call_with_retry(&prompt, backend, &mut attempts);

        let (hypothesis, failed) = match result {
            Ok(text) => (text, false),
            Err(error) => match self.config.fallback {
                FallbackPolicy::CopySource => {
                    warn!("{} seg {seg_index}: falling back to source ({error})", self.state.doc_id);
                    (source.to_string(), true)
                }
                FallbackPolicy::Abort => {
                    return Err(DecodeError::Aborted {
                        doc_id: self.state.doc_id.clone(),
                        seg_index,
                        error,
                    })
                }
            },
        };

        self.trace.push(TraceEntry {
            seg_index,
            prompt_hash: prompt.prompt_hash(),
            attempts,
            exemplar_ids: exemplars.iter().map(|e| e.exemplar_id).collect(),
            failed,
        });
        if !failed && self.config.exemplar_source == ExemplarSource::DocumentPrefix {
            self.overlay.push(PoolEntry {
                doc_id: self.state.doc_id.clone(),
                seg_index,
                source: source.to_string(),
                target: hypothesis.clone(),
            });
        }
        self.state.push(source, &hypothesis);
        self.segments.push(SegmentOutput {
            doc_id: self.state.doc_id.clone(),
            seg_index,
            source: source.to_string(),
            hypothesis,
            failed,
        });
        Ok(self.segments.last().expect("just pushed"))
    }

    pub fn finish(self) -> DocumentTranslation {
        DocumentTranslation {
            doc_id: self.state.doc_id,
            segments: self.segments,
            trace: self.trace,
        }
    }
}

/// Translates `doc` sentence by sentence. With [`FallbackPolicy::CopySource`]
/// the whole document is always produced.
pub fn translate_document(
    doc: &Document,
    backend: &dyn TranslationBackend,
    index: Option<&ExemplarIndex>,
    config: &DecodingConfig,
) -> Result<DocumentTranslation, DecodeError> {
    config.validate()?;
    let mut decoder = DocumentDecoder::new(&doc.doc_id, config, index);
    for pair in doc.pairs() {
        let expected = decoder.state().cursor();
        if pair.seg_index != expected {
            return Err(DecodeError::OutOfOrder {
                doc_id: doc.doc_id.clone(),
                expected,
                found: pair.seg_index,
            });
        }
        decoder.step(&pair.source, backend)?;
    }
    Ok(decoder.finish())
}
