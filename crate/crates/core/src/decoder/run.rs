use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::{translate_document, DecodeError, DecodingConfig, DocumentTranslation};
use crate::backend::TranslationBackend;
use crate::corpus::Corpus;
use crate::retrieval::ExemplarIndex;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCounts {
    pub documents: usize,
    pub completed: usize,
    pub aborted: usize,
    pub sentences: usize,
    pub failed_sentences: usize,
    pub backend_attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbortRecord {
    pub doc_id: String,
    pub seg_index: Option<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: DecodingConfig,
    pub backend: String,
    pub parallelism: usize,
    pub started_at: String,
    pub finished_at: String,
    pub counts: RunCounts,
    pub aborted: Vec<AbortRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRun {
    /// Completed documents, ordered by doc_id.
    pub translations: Vec<DocumentTranslation>,
    pub manifest: RunManifest,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Translates every document, up to `parallelism` at a time. Each document
/// is still decoded strictly in order; aborted documents are listed in the
/// manifest while the rest complete.
pub fn run_corpus(
    corpus: &Corpus,
    backend: &dyn TranslationBackend,
    index: Option<&ExemplarIndex>,
    config: &DecodingConfig,
    parallelism: usize,
) -> Result<CorpusRun, DecodeError> {
    config.validate()?;
    let parallelism = parallelism.max(1);
    let started_at = now();

    let docs = &corpus.documents;
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    thread::scope(|scope| {
        for _ in 0..parallelism.min(docs.len()) {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(doc) = docs.get(i) else { break };
                let result = translate_document(doc, backend, index, config);
                if tx.send((i, result)).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut results: Vec<(usize, Result<DocumentTranslation, DecodeError>)> = rx.into_iter().collect();
    results.sort_by_key(|(i, _)| *i);

    let mut counts = RunCounts {
        documents: docs.len(),
        ..RunCounts::default()
    };
    let mut translations = Vec::new();
    let mut aborted = Vec::new();
    for (i, result) in results {
        match result {
            Ok(t) => {
                counts.completed += 1;
                counts.sentences += t.segments.len();
                counts.failed_sentences += t.segments.iter().filter(|s| s.failed).count();
                counts.backend_attempts += t.trace.iter().map(|e| e.attempts.len()).sum::<usize>();
                translations.push(t);
            }
            Err(e) => {
                counts.aborted += 1;
                let seg_index = match &e {
                    DecodeError::Aborted { seg_index, .. } => Some(*seg_index),
                    _ => None,
                };
                aborted.push(AbortRecord {
                    doc_id: docs[i].doc_id.clone(),
                    seg_index,
                    reason: e.to_string(),
                });
            }
        }
    }
    translations.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    aborted.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));

    Ok(CorpusRun {
        translations,
        manifest: RunManifest {
            config: config.clone(),
            backend: backend.capabilities().name.clone(),
            parallelism,
            started_at,
            finished_at: now(),
            counts,
            aborted,
        },
    })
}
