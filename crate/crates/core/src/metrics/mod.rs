//! Sentence- and document-level BLEU.
//!
//! Scores follow the reference scorer's defaults: 13a tokenization, BLEU-4,
//! exponential smoothing of zero-match orders, a single reference per
//! segment, and statistics summed over the corpus before the geometric mean.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::corpus::Corpus;

mod tokenizer;

pub use tokenizer::{tokenize, Tokenization};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothing {
    None,
    /// A zero-match order n gets precision 1 / (2^k · total_n), k counting
    /// the zero orders seen so far.
    #[default]
    #[serde(alias = "exp")]
    ExpFloor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BleuConfig {
    pub max_order: usize,
    pub smoothing: Smoothing,
    pub tokenize: Tokenization,
    pub lowercase: bool,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig {
            max_order: 4,
            smoothing: Smoothing::ExpFloor,
            tokenize: Tokenization::Mteval13a,
            lowercase: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segmentation {
    Sentence,
    Document,
}

fn two_decimals<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round2(*v))
}

/// Rounds to the two decimals scores are reported with.
pub fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BleuReport {
    #[serde(serialize_with = "two_decimals")]
    pub score: f64,
    /// Per-order precisions as used in the score (after smoothing), in [0, 1].
    pub precisions: Vec<f64>,
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    pub brevity_penalty: f64,
    pub hyp_length: u64,
    pub ref_length: u64,
    pub segmentation: Segmentation,
    pub config: BleuConfig,
}

impl fmt::Display for BleuReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let precs: Vec<String> = self.precisions.iter().map(|p| format!("{:.1}", p * 100.0)).collect();
        write!(
            f,
            "BLEU = {:.2} {} (BP = {:.3} hyp_len = {} ref_len = {})",
            self.score,
            precs.join("/"),
            self.brevity_penalty,
            self.hyp_length,
            self.ref_length
        )
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("{hypotheses} hypotheses but {references} references")]
    LengthMismatch { hypotheses: usize, references: usize },
    #[error("no segments to score")]
    NoSegments,
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
}

/// Sufficient statistics for BLEU; integer counts, so summing is exact and
/// order-independent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    pub hyp_len: u64,
    pub ref_len: u64,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

impl BleuStats {
    pub fn new(max_order: usize) -> Self {
        BleuStats {
            matches: vec![0; max_order],
            totals: vec![0; max_order],
            hyp_len: 0,
            ref_len: 0,
        }
    }

    /// Adds one tokenized segment pair with clipped n-gram matches.
    pub fn add(&mut self, hyp: &[String], reference: &[String]) {
        self.hyp_len += hyp.len() as u64;
        self.ref_len += reference.len() as u64;
        for n in 1..=self.matches.len() {
            let h = ngram_counts(hyp, n);
            let r = ngram_counts(reference, n);
            self.totals[n - 1] += hyp.len().saturating_sub(n - 1) as u64;
            self.matches[n - 1] += h
                .iter()
                .map(|(g, c)| (*c).min(r.get(g).copied().unwrap_or(0)))
                .sum::<u64>();
        }
    }

    pub fn brevity_penalty(&self) -> f64 {
        if self.hyp_len >= self.ref_len {
            1.0
        } else if self.hyp_len == 0 {
            0.0
        } else {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        }
    }

    /// Smoothed precisions and the score on a 0..100 scale.
    #[allow(clippy::needless_range_loop)]
    pub fn score(&self, smoothing: Smoothing) -> (f64, Vec<f64>) {
        let order = self.matches.len();
        let mut precisions = vec![0.0; order];
        if self.matches.iter().all(|m| *m == 0) {
            return (0.0, precisions);
        }
        let mut halvings = 1.0;
        for n in 0..order {
            if self.totals[n] == 0 {
                // hypotheses too short for this order: nothing to smooth
                break;
            }
            precisions[n] = if self.matches[n] > 0 {
                self.matches[n] as f64 / self.totals[n] as f64
            } else {
                match smoothing {
                    Smoothing::ExpFloor => {
                        halvings *= 2.0;
                        1.0 / (halvings * self.totals[n] as f64)
                    }
                    Smoothing::None => 0.0,
                }
            };
        }
        if precisions.contains(&0.0) {
            return (0.0, precisions);
        }
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / order as f64;
        (100.0 * self.brevity_penalty() * log_mean.exp(), precisions)
    }

    pub fn report(&self, config: &BleuConfig, segmentation: Segmentation) -> BleuReport {
        let (score, precisions) = self.score(config.smoothing);
        BleuReport {
            score,
            precisions,
            matches: self.matches.clone(),
            totals: self.totals.clone(),
            brevity_penalty: self.brevity_penalty(),
            hyp_length: self.hyp_len,
            ref_length: self.ref_len,
            segmentation,
            config: config.clone(),
        }
    }
}

fn prepare(text: &str, config: &BleuConfig) -> Vec<String> {
    if config.lowercase {
        tokenize(&text.to_lowercase(), config.tokenize)
    } else {
        tokenize(text, config.tokenize)
    }
}

/// Corpus-level statistics of aligned hypothesis/reference segments.
pub fn corpus_stats<H: AsRef<str>, R: AsRef<str>>(
    hypotheses: &[H],
    references: &[R],
    config: &BleuConfig,
) -> Result<BleuStats, MetricsError> {
    if hypotheses.len() != references.len() {
        return Err(MetricsError::LengthMismatch {
            hypotheses: hypotheses.len(),
            references: references.len(),
        });
    }
    if hypotheses.is_empty() {
        return Err(MetricsError::NoSegments);
    }
    let mut stats = BleuStats::new(config.max_order.max(1));
    for (h, r) in hypotheses.iter().zip(references) {
        stats.add(&prepare(h.as_ref(), config), &prepare(r.as_ref(), config));
    }
    Ok(stats)
}

/// BLEU over aligned segments.
pub fn corpus_bleu<H: AsRef<str>, R: AsRef<str>>(
    hypotheses: &[H],
    references: &[R],
    config: &BleuConfig,
) -> Result<BleuReport, MetricsError> {
    Ok(corpus_stats(hypotheses, references, config)?.report(config, Segmentation::Sentence))
}

/// Hypothesis-file line; extra fields are ignored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisRecord {
    pub doc_id: String,
    pub seg_index: usize,
    pub hypothesis: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedDocument {
    pub doc_id: String,
    pub hypotheses: Vec<String>,
    pub references: Vec<String>,
}

/// Every `(doc_id, seg_index)` that failed to line up.
#[derive(Debug, Clone, Default, PartialEq, Eq, Error)]
pub struct AlignmentError {
    pub missing_hypotheses: Vec<(String, usize)>,
    pub unmatched_hypotheses: Vec<(String, usize)>,
    pub duplicate_hypotheses: Vec<(String, usize)>,
    pub missing_references: Vec<(String, usize)>,
}

impl fmt::Display for AlignmentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "hypotheses and references do not align")?;
        let groups = [
            ("no hypothesis for", &self.missing_hypotheses),
            ("no reference segment for", &self.unmatched_hypotheses),
            ("duplicate hypothesis for", &self.duplicate_hypotheses),
            ("reference has no target text for", &self.missing_references),
        ];
        for (what, items) in groups {
            for (doc, seg) in items {
                writeln!(f, "  {what} ({doc}, {seg})")?;
            }
        }
        Ok(())
    }
}

impl AlignmentError {
    fn is_empty(&self) -> bool {
        self.missing_hypotheses.is_empty()
            && self.unmatched_hypotheses.is_empty()
            && self.duplicate_hypotheses.is_empty()
            && self.missing_references.is_empty()
    }
}

/// Pairs hypotheses with reference targets by `(doc_id, seg_index)`.
/// Documents come out in reference-corpus order, segments by seg_index.
pub fn align(hypotheses: &[HypothesisRecord], references: &Corpus) -> Result<Vec<AlignedDocument>, AlignmentError> {
    let mut hyps: BTreeMap<(&str, usize), &str> = BTreeMap::new();
    let mut err = AlignmentError::default();
    for h in hypotheses {
        if hyps
            .insert((h.doc_id.as_str(), h.seg_index), h.hypothesis.as_str())
            .is_some()
        {
            err.duplicate_hypotheses.push((h.doc_id.clone(), h.seg_index));
        }
    }
    let mut out = Vec::with_capacity(references.documents.len());
    for doc in &references.documents {
        let mut aligned = AlignedDocument {
            doc_id: doc.doc_id.clone(),
            hypotheses: Vec::with_capacity(doc.len()),
            references: Vec::with_capacity(doc.len()),
        };
        for p in doc.pairs() {
            let key = (doc.doc_id.as_str(), p.seg_index);
            let hyp = hyps.remove(&key);
            match (&p.target, hyp) {
                (None, _) => err.missing_references.push((doc.doc_id.clone(), p.seg_index)),
                (Some(_), None) => err.missing_hypotheses.push((doc.doc_id.clone(), p.seg_index)),
                (Some(t), Some(h)) => {
                    aligned.hypotheses.push(h.to_string());
                    aligned.references.push(t.clone());
                }
            }
        }
        out.push(aligned);
    }
    err.unmatched_hypotheses = hyps.keys().map(|(d, s)| (d.to_string(), *s)).collect();
    if err.is_empty() {
        Ok(out)
    } else {
        Err(err)
    }
}

/// s-BLEU: every sentence is a segment.
pub fn s_bleu(docs: &[AlignedDocument], config: &BleuConfig) -> Result<BleuReport, MetricsError> {
    let hyps: Vec<&str> = docs.iter().flat_map(|d| d.hypotheses.iter().map(String::as_str)).collect();
    let refs: Vec<&str> = docs.iter().flat_map(|d| d.references.iter().map(String::as_str)).collect();
    Ok(corpus_stats(&hyps, &refs, config)?.report(config, Segmentation::Sentence))
}

/// d-BLEU: each document's sentences joined by single spaces form one segment.
pub fn d_bleu(docs: &[AlignedDocument], config: &BleuConfig) -> Result<BleuReport, MetricsError> {
    let hyps: Vec<String> = docs.iter().map(|d| d.hypotheses.join(" ")).collect();
    let refs: Vec<String> = docs.iter().map(|d| d.references.join(" ")).collect();
    Ok(corpus_stats(&hyps, &refs, config)?.report(config, Segmentation::Document))
}
