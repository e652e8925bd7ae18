//! Style-exemplar retrieval.
//!
//! Exemplars are scored against a query sentence by blending two lexical
//! signals: cosine similarity of tf-idf term vectors and Jaccard overlap of
//! the top-weighted keywords. Pools are small (a document prefix or a modest
//! external file), so search is exact.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use crate::text::terms;

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_KEYWORDS: usize = 5;
pub const DEFAULT_TOP_K: usize = 2;

/// Sparse term-weight vector; keys are kept sorted so every sum over it runs
/// in the same order.
pub type TermWeights = BTreeMap<String, f64>;

/// A translated sentence offered to the index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub doc_id: String,
    pub seg_index: usize,
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exemplar {
    pub exemplar_id: usize,
    pub doc_id: String,
    pub seg_index: usize,
    pub source: String,
    pub target: String,
    /// Top-weighted source terms, best first.
    pub keywords: Vec<String>,
    pub term_weights: TermWeights,
    term_counts: Vec<(String, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityScore {
    pub combined: f64,
    pub lexical: f64,
    pub keyword: f64,
}

impl SimilarityScore {
    pub const ZERO: SimilarityScore = SimilarityScore {
        combined: 0.0,
        lexical: 0.0,
        keyword: 0.0,
    };
}

/// Immutable once built, except through [`ExemplarIndex::push`], which the
/// decoder only calls on its own per-document overlay.
#[derive(Debug, Clone, PartialEq)]
pub struct ExemplarIndex {
    exemplars: Vec<Exemplar>,
    doc_freq: BTreeMap<String, usize>,
    keywords_per_sentence: usize,
}

impl Default for ExemplarIndex {
    fn default() -> Self {
        ExemplarIndex::new(DEFAULT_KEYWORDS)
    }
}

/// Term counts in first-occurrence order.
fn count_terms(text: &str) -> Vec<(String, usize)> {
    let mut counts: Vec<(String, usize)> = Vec::new();
    for term in terms(text) {
        match counts.iter_mut().find(|(t, _)| *t == term) {
            Some((_, n)) => *n += 1,
            None => counts.push((term, 1)),
        }
    }
    counts
}

impl ExemplarIndex {
    /// An empty index extracting up to `keywords_per_sentence` keywords.
    pub fn new(keywords_per_sentence: usize) -> Self {
        ExemplarIndex {
            exemplars: Vec::new(),
            doc_freq: BTreeMap::new(),
            keywords_per_sentence: keywords_per_sentence.max(1),
        }
    }

    /// Builds an index over `pool`. Weights and keywords are computed
    /// against the finished document-frequency table.
    pub fn build(pool: impl IntoIterator<Item = PoolEntry>, keywords_per_sentence: usize) -> Self {
        let mut index = ExemplarIndex::new(keywords_per_sentence);
        for entry in pool {
            index.insert(entry);
        }
        index.reweight();
        index
    }

    /// Appends one exemplar and refreshes every weight and keyword set.
    pub fn push(&mut self, entry: PoolEntry) {
        self.insert(entry);
        self.reweight();
    }

    fn insert(&mut self, entry: PoolEntry) {
        let term_counts = count_terms(&entry.source);
        for (term, _) in &term_counts {
            *self.doc_freq.entry(term.clone()).or_insert(0) += 1;
        }
        self.exemplars.push(Exemplar {
            exemplar_id: self.exemplars.len(),
            doc_id: entry.doc_id,
            seg_index: entry.seg_index,
            source: entry.source,
            target: entry.target,
            keywords: Vec::new(),
            term_weights: TermWeights::new(),
            term_counts,
        });
    }

    fn reweight(&mut self) {
        let refreshed: Vec<(TermWeights, Vec<String>)> = self
            .exemplars
            .iter()
            .map(|ex| (self.weigh(&ex.term_counts), self.rank_keywords(&ex.term_counts)))
            .collect();
        for (ex, (weights, keywords)) in self.exemplars.iter_mut().zip(refreshed) {
            ex.term_weights = weights;
            ex.keywords = keywords;
        }
    }

    pub fn exemplars(&self) -> &[Exemplar] {
        &self.exemplars
    }

    pub fn total_docs(&self) -> usize {
        self.exemplars.len()
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    pub fn doc_freq_table(&self) -> &BTreeMap<String, usize> {
        &self.doc_freq
    }

    pub fn keywords_per_sentence(&self) -> usize {
        self.keywords_per_sentence
    }

    pub fn is_empty(&self) -> bool {
        self.exemplars.is_empty()
    }

    /// Smoothed inverse document frequency: ln((1 + N) / (1 + df)) + 1.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.total_docs() as f64;
        let df = self.doc_freq(term) as f64;
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    }

    fn weigh(&self, counts: &[(String, usize)]) -> TermWeights {
        counts
            .iter()
            .map(|(t, tf)| (t.clone(), *tf as f64 * self.idf(t)))
            .collect()
    }

    fn rank_keywords(&self, counts: &[(String, usize)]) -> Vec<String> {
        self.rank_top(counts, self.keywords_per_sentence)
    }

    fn rank_top(&self, counts: &[(String, usize)], m: usize) -> Vec<String> {
        let mut ranked: Vec<(&str, f64)> = counts
            .iter()
            .map(|(t, tf)| (t.as_str(), *tf as f64 * self.idf(t)))
            .collect();
        // stable: equal weights keep first-occurrence order
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        ranked
            .into_iter()
            .take(m)
            .map(|(t, _)| t.to_string())
            .collect()
    }

    /// tf-idf weights of an arbitrary sentence under this index.
    pub fn term_weights(&self, sentence: &str) -> TermWeights {
        self.weigh(&count_terms(sentence))
    }

    /// Prepares a query sentence for repeated scoring.
    pub fn query(&self, sentence: &str) -> Query {
        let counts = count_terms(sentence);
        let weights = self.weigh(&counts);
        let keywords = self.rank_keywords(&counts).into_iter().collect();
        Query { weights, keywords }
    }
}

/// Up to `m` terms of `sentence` with the highest tf-idf weight under
/// `index`, ties broken by first occurrence.
pub fn extract_keywords(sentence: &str, index: &ExemplarIndex, m: usize) -> Vec<String> {
    index.rank_top(&count_terms(sentence), m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub weights: TermWeights,
    pub keywords: BTreeSet<String>,
}

fn squared_norm(v: &TermWeights) -> f64 {
    v.values().map(|w| w * w).sum()
}

/// Cosine of two sparse vectors; 0 when either is all-zero.
pub fn cosine(a: &TermWeights, b: &TermWeights) -> f64 {
    let denom = (squared_norm(a) * squared_norm(b)).sqrt();
    if denom == 0.0 {
        return 0.0;
    }
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: f64 = short
        .iter()
        .filter_map(|(t, w)| long.get(t).map(|v| w * v))
        .sum();
    (dot / denom).clamp(0.0, 1.0)
}

/// Jaccard overlap; 0 when both sets are empty.
pub fn jaccard<'a>(a: impl IntoIterator<Item = &'a str>, b: impl IntoIterator<Item = &'a str>) -> f64 {
    let a: HashSet<&str> = a.into_iter().collect();
    let b: HashSet<&str> = b.into_iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

impl Query {
    pub fn score(&self, ex: &Exemplar, alpha: f64) -> SimilarityScore {
        let lexical = cosine(&self.weights, &ex.term_weights);
        let keyword = jaccard(
            self.keywords.iter().map(String::as_str),
            ex.keywords.iter().map(String::as_str),
        );
        SimilarityScore {
            combined: alpha * lexical + (1.0 - alpha) * keyword,
            lexical,
            keyword,
        }
    }
}

/// Scores `query` against one exemplar of `index`.
pub fn similarity(query: &str, ex: &Exemplar, index: &ExemplarIndex, alpha: f64) -> SimilarityScore {
    index.query(query).score(ex, alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredExemplar<'a> {
    pub exemplar: &'a Exemplar,
    pub score: SimilarityScore,
}

// Ordered so that Greater means "ranks first".
struct Ranked<'a>(ScoredExemplar<'a>);

impl Ranked<'_> {
    fn cmp_rank(&self, other: &Self) -> Ordering {
        let (a, b) = (&self.0, &other.0);
        a.score
            .combined
            .total_cmp(&b.score.combined)
            .then_with(|| b.exemplar.doc_id.cmp(&a.exemplar.doc_id))
            .then_with(|| b.exemplar.seg_index.cmp(&a.exemplar.seg_index))
            .then_with(|| b.exemplar.exemplar_id.cmp(&a.exemplar.exemplar_id))
    }
}

impl PartialEq for Ranked<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_rank(other) == Ordering::Equal
    }
}
impl Eq for Ranked<'_> {}
impl PartialOrd for Ranked<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_rank(other)
    }
}

/// The `k` best non-excluded exemplars with a positive combined score,
/// best first; ties go to the smaller `(doc_id, seg_index)`.
pub fn top_k<'a>(
    query: &str,
    index: &'a ExemplarIndex,
    k: usize,
    alpha: f64,
    exclude: impl Fn(&str, usize) -> bool,
) -> Vec<ScoredExemplar<'a>> {
    if k == 0 || index.is_empty() {
        return Vec::new();
    }
    let query = index.query(query);
    let mut heap: BinaryHeap<Reverse<Ranked<'a>>> = BinaryHeap::with_capacity(k + 1);
    for ex in index.exemplars() {
        if exclude(&ex.doc_id, ex.seg_index) {
            continue;
        }
        let score = query.score(ex, alpha);
        if score.combined <= 0.0 {
            continue;
        }
        heap.push(Reverse(Ranked(ScoredExemplar { exemplar: ex, score })));
        if heap.len() > k {
            heap.pop();
        }
    }
    let mut out: Vec<Ranked<'a>> = heap.into_iter().map(|r| r.0).collect();
    out.sort_by(|a, b| b.cmp(a));
    out.into_iter().map(|r| r.0).collect()
}
