//! Bilingual literary corpora: data model, ingestion and validation.
//!
//! A corpus is a list of documents (novels), each an ordered list of
//! chapters, each an ordered list of sentence pairs. Two on-disk layouts are
//! supported: line-delimited JSON records and a pair of line-aligned plain
//! text files.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::trim_line_terminators;

/// Chapter id given to records that carry none.
pub const DEFAULT_CHAPTER: &str = "";
/// Boundary line between documents in line-aligned files.
pub const DEFAULT_BOUNDARY_MARKER: &str = "";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: malformed record: {detail}")]
    Malformed { line: usize, detail: String },
    #[error("line {line}: duplicate segment (doc_id={doc_id}, seg_index={seg_index})")]
    DuplicateSegment {
        line: usize,
        doc_id: String,
        seg_index: usize,
    },
    #[error("line {line}: empty source text")]
    EmptySource { line: usize },
    #[error("line {line}: empty target text")]
    EmptyTarget { line: usize },
    #[error("document {doc_id}: some records carry a target and some do not")]
    MixedTargets { doc_id: String },
    #[error("document {doc_id}: seg_index present on some records but not others")]
    MixedSegIndex { doc_id: String },
    #[error("document {doc_id}: seg_index is not contiguous (expected {expected}, found {found})")]
    NonContiguous {
        doc_id: String,
        expected: usize,
        found: usize,
    },
    #[error("document {doc_id}: chapter {chapter_id:?} is interleaved with other chapters")]
    InterleavedChapter { doc_id: String, chapter_id: String },
    #[error("line count mismatch: source has {source_lines} lines, target has {target_lines}")]
    LineCountMismatch {
        source_lines: usize,
        target_lines: usize,
    },
    #[error("document boundaries diverge at block {block} (line {line})")]
    BoundaryMismatch { block: usize, line: usize },
}

pub type Result<T> = std::result::Result<T, CorpusError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub doc_id: String,
    pub chapter_id: String,
    pub seg_index: usize,
    pub source: String,
    pub target: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chapter {
    pub chapter_id: String,
    pub pairs: Vec<SentencePair>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub chapters: Vec<Chapter>,
}

impl Document {
    /// Builds a single-chapter document, numbering pairs from 0.
    pub fn from_pairs<S, T>(doc_id: &str, pairs: impl IntoIterator<Item = (S, Option<T>)>) -> Self
    where
        S: Into<String>,
        T: Into<String>,
    {
        let pairs = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (s, t))| SentencePair {
                doc_id: doc_id.to_string(),
                chapter_id: DEFAULT_CHAPTER.to_string(),
                seg_index: i,
                source: s.into(),
                target: t.map(Into::into),
            })
            .collect();
        Document {
            doc_id: doc_id.to_string(),
            chapters: vec![Chapter {
                chapter_id: DEFAULT_CHAPTER.to_string(),
                pairs,
            }],
        }
    }

    /// All pairs in chapter order.
    pub fn pairs(&self) -> impl Iterator<Item = &SentencePair> {
        self.chapters.iter().flat_map(|c| c.pairs.iter())
    }

    pub fn len(&self) -> usize {
        self.chapters.iter().map(|c| c.pairs.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_parallel(&self) -> bool {
        self.pairs().all(|p| p.target.is_some())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusMeta {
    pub lang_pair: Option<String>,
    pub source_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub meta: CorpusMeta,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Self {
        Corpus {
            documents,
            meta: CorpusMeta::default(),
        }
    }

    /// True when every pair carries a target. An empty corpus is parallel.
    pub fn is_parallel(&self) -> bool {
        self.documents.iter().all(Document::is_parallel)
    }

    /// A corpus lacking targets anywhere is treated as monolingual/test data.
    pub fn is_monolingual(&self) -> bool {
        !self.is_parallel()
    }

    pub fn pairs(&self) -> impl Iterator<Item = &SentencePair> {
        self.documents.iter().flat_map(Document::pairs)
    }

    pub fn num_pairs(&self) -> usize {
        self.documents.iter().map(Document::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }
}

/// One line of the record file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chapter_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seg_index: Option<usize>,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

struct Pending {
    line: usize,
    record: Record,
}

/// Loads a line-delimited JSON record file. Blank lines are skipped.
pub fn load_records(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut corpus = read_records(BufReader::new(file)).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })?;
    corpus.meta.source_name = Some(path.display().to_string());
    Ok(corpus)
}

/// Parses records from any reader; see [`load_records`].
pub fn read_records(reader: impl BufRead) -> Result<Corpus> {
    // doc_id -> records in file order
    let mut by_doc: BTreeMap<String, Vec<Pending>> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: PathBuf::new(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut record: Record =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                line: lineno,
                detail: e.to_string(),
            })?;
        record.source = trim_line_terminators(&record.source).to_string();
        if record.source.trim().is_empty() {
            return Err(CorpusError::EmptySource { line: lineno });
        }
        if let Some(t) = record.target.as_mut() {
            *t = trim_line_terminators(t).to_string();
            if t.trim().is_empty() {
                return Err(CorpusError::EmptyTarget { line: lineno });
            }
        }
        by_doc.entry(record.doc_id.clone()).or_default().push(Pending {
            line: lineno,
            record,
        });
    }

    let documents = by_doc
        .into_iter()
        .map(|(doc_id, records)| assemble_document(doc_id, records))
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus::new(documents))
}

fn assemble_document(doc_id: String, mut records: Vec<Pending>) -> Result<Document> {
    let with_index = records.iter().filter(|p| p.record.seg_index.is_some()).count();
    if with_index != 0 && with_index != records.len() {
        return Err(CorpusError::MixedSegIndex { doc_id });
    }
    let with_target = records.iter().filter(|p| p.record.target.is_some()).count();
    if with_target != 0 && with_target != records.len() {
        return Err(CorpusError::MixedTargets { doc_id });
    }

    if with_index == 0 {
        for (i, p) in records.iter_mut().enumerate() {
            p.record.seg_index = Some(i);
        }
    } else {
        // stable: equal indices keep file order so the duplicate is the later line
        records.sort_by_key(|p| p.record.seg_index);
        if let Some(pair) = records
            .windows(2)
            .find(|w| w[0].record.seg_index == w[1].record.seg_index)
        {
            return Err(CorpusError::DuplicateSegment {
                line: pair[1].line,
                doc_id,
                seg_index: pair[1].record.seg_index.unwrap_or_default(),
            });
        }
        for (expected, p) in records.iter().enumerate() {
            let found = p.record.seg_index.unwrap_or_default();
            if found != expected {
                return Err(CorpusError::NonContiguous {
                    doc_id,
                    expected,
                    found,
                });
            }
        }
    }

    let mut chapters: Vec<Chapter> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for p in records {
        let r = p.record;
        let chapter_id = r.chapter_id.unwrap_or_else(|| DEFAULT_CHAPTER.to_string());
        let pair = SentencePair {
            doc_id: doc_id.clone(),
            chapter_id: chapter_id.clone(),
            seg_index: r.seg_index.unwrap_or_default(),
            source: r.source,
            target: r.target,
        };
        match chapters.last_mut() {
            Some(ch) if ch.chapter_id == chapter_id => ch.pairs.push(pair),
            _ => {
                if !seen.insert(chapter_id.clone()) {
                    return Err(CorpusError::InterleavedChapter { doc_id, chapter_id });
                }
                chapters.push(Chapter {
                    chapter_id,
                    pairs: vec![pair],
                });
            }
        }
    }
    Ok(Document { doc_id, chapters })
}

/// Writes `corpus` in the record format, one pair per line, in corpus order.
pub fn write_records(corpus: &Corpus, mut out: impl Write) -> io::Result<()> {
    for pair in corpus.pairs() {
        let record = Record {
            doc_id: pair.doc_id.clone(),
            chapter_id: (pair.chapter_id != DEFAULT_CHAPTER).then(|| pair.chapter_id.clone()),
            seg_index: Some(pair.seg_index),
            source: pair.source.clone(),
            target: pair.target.clone(),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Loads a pair of line-aligned text files. Lines equal to `boundary_marker`
/// (compared after trimming whitespace) separate documents; both files must
/// place boundaries on the same lines. Documents are named `doc-00000`,
/// `doc-00001`, ... in file order; empty blocks are skipped.
pub fn load_line_aligned(
    src_path: impl AsRef<Path>,
    tgt_path: impl AsRef<Path>,
    boundary_marker: &str,
) -> Result<Corpus> {
    let read = |p: &Path| {
        fs::read_to_string(p).map_err(|source| CorpusError::Io {
            path: p.to_path_buf(),
            source,
        })
    };
    let src = read(src_path.as_ref())?;
    let tgt = read(tgt_path.as_ref())?;
    let mut corpus = parse_line_aligned(&src, &tgt, boundary_marker)?;
    corpus.meta.source_name = Some(src_path.as_ref().display().to_string());
    Ok(corpus)
}

fn split_lines(text: &str) -> Vec<&str> {
    let mut lines: Vec<&str> = text.split('\n').map(trim_line_terminators).collect();
    if text.ends_with('\n') || text.is_empty() {
        lines.pop();
    }
    lines
}

/// In-memory form of [`load_line_aligned`].
pub fn parse_line_aligned(src: &str, tgt: &str, boundary_marker: &str) -> Result<Corpus> {
    let src_lines = split_lines(src);
    let tgt_lines = split_lines(tgt);
    if src_lines.len() != tgt_lines.len() {
        return Err(CorpusError::LineCountMismatch {
            source_lines: src_lines.len(),
            target_lines: tgt_lines.len(),
        });
    }
    let marker = boundary_marker.trim();
    let is_boundary = |l: &str| l.trim() == marker;

    let mut documents = Vec::new();
    let mut block = 0usize;
    let mut current: Vec<(String, String)> = Vec::new();
    let flush = |current: &mut Vec<(String, String)>, documents: &mut Vec<Document>| {
        if !current.is_empty() {
            let doc_id = format!("doc-{:05}", documents.len());
            documents.push(Document::from_pairs(
                &doc_id,
                current.drain(..).map(|(s, t)| (s, Some(t))),
            ));
        }
    };
    for (i, (s, t)) in src_lines.iter().zip(&tgt_lines).enumerate() {
        match (is_boundary(s), is_boundary(t)) {
            (true, true) => {
                flush(&mut current, &mut documents);
                block += 1;
            }
            (false, false) => {
                if s.trim().is_empty() {
                    return Err(CorpusError::EmptySource { line: i + 1 });
                }
                if t.trim().is_empty() {
                    return Err(CorpusError::EmptyTarget { line: i + 1 });
                }
                current.push((s.to_string(), t.to_string()));
            }
            _ => return Err(CorpusError::BoundaryMismatch { block, line: i + 1 }),
        }
    }
    flush(&mut current, &mut documents);
    Ok(Corpus::new(documents))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub doc_id: String,
    pub chapter_id: Option<String>,
    pub seg_index: Option<usize>,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "doc {}", self.doc_id)?;
        if let Some(c) = &self.chapter_id {
            write!(f, " chapter {c:?}")?;
        }
        if let Some(s) = self.seg_index {
            write!(f, " seg {s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    EmptySource,
    EmptyTarget,
    DuplicateDocId,
    DuplicateSegIndex,
    NonContiguousSegIndex { expected: usize, found: usize },
    OutOfOrderSegIndex,
    ForeignDocId { found: String },
    InterleavedChapter,
    MixedTargets,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::EmptySource => f.write_str("empty source"),
            ViolationKind::EmptyTarget => f.write_str("empty target"),
            ViolationKind::DuplicateDocId => f.write_str("duplicate doc_id"),
            ViolationKind::DuplicateSegIndex => f.write_str("duplicate seg_index"),
            ViolationKind::NonContiguousSegIndex { expected, found } => {
                write!(f, "non-contiguous seg_index (expected {expected}, found {found})")
            }
            ViolationKind::OutOfOrderSegIndex => f.write_str("seg_index out of order"),
            ViolationKind::ForeignDocId { found } => {
                write!(f, "pair carries doc_id {found:?}")
            }
            ViolationKind::InterleavedChapter => f.write_str("chapter interleaved with another"),
            ViolationKind::MixedTargets => f.write_str("mixed presence of targets"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub location: Location,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{}: {}", v.location, v.kind)?;
        }
        Ok(())
    }
}

/// Checks every corpus invariant and reports each violation with its location.
pub fn validate(corpus: &Corpus) -> ValidationReport {
    let mut violations = Vec::new();
    let mut doc_ids = HashSet::new();
    for doc in &corpus.documents {
        let at = |chapter: Option<&str>, seg: Option<usize>| Location {
            doc_id: doc.doc_id.clone(),
            chapter_id: chapter.map(str::to_string),
            seg_index: seg,
        };
        if !doc_ids.insert(doc.doc_id.as_str()) {
            violations.push(Violation {
                location: at(None, None),
                kind: ViolationKind::DuplicateDocId,
            });
        }
        let with_target = doc.pairs().filter(|p| p.target.is_some()).count();
        if with_target != 0 && with_target != doc.len() {
            violations.push(Violation {
                location: at(None, None),
                kind: ViolationKind::MixedTargets,
            });
        }

        let mut chapters_seen = HashSet::new();
        let mut prev: Option<usize> = None;
        for ch in &doc.chapters {
            if !chapters_seen.insert(ch.chapter_id.as_str()) {
                violations.push(Violation {
                    location: at(Some(&ch.chapter_id), None),
                    kind: ViolationKind::InterleavedChapter,
                });
            }
            for p in &ch.pairs {
                let here = || at(Some(&ch.chapter_id), Some(p.seg_index));
                if p.doc_id != doc.doc_id {
                    violations.push(Violation {
                        location: here(),
                        kind: ViolationKind::ForeignDocId {
                            found: p.doc_id.clone(),
                        },
                    });
                }
                if p.source.trim().is_empty() {
                    violations.push(Violation {
                        location: here(),
                        kind: ViolationKind::EmptySource,
                    });
                }
                if p.target.as_deref().is_some_and(|t| t.trim().is_empty()) {
                    violations.push(Violation {
                        location: here(),
                        kind: ViolationKind::EmptyTarget,
                    });
                }
                let expected = prev.map_or(0, |x| x + 1);
                let kind = match prev {
                    Some(x) if p.seg_index == x => Some(ViolationKind::DuplicateSegIndex),
                    Some(x) if p.seg_index < x => Some(ViolationKind::OutOfOrderSegIndex),
                    _ if p.seg_index != expected => Some(ViolationKind::NonContiguousSegIndex {
                        expected,
                        found: p.seg_index,
                    }),
                    _ => None,
                };
                if let Some(kind) = kind {
                    violations.push(Violation {
                        location: here(),
                        kind,
                    });
                }
                prev = Some(prev.map_or(p.seg_index, |x| x.max(p.seg_index)));
            }
        }
    }
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load_str(s: &str) -> Result<Corpus> {
        read_records(s.as_bytes())
    }

    #[test]
    fn minimal_file() {
        let c = load_str(
            r#"{"doc_id":"A","source":"s0","target":"t0"}
{"doc_id":"A","source":"s1","target":"t1"}
"#,
        )
        .unwrap();
        assert_eq!(c.documents.len(), 1);
        let idx: Vec<_> = c.pairs().map(|p| p.seg_index).collect();
        assert_eq!(idx, vec![0, 1]);
        assert!(c.is_parallel());
        assert_eq!(c.documents[0].chapters[0].chapter_id, DEFAULT_CHAPTER);
    }

    #[test]
    fn duplicate_segment_names_line() {
        let err = load_str(
            r#"{"doc_id":"A","seg_index":0,"source":"x"}
{"doc_id":"B","seg_index":0,"source":"y"}
{"doc_id":"A","seg_index":0,"source":"z"}
"#,
        )
        .unwrap_err();
        match err {
            CorpusError::DuplicateSegment { line, doc_id, seg_index } => {
                assert_eq!((line, doc_id.as_str(), seg_index), (3, "A", 0));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn shuffled_records_restore_order() {
        let text = r#"{"doc_id":"B","seg_index":1,"source":"b1","target":"B1"}
{"doc_id":"A","seg_index":2,"source":"a2","target":"A2"}
{"doc_id":"A","seg_index":0,"source":"a0","target":"A0"}
{"doc_id":"B","seg_index":0,"source":"b0","target":"B0"}
{"doc_id":"A","seg_index":1,"source":"a1","target":"A1"}
"#;
        let c = load_str(text).unwrap();
        // hand-sorted by (doc_id, seg_index)
        let got: Vec<_> = c.pairs().map(|p| (p.doc_id.as_str(), p.source.as_str())).collect();
        assert_eq!(
            got,
            vec![("A", "a0"), ("A", "a1"), ("A", "a2"), ("B", "b0"), ("B", "b1")]
        );
        assert_eq!(c.documents[0].len(), 3);
        assert_eq!(c.documents[1].len(), 2);
    }

    #[test]
    fn malformed_and_mixed() {
        let err = load_str("{\"doc_id\":\"A\",\"source\":\"x\"}\nnot json\n").unwrap_err();
        assert!(matches!(err, CorpusError::Malformed { line: 2, .. }));

        let err = load_str(
            r#"{"doc_id":"A","source":"x","target":"y"}
{"doc_id":"A","source":"x"}
"#,
        )
        .unwrap_err();
        assert!(matches!(err, CorpusError::MixedTargets { .. }));

        let err = load_str(r#"{"doc_id":"A","source":"   "}"#).unwrap_err();
        assert!(matches!(err, CorpusError::EmptySource { line: 1 }));

        let err = load_str(
            r#"{"doc_id":"A","seg_index":0,"source":"x"}
{"doc_id":"A","seg_index":2,"source":"y"}
"#,
        )
        .unwrap_err();
        assert!(matches!(err, CorpusError::NonContiguous { expected: 1, found: 2, .. }));
    }

    #[test]
    fn chapters_follow_seg_order() {
        let c = load_str(
            r#"{"doc_id":"A","chapter_id":"c1","seg_index":0,"source":"x"}
{"doc_id":"A","chapter_id":"c2","seg_index":2,"source":"z"}
{"doc_id":"A","chapter_id":"c1","seg_index":1,"source":"y"}
"#,
        )
        .unwrap();
        let doc = &c.documents[0];
        assert_eq!(doc.chapters.len(), 2);
        assert_eq!(doc.chapters[0].pairs.len(), 2);
        assert!(c.is_monolingual());

        let err = load_str(
            r#"{"doc_id":"A","chapter_id":"c1","seg_index":0,"source":"x"}
{"doc_id":"A","chapter_id":"c2","seg_index":1,"source":"y"}
{"doc_id":"A","chapter_id":"c1","seg_index":2,"source":"z"}
"#,
        )
        .unwrap_err();
        assert!(matches!(err, CorpusError::InterleavedChapter { .. }));
    }

    #[test]
    fn line_aligned_basic() {
        let c = parse_line_aligned("a\nb\nc\n", "A\nB\nC\n", "").unwrap();
        assert_eq!(c.documents.len(), 1);
        assert_eq!(c.documents[0].len(), 3);

        let err = parse_line_aligned("a\nb\nc\n", "A\nB\n", "").unwrap_err();
        assert!(matches!(
            err,
            CorpusError::LineCountMismatch { source_lines: 3, target_lines: 2 }
        ));
    }

    #[test]
    fn line_aligned_boundaries() {
        let c = parse_line_aligned("a\nb\n\nc\nd\ne\n", "A\nB\n\nC\nD\nE\n", "").unwrap();
        let sizes: Vec<_> = c.documents.iter().map(Document::len).collect();
        assert_eq!(sizes, vec![2, 3]);
        assert_eq!(c.documents[1].doc_id, "doc-00001");
        assert_eq!(c.documents[1].chapters[0].pairs[0].target.as_deref(), Some("C"));

        let err = parse_line_aligned("a\n\nb\nc\n", "A\nB\n\nC\n", "").unwrap_err();
        assert!(matches!(err, CorpusError::BoundaryMismatch { block: 0, line: 2 }));

        let c = parse_line_aligned("a\r\n===\r\nb\r\n", "A\r\n===\r\nB\r\n", "===").unwrap();
        assert_eq!(c.documents.len(), 2);
        assert_eq!(c.documents[0].chapters[0].pairs[0].source, "a");
    }

    #[test]
    fn validate_reports() {
        let good = Corpus::new(vec![
            Document::from_pairs("A", [("x", Some("X")), ("y", Some("Y"))]),
            Document::from_pairs("B", [("z", Some("Z"))]),
        ]);
        assert!(validate(&good).is_valid());

        let mut blank = good.clone();
        blank.documents[0].chapters[0].pairs[1].source = " \t".into();
        let report = validate(&blank);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::EmptySource);
        assert_eq!(report.violations[0].location.seg_index, Some(1));

        let mut gap = good.clone();
        gap.documents[0].chapters[0].pairs[1].seg_index = 2;
        let report = validate(&gap);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(
            report.violations[0].kind,
            ViolationKind::NonContiguousSegIndex { expected: 1, found: 2 }
        );
        assert!(report.to_string().contains("non-contiguous seg_index"));

        let mut dup = good;
        dup.documents[1].doc_id = "A".into();
        for p in &mut dup.documents[1].chapters[0].pairs {
            p.doc_id = "A".into();
        }
        assert_eq!(validate(&dup).violations[0].kind, ViolationKind::DuplicateDocId);
    }
}
