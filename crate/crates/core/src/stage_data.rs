//! Training-data builders for the three pipeline stages and the
//! sentence-level baseline.
//!
//! Stage 1 packs monolingual chapter text into paragraphs, Stage 2 packs
//! aligned pairs into interlinear documents, Stage 3 renders context- and
//! exemplar-bearing instructions. Nothing here trains a model; the outputs
//! are data files.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Document};
use crate::decoder::prompt::{substitute, ContextEntry, ExemplarEntry, PromptError};
use crate::decoder::{DecodingConfig, ExemplarSource};
use crate::retrieval::{top_k, ExemplarIndex, PoolEntry};
use crate::text::{is_mostly_cjk, script_tokens};

pub const DEFAULT_STAGE1_BUDGET: usize = 1024;
pub const DEFAULT_STAGE2_BUDGET: usize = 1024;

#[derive(Debug, Error)]
pub enum StageError {
    #[error("parallel corpus required: document {doc_id} seg {seg_index} has no target")]
    NotParallel { doc_id: String, seg_index: usize },
    #[error("instruction template is missing the required placeholder {{source}}")]
    MissingSourcePlaceholder,
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

pub type Result<T> = std::result::Result<T, StageError>;

/// Counts tokens for budget packing.
pub trait TokenCounter: Send + Sync {
    fn count(&self, text: &str) -> usize;
}

impl<F> TokenCounter for F
where
    F: Fn(&str) -> usize + Send + Sync,
{
    fn count(&self, text: &str) -> usize {
        self(text)
    }
}

/// Whitespace tokens for spaced scripts, one token per CJK character.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScriptTokenCounter;

impl TokenCounter for ScriptTokenCounter {
    fn count(&self, text: &str) -> usize {
        script_tokens(text).len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    #[default]
    Source,
    Target,
}

fn require_parallel(corpus: &Corpus) -> Result<()> {
    match corpus.pairs().find(|p| p.target.is_none()) {
        Some(p) => Err(StageError::NotParallel {
            doc_id: p.doc_id.clone(),
            seg_index: p.seg_index,
        }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParagraphUnit {
    pub doc_id: String,
    pub chapter_id: String,
    pub text: String,
    pub token_count: usize,
    pub over_budget: bool,
    /// seg_index range of the sentences packed into this unit.
    #[serde(skip)]
    pub seg_range: Range<usize>,
}

/// Sentence joiner for a chapter: nothing between CJK sentences, a single
/// space otherwise.
pub fn default_joiner(sentences: &[&str]) -> &'static str {
    if is_mostly_cjk(&sentences.concat()) {
        ""
    } else {
        " "
    }
}

/// Greedily packs each chapter's sentences into paragraphs of at most
/// `budget` tokens. A sentence that alone exceeds the budget becomes its own
/// unit with `over_budget` set. `joiner` overrides [`default_joiner`].
pub fn build_stage1_paragraphs(
    corpus: &Corpus,
    side: Side,
    budget: usize,
    counter: &dyn TokenCounter,
    joiner: Option<&str>,
) -> Result<Vec<ParagraphUnit>> {
    let mut units = Vec::new();
    for doc in &corpus.documents {
        for chapter in &doc.chapters {
            let mut sentences: Vec<(usize, &str)> = Vec::with_capacity(chapter.pairs.len());
            for p in &chapter.pairs {
                let text = match side {
                    Side::Source => p.source.as_str(),
                    Side::Target => p.target.as_deref().ok_or_else(|| StageError::NotParallel {
                        doc_id: p.doc_id.clone(),
                        seg_index: p.seg_index,
                    })?,
                };
                sentences.push((p.seg_index, text));
            }
            let texts: Vec<&str> = sentences.iter().map(|(_, t)| *t).collect();
            let joiner = joiner.unwrap_or_else(|| default_joiner(&texts));

            let costs: Vec<usize> = texts.iter().map(|t| counter.count(t)).collect();
            for run in greedy_runs(&costs, budget) {
                let token_count: usize = costs[run.clone()].iter().sum();
                units.push(ParagraphUnit {
                    doc_id: doc.doc_id.clone(),
                    chapter_id: chapter.chapter_id.clone(),
                    text: texts[run.clone()].join(joiner),
                    token_count,
                    over_budget: token_count > budget,
                    seg_range: sentences[run.start].0..sentences[run.end - 1].0 + 1,
                });
            }
        }
    }
    Ok(units)
}

/// Splits items into maximal consecutive runs whose cost sum fits `budget`;
/// an item that alone exceeds the budget forms a run of one.
fn greedy_runs(costs: &[usize], budget: usize) -> Vec<Range<usize>> {
    let mut runs = Vec::new();
    let mut start = 0;
    let mut sum = 0usize;
    for (i, &c) in costs.iter().enumerate() {
        if i > start && sum + c > budget {
            runs.push(start..i);
            start = i;
            sum = 0;
        }
        sum += c;
    }
    if start < costs.len() {
        runs.push(start..costs.len());
    }
    runs
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterlinearPair {
    pub source: String,
    pub target: String,
}

/// A Stage 2 training unit. The serialized form carries no document id; it
/// travels out of band (file name, or the caller of [`parse_interlinear`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterlinearDocument {
    pub doc_id: String,
    pub pairs: Vec<InterlinearPair>,
}

pub const SRC_TAG: &str = "<src> ";
pub const TGT_TAG: &str = "<tgt> ";

/// Serializes one document: `<src> TEXT` then `<tgt> TEXT` per pair, each
/// line ending in `\n`. Lines must be non-empty and free of line breaks.
pub fn format_interlinear(doc: &InterlinearDocument) -> String {
    let mut out = String::new();
    for p in &doc.pairs {
        out.push_str(SRC_TAG);
        out.push_str(&p.source);
        out.push('\n');
        out.push_str(TGT_TAG);
        out.push_str(&p.target);
        out.push('\n');
    }
    out
}

/// Serializes several documents separated by one blank line. Empty
/// documents are skipped.
pub fn format_interlinear_file(docs: &[InterlinearDocument]) -> String {
    docs.iter()
        .filter(|d| !d.pairs.is_empty())
        .map(format_interlinear)
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InterlinearErrorKind {
    /// Two source lines in a row.
    TagMismatch,
    TargetBeforeSource,
    UnpairedSource,
    UnknownTag,
    EmptyText,
    BlankLine,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct InterlinearError {
    pub line: usize,
    pub kind: InterlinearErrorKind,
}

impl fmt::Display for InterlinearError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            InterlinearErrorKind::TagMismatch => "tag mismatch: expected <tgt>, found <src>",
            InterlinearErrorKind::TargetBeforeSource => "target before source",
            InterlinearErrorKind::UnpairedSource => "source line without a target",
            InterlinearErrorKind::UnknownTag => "unknown tag",
            InterlinearErrorKind::EmptyText => "empty text",
            InterlinearErrorKind::BlankLine => "unexpected blank line",
        };
        write!(f, "line {}: {what}", self.line)
    }
}

struct PairParser {
    pairs: Vec<InterlinearPair>,
    pending: Option<(usize, String)>,
}

impl PairParser {
    fn new() -> Self {
        PairParser {
            pairs: Vec::new(),
            pending: None,
        }
    }

    fn line(&mut self, lineno: usize, line: &str) -> std::result::Result<(), InterlinearError> {
        let err = |kind| InterlinearError { line: lineno, kind };
        let (is_src, text) = if let Some(t) = line.strip_prefix(SRC_TAG) {
            (true, t)
        } else if let Some(t) = line.strip_prefix(TGT_TAG) {
            (false, t)
        } else if line == SRC_TAG.trim_end() || line == TGT_TAG.trim_end() {
            return Err(err(InterlinearErrorKind::EmptyText));
        } else {
            return Err(err(InterlinearErrorKind::UnknownTag));
        };
        if text.is_empty() {
            return Err(err(InterlinearErrorKind::EmptyText));
        }
        match (is_src, self.pending.take()) {
            (true, None) => self.pending = Some((lineno, text.to_string())),
            (true, Some(_)) => return Err(err(InterlinearErrorKind::TagMismatch)),
            (false, None) => return Err(err(InterlinearErrorKind::TargetBeforeSource)),
            (false, Some((_, source))) => self.pairs.push(InterlinearPair {
                source,
                target: text.to_string(),
            }),
        }
        Ok(())
    }

    fn finish(self) -> std::result::Result<Vec<InterlinearPair>, InterlinearError> {
        match self.pending {
            Some((line, _)) => Err(InterlinearError {
                line,
                kind: InterlinearErrorKind::UnpairedSource,
            }),
            None => Ok(self.pairs),
        }
    }
}

fn text_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let lines: Vec<&str> = if body.is_empty() && text.len() <= 1 {
        Vec::new()
    } else {
        body.split('\n').collect()
    };
    lines.into_iter().enumerate().map(|(i, l)| (i + 1, l))
}

/// Parses one serialized document. Blank lines are rejected.
pub fn parse_interlinear(
    text: &str,
    doc_id: &str,
) -> std::result::Result<InterlinearDocument, InterlinearError> {
    let mut parser = PairParser::new();
    for (lineno, line) in text_lines(text) {
        if line.is_empty() {
            return Err(InterlinearError {
                line: lineno,
                kind: InterlinearErrorKind::BlankLine,
            });
        }
        parser.line(lineno, line)?;
    }
    Ok(InterlinearDocument {
        doc_id: doc_id.to_string(),
        pairs: parser.finish()?,
    })
}

/// Parses a file of blank-line-separated documents into their pair lists.
pub fn parse_interlinear_file(
    text: &str,
) -> std::result::Result<Vec<Vec<InterlinearPair>>, InterlinearError> {
    let mut docs = Vec::new();
    let mut parser = PairParser::new();
    for (lineno, line) in text_lines(text) {
        if line.is_empty() {
            let done = std::mem::replace(&mut parser, PairParser::new()).finish()?;
            if !done.is_empty() {
                docs.push(done);
            }
            continue;
        }
        parser.line(lineno, line)?;
    }
    let done = parser.finish()?;
    if !done.is_empty() {
        docs.push(done);
    }
    Ok(docs)
}

fn single_line(text: &str) -> String {
    text.split(['\r', '\n'])
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage2Unit {
    pub document: InterlinearDocument,
    pub token_count: usize,
    pub over_budget: bool,
}

/// Packs consecutive pairs of each document into interlinear documents of
/// at most `budget` combined source+target tokens. Line breaks inside a
/// sentence are folded to spaces so the line format stays unambiguous.
pub fn build_stage2_documents(
    corpus: &Corpus,
    budget: usize,
    counter: &dyn TokenCounter,
) -> Result<Vec<Stage2Unit>> {
    require_parallel(corpus)?;
    let mut out = Vec::new();
    for doc in &corpus.documents {
        let pairs: Vec<InterlinearPair> = doc
            .pairs()
            .map(|p| InterlinearPair {
                source: single_line(&p.source),
                target: single_line(p.target.as_deref().unwrap_or_default()),
            })
            .collect();
        let costs: Vec<usize> = pairs
            .iter()
            .map(|p| counter.count(&p.source) + counter.count(&p.target))
            .collect();
        for run in greedy_runs(&costs, budget) {
            let token_count: usize = costs[run.clone()].iter().sum();
            out.push(Stage2Unit {
                document: InterlinearDocument {
                    doc_id: doc.doc_id.clone(),
                    pairs: pairs[run].to_vec(),
                },
                token_count,
                over_budget: token_count > budget,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub instruction: String,
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InstructionTemplate(pub String);

impl Default for InstructionTemplate {
    fn default() -> Self {
        InstructionTemplate("Translate the following Chinese sentence into English.\n{source}".into())
    }
}

/// Sentence-level baseline data: one record per pair, corpus order.
pub fn build_sentence_instructions(
    corpus: &Corpus,
    template: &InstructionTemplate,
) -> Result<Vec<InstructionRecord>> {
    if !template.0.contains("{source}") {
        return Err(StageError::MissingSourcePlaceholder);
    }
    require_parallel(corpus)?;
    Ok(corpus
        .pairs()
        .map(|p| InstructionRecord {
            instruction: substitute(&template.0, &[("source", &p.source)]),
            input: p.source.clone(),
            output: p.target.clone().unwrap_or_default(),
        })
        .collect())
}

/// Context- and style-aware instructions, built the way the decoder builds
/// prompts but with reference targets in place of model output. Context is
/// the previous pairs; exemplars come from the document's own earlier pairs
/// or, in external mode, from `external` with the current sentence and
/// everything after it in the same document excluded. The prompt goes in
/// `instruction`, `input` stays empty.
pub fn build_stage3_instructions(
    corpus: &Corpus,
    config: &DecodingConfig,
    external: Option<&ExemplarIndex>,
) -> Result<Vec<InstructionRecord>> {
    require_parallel(corpus)?;
    config.template.check(config.history_size, config.exemplar_count)?;
    let mut out = Vec::with_capacity(corpus.num_pairs());
    for doc in &corpus.documents {
        out.extend(stage3_document(doc, config, external)?);
    }
    Ok(out)
}

fn stage3_document(
    doc: &Document,
    config: &DecodingConfig,
    external: Option<&ExemplarIndex>,
) -> Result<Vec<InstructionRecord>> {
    let pairs: Vec<_> = doc.pairs().collect();
    let mut out = Vec::with_capacity(pairs.len());
    let mut prefix = ExemplarIndex::new(config.keywords_per_sentence);
    for (i, p) in pairs.iter().enumerate() {
        let index = match config.exemplar_source {
            ExemplarSource::DocumentPrefix => &prefix,
            ExemplarSource::External => external.unwrap_or(&prefix),
        };
        let context = pairs[i.saturating_sub(config.history_size)..i]
            .iter()
            .map(|c| ContextEntry {
                seg_index: c.seg_index,
                source: c.source.clone(),
                translation: c.target.clone().unwrap_or_default(),
            })
            .collect();
        let exemplars = top_k(
            &p.source,
            index,
            config.exemplar_count,
            config.alpha,
            |d, s| d == doc.doc_id && s >= p.seg_index,
        )
        .into_iter()
        .map(|s| ExemplarEntry {
            exemplar_id: s.exemplar.exemplar_id,
            doc_id: s.exemplar.doc_id.clone(),
            seg_index: s.exemplar.seg_index,
            source: s.exemplar.source.clone(),
            target: s.exemplar.target.clone(),
        })
        .collect();
        let prompt = config
            .template
            .assemble(&doc.doc_id, p.seg_index, context, exemplars, &p.source)?;
        let target = p.target.clone().unwrap_or_default();
        if config.exemplar_source == ExemplarSource::DocumentPrefix {
            prefix.push(PoolEntry {
                doc_id: doc.doc_id.clone(),
                seg_index: p.seg_index,
                source: p.source.clone(),
                target: target.clone(),
            });
        }
        out.push(InstructionRecord {
            instruction: prompt.rendered,
            input: String::new(),
            output: target,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Chapter, SentencePair};

    fn chapter(doc: &str, id: &str, start: usize, texts: &[&str]) -> Chapter {
        Chapter {
            chapter_id: id.into(),
            pairs: texts
                .iter()
                .enumerate()
                .map(|(i, t)| SentencePair {
                    doc_id: doc.into(),
                    chapter_id: id.into(),
                    seg_index: start + i,
                    source: t.to_string(),
                    target: Some(format!("T{}", start + i)),
                })
                .collect(),
        }
    }

    fn words(n: usize, tag: &str) -> String {
        (0..n).map(|i| format!("{tag}{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn single_sentence_chapter() {
        let corpus = Corpus::new(vec![Document {
            doc_id: "d".into(),
            chapters: vec![chapter("d", "c", 0, &["one two three"])],
        }]);
        let units = build_stage1_paragraphs(&corpus, Side::Source, 3, &ScriptTokenCounter, None).unwrap();
        assert_eq!(units.len(), 1);
        assert_eq!(units[0].text, "one two three");
        assert_eq!(units[0].token_count, 3);
        assert!(!units[0].over_budget);
    }

    #[test]
    fn greedy_four_four_four() {
        let (a, b, c) = (words(4, "a"), words(4, "b"), words(4, "c"));
        let corpus = Corpus::new(vec![Document {
            doc_id: "d".into(),
            chapters: vec![chapter("d", "c", 0, &[&a, &b, &c])],
        }]);
        let units = build_stage1_paragraphs(&corpus, Side::Source, 8, &ScriptTokenCounter, None).unwrap();
        let ranges: Vec<_> = units.iter().map(|u| u.seg_range.clone()).collect();
        assert_eq!(ranges, vec![0..2, 2..3]);
        assert_eq!(units[0].text, format!("{a} {b}"));
        assert_eq!(units[0].token_count, 8);
    }

    #[test]
    fn no_cross_chapter_units() {
        let corpus = Corpus::new(vec![Document {
            doc_id: "d".into(),
            chapters: vec![chapter("d", "c1", 0, &["a b", "c"]), chapter("d", "c2", 2, &["d e"])],
        }]);
        let units =
            build_stage1_paragraphs(&corpus, Side::Source, usize::MAX, &ScriptTokenCounter, None).unwrap();
        assert_eq!(units.len(), 2);
        assert_eq!(units[1].chapter_id, "c2");
        let target =
            build_stage1_paragraphs(&corpus, Side::Target, usize::MAX, &ScriptTokenCounter, None).unwrap();
        assert_eq!(target[0].text, "T0 T1");
    }

    #[test]
    fn cjk_joiner_and_oversize() {
        let corpus = Corpus::new(vec![Document {
            doc_id: "d".into(),
            chapters: vec![chapter("d", "c", 0, &["他来了。", "我走了。", "好长好长好长的一句话。"])],
        }]);
        let units = build_stage1_paragraphs(&corpus, Side::Source, 8, &ScriptTokenCounter, None).unwrap();
        assert_eq!(units[0].text, "他来了。我走了。");
        assert_eq!(units[0].token_count, 8);
        assert!(units[1].over_budget);
        assert_eq!(units[1].token_count, 11);
        assert!(build_stage1_paragraphs(&Corpus::new(vec![]), Side::Source, 8, &ScriptTokenCounter, None)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn interlinear_formats() {
        let doc = |pairs: &[(&str, &str)]| InterlinearDocument {
            doc_id: "x".into(),
            pairs: pairs
                .iter()
                .map(|(s, t)| InterlinearPair { source: s.to_string(), target: t.to_string() })
                .collect(),
        };
        assert_eq!(format_interlinear(&doc(&[("s", "t")])), "<src> s\n<tgt> t\n");
        assert_eq!(format_interlinear(&doc(&[])), "");
        assert_eq!(
            format_interlinear(&doc(&[("a", "A"), ("b", "B")])),
            "<src> a\n<tgt> A\n<src> b\n<tgt> B\n"
        );
        let d = doc(&[("你好", "Hello"), ("b", "B")]);
        assert_eq!(parse_interlinear(&format_interlinear(&d), "x").unwrap(), d);
        assert_eq!(parse_interlinear("", "x").unwrap(), doc(&[]));

        let file = format_interlinear_file(&[d.clone(), doc(&[]), doc(&[("c", "C")])]);
        assert_eq!(file, "<src> 你好\n<tgt> Hello\n<src> b\n<tgt> B\n\n<src> c\n<tgt> C\n");
        let parsed = parse_interlinear_file(&file).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0], d.pairs);
    }

    #[test]
    fn interlinear_errors() {
        let e = parse_interlinear("<src> a\n<src> b\n", "x").unwrap_err();
        assert_eq!(e, InterlinearError { line: 2, kind: InterlinearErrorKind::TagMismatch });
        let e = parse_interlinear("<tgt> t\n", "x").unwrap_err();
        assert_eq!(e.kind, InterlinearErrorKind::TargetBeforeSource);
        assert_eq!(e.to_string(), "line 1: target before source");
        let e = parse_interlinear("<src> a\n<tgt> b\n<src> c\n", "x").unwrap_err();
        assert_eq!(e, InterlinearError { line: 3, kind: InterlinearErrorKind::UnpairedSource });
        let e = parse_interlinear("<foo> a\n", "x").unwrap_err();
        assert_eq!(e.kind, InterlinearErrorKind::UnknownTag);
        let e = parse_interlinear("<src> \n", "x").unwrap_err();
        assert_eq!(e.kind, InterlinearErrorKind::EmptyText);
    }

    #[test]
    fn stage2_packing() {
        // combined costs [5, 5, 5], budget 10 -> [0,1], [2]
        let corpus = Corpus::new(vec![Document::from_pairs(
            "d",
            [
                (words(2, "s"), Some(words(3, "t"))),
                (words(3, "s"), Some(words(2, "t"))),
                (words(1, "s"), Some(words(4, "t"))),
            ],
        )]);
        let units = build_stage2_documents(&corpus, 10, &ScriptTokenCounter).unwrap();
        let sizes: Vec<_> = units.iter().map(|u| u.document.pairs.len()).collect();
        assert_eq!(sizes, vec![2, 1]);
        assert_eq!(units[0].token_count, 10);

        let one = Corpus::new(vec![Document::from_pairs("d", [("a\nb", Some("A"))])]);
        let units = build_stage2_documents(&one, 10, &ScriptTokenCounter).unwrap();
        assert_eq!(units.len(), 1);
        assert_eq!(units[0].document.pairs[0].source, "a b");

        let mono = Corpus::new(vec![Document::from_pairs("d", [("a", None::<String>)])]);
        assert!(matches!(
            build_stage2_documents(&mono, 10, &ScriptTokenCounter),
            Err(StageError::NotParallel { .. })
        ));
    }

    #[test]
    fn sentence_instructions() {
        let corpus = Corpus::new(vec![Document::from_pairs(
            "d",
            [("s", Some("t")), ("u", Some("v")), ("w", Some("x"))],
        )]);
        let t = InstructionTemplate("Translate: {source}".into());
        let recs = build_sentence_instructions(&corpus, &t).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(
            recs[0],
            InstructionRecord { instruction: "Translate: s".into(), input: "s".into(), output: "t".into() }
        );
        assert_eq!(recs[2].output, "x");
        assert!(build_sentence_instructions(&Corpus::new(vec![]), &t).unwrap().is_empty());
        assert!(matches!(
            build_sentence_instructions(&corpus, &InstructionTemplate("Translate".into())),
            Err(StageError::MissingSourcePlaceholder)
        ));
    }

    fn stage3_setup() -> (Corpus, ExemplarIndex) {
        let corpus = Corpus::new(vec![Document::from_pairs(
            "d",
            [
                ("red apple", Some("R0")),
                ("green apple", Some("R1")),
                ("red green apple", Some("R2")),
            ],
        )]);
        let index = ExemplarIndex::build(
            corpus.pairs().map(|p| PoolEntry {
                doc_id: p.doc_id.clone(),
                seg_index: p.seg_index,
                source: p.source.clone(),
                target: p.target.clone().unwrap(),
            }),
            5,
        );
        (corpus, index)
    }

    #[test]
    fn stage3_context_and_exemplars() {
        let (corpus, index) = stage3_setup();
        let mut config = DecodingConfig { history_size: 1, exemplar_count: 0, ..DecodingConfig::default() };
        let recs = build_stage3_instructions(&corpus, &config, None).unwrap();
        let plain = config.template.render_plain("d", 0, "red apple").unwrap();
        assert_eq!(recs[0].instruction, plain.rendered);
        assert!(!recs[0].instruction.contains(&config.template.context_header));
        assert!(recs[1].instruction.contains("Preceding sentences:\nred apple\n=> R0\n"));
        assert!(!recs[1].instruction.contains("R2"));
        assert_eq!(recs[1].output, "R1");

        // candidates for seg 2 are exactly seg 0 and seg 1; both score > 0
        config.history_size = 2;
        config.exemplar_count = 1;
        let recs = build_stage3_instructions(&corpus, &config, None).unwrap();
        assert!(!recs[0].instruction.contains("Style examples"));
        let ex_block = recs[2].instruction.split("Preceding sentences").next().unwrap();
        assert!(ex_block.contains("Style examples:\n"));
        assert!(ex_block.contains("=> R0") || ex_block.contains("=> R1"));
        assert!(!ex_block.contains("R2"));

        // external pool: the same no-future rule, and the pool's own targets
        config.exemplar_source = ExemplarSource::External;
        let recs = build_stage3_instructions(&corpus, &config, Some(&index)).unwrap();
        assert!(!recs[0].instruction.contains("Style examples"));
        assert!(recs[1].instruction.contains("red apple\n=> R0\n\nPreceding"));
    }
}
