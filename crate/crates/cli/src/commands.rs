use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use litmt_core::backend::{
    mock::ScriptEntry, HttpBackend, IdentityBackend, RecordingBackend, ScriptedBackend, TableBackend,
    TranslationBackend,
};
use litmt_core::corpus::{self, Corpus, CorpusError, ValidationReport};
use litmt_core::decoder::{run_corpus, CorpusRun, DecodeError, ExemplarSource, PromptSpec};
use litmt_core::jsonl;
use litmt_core::metrics::{self, AlignmentError, BleuReport, HypothesisRecord, MetricsError};
use litmt_core::retrieval::{ExemplarIndex, PoolEntry};
use litmt_core::stage_data::{self, ScriptTokenCounter, StageError};
use log::info;
use serde::Serialize;
use thiserror::Error;

use crate::config::{BackendKind, ConfigError, RunConfig};

pub const STAGE1_FILE: &str = "stage1.jsonl";
pub const STAGE2_FILE: &str = "stage2.txt";
pub const STAGE3_FILE: &str = "stage3.jsonl";
pub const BASELINE_FILE: &str = "baseline.jsonl";
pub const HYPOTHESES_FILE: &str = "hypotheses.jsonl";
pub const TRACE_FILE: &str = "trace.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PROMPTS_FILE: &str = "prompts.jsonl";
pub const S_BLEU_FILE: &str = "s_bleu.json";
pub const D_BLEU_FILE: &str = "d_bleu.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("corpus failed validation:\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Stage(#[from] StageError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("{path}: {detail}")]
    Input { path: PathBuf, detail: String },
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Metrics(MetricsError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Alignment(_) | CliError::Metrics(MetricsError::Alignment(_)) => 3,
            _ => 1,
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Alignment(a) => CliError::Alignment(a),
            other => CliError::Metrics(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Outcome of a command that completed without a hard error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Some documents were aborted.
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Stage {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    Baseline,
}

fn load_corpus(config: &RunConfig) -> Result<Corpus> {
    let c = &config.corpus;
    if let Some(records) = &c.records {
        return Ok(corpus::load_records(records)?);
    }
    match (&c.source, &c.target) {
        (Some(src), Some(tgt)) => Ok(corpus::load_line_aligned(
            src,
            tgt,
            c.boundary_marker.as_deref().unwrap_or(corpus::DEFAULT_BOUNDARY_MARKER),
        )?),
        _ => Err(ConfigError::Invalid("no corpus configured (corpus.records or corpus.source/target)".into()).into()),
    }
}

fn load_valid_corpus(config: &RunConfig) -> Result<Corpus> {
    let corpus = load_corpus(config)?;
    let report = corpus::validate(&corpus);
    if !report.is_valid() {
        return Err(CliError::Invalid(report));
    }
    Ok(corpus)
}

fn load_pool(config: &RunConfig) -> Result<Option<ExemplarIndex>> {
    if config.decoding.exemplar_source != ExemplarSource::External {
        return Ok(None);
    }
    let Some(path) = &config.corpus.exemplar_pool else {
        return Ok(None);
    };
    let pool = corpus::load_records(path)?;
    let entries = pool.pairs().filter_map(|p| {
        p.target.as_ref().map(|t| PoolEntry {
            doc_id: p.doc_id.clone(),
            seg_index: p.seg_index,
            source: p.source.clone(),
            target: t.clone(),
        })
    });
    Ok(Some(ExemplarIndex::build(entries, config.decoding.keywords_per_sentence)))
}

fn output_path(config: &RunConfig, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(&config.output_dir).map_err(|source| CliError::Output {
        path: config.output_dir.clone(),
        source,
    })?;
    Ok(config.output_dir.join(name))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let out_err = |source| CliError::Output {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(out_err)?);
    jsonl::write(items, &mut w).map_err(out_err)?;
    w.flush().map_err(out_err)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn validate(config: &RunConfig) -> Result<Outcome> {
    let corpus = load_corpus(config)?;
    let report = corpus::validate(&corpus);
    if !report.is_valid() {
        return Err(CliError::Invalid(report));
    }
    let kind = if corpus.is_parallel() { "parallel" } else { "monolingual" };
    println!(
        "ok: {} documents, {} sentences ({kind})",
        corpus.documents.len(),
        corpus.num_pairs()
    );
    if let Some(path) = &config.corpus.exemplar_pool {
        let pool = corpus::load_records(path)?;
        let report = corpus::validate(&pool);
        if !report.is_valid() {
            return Err(CliError::Invalid(report));
        }
        println!("ok: exemplar pool with {} sentences", pool.num_pairs());
    }
    Ok(Outcome::Success)
}

pub fn prepare(config: &RunConfig, stage: Stage) -> Result<Outcome> {
    let corpus = load_valid_corpus(config)?;
    let counter = ScriptTokenCounter;
    match stage {
        Stage::One => {
            let units = stage_data::build_stage1_paragraphs(
                &corpus,
                config.stage.stage1_side,
                config.stage.stage1_budget,
                &counter,
                None,
            )?;
            let path = output_path(config, STAGE1_FILE)?;
            write_jsonl(&path, &units)?;
            let over = units.iter().filter(|u| u.over_budget).count();
            println!("stage 1: {} paragraph units ({over} over budget) -> {}", units.len(), path.display());
        }
        Stage::Two => {
            let units = stage_data::build_stage2_documents(&corpus, config.stage.stage2_budget, &counter)?;
            let docs: Vec<_> = units.iter().map(|u| u.document.clone()).collect();
            let path = output_path(config, STAGE2_FILE)?;
            write_file(&path, stage_data::format_interlinear_file(&docs).as_bytes())?;
            let over = units.iter().filter(|u| u.over_budget).count();
            println!("stage 2: {} interlinear documents ({over} over budget) -> {}", units.len(), path.display());
        }
        Stage::Three => {
            let pool = load_pool(config)?;
            let records = stage_data::build_stage3_instructions(&corpus, &config.decoding, pool.as_ref())?;
            let path = output_path(config, STAGE3_FILE)?;
            write_jsonl(&path, &records)?;
            println!("stage 3: {} instruction records -> {}", records.len(), path.display());
        }
        Stage::Baseline => {
            let records = stage_data::build_sentence_instructions(&corpus, &config.stage.instruction_template)?;
            let path = output_path(config, BASELINE_FILE)?;
            write_jsonl(&path, &records)?;
            println!("baseline: {} instruction records -> {}", records.len(), path.display());
        }
    }
    Ok(Outcome::Success)
}

fn read_jsonl_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    jsonl::read(BufReader::new(file)).map_err(|(line, msg)| CliError::Input {
        path: path.to_path_buf(),
        detail: format!("line {line}: {msg}"),
    })
}

fn build_backend(config: &RunConfig) -> Result<Box<dyn TranslationBackend>> {
    let b = &config.backend;
    Ok(match b.kind {
        BackendKind::Identity => Box::new(IdentityBackend::default()),
        BackendKind::Scripted => {
            let path = b.script.as_deref().expect("checked at config load");
            let entries: Vec<ScriptEntry> = read_jsonl_file(path)?;
            Box::new(ScriptedBackend::new(entries))
        }
        BackendKind::Table => {
            let path = b.table.as_deref().expect("checked at config load");
            let table = corpus::load_records(path)?;
            Box::new(TableBackend::new(
                table
                    .pairs()
                    .filter_map(|p| p.target.clone().map(|t| (p.source.clone(), t))),
            ))
        }
        BackendKind::Http => Box::new(
            HttpBackend::new(b.http.clone()).map_err(|e| ConfigError::Invalid(e.to_string()))?,
        ),
    })
}

fn print_run_table(run: &CorpusRun) {
    println!("{:<24} {:>9} {:>7} {:>8}  status", "doc_id", "sentences", "failed", "attempts");
    for t in &run.translations {
        let failed = t.segments.iter().filter(|s| s.failed).count();
        let attempts: usize = t.trace.iter().map(|e| e.attempts.len()).sum();
        println!("{:<24} {:>9} {:>7} {:>8}  ok", t.doc_id, t.segments.len(), failed, attempts);
    }
    for a in &run.manifest.aborted {
        let at = a.seg_index.map(|s| format!(" at seg {s}")).unwrap_or_default();
        println!("{:<24} {:>9} {:>7} {:>8}  aborted{at}", a.doc_id, "-", "-", "-");
    }
    let c = &run.manifest.counts;
    println!(
        "{} documents: {} completed, {} aborted; {} sentences, {} fell back to source",
        c.documents, c.completed, c.aborted, c.sentences, c.failed_sentences
    );
}

pub fn translate(config: &RunConfig, dry_run: bool) -> Result<Outcome> {
    let corpus = load_valid_corpus(config)?;
    let pool = load_pool(config)?;

    if dry_run {
        let recorder = RecordingBackend::new(IdentityBackend::default());
        run_corpus(&corpus, &recorder, pool.as_ref(), &config.decoding, config.backend.parallelism)?;
        let mut prompts: Vec<PromptSpec> = recorder.prompts();
        prompts.sort_by(|a, b| (&a.doc_id, a.seg_index).cmp(&(&b.doc_id, b.seg_index)));
        let path = output_path(config, PROMPTS_FILE)?;
        write_jsonl(&path, &prompts)?;
        let chars: usize = prompts.iter().map(|p| p.rendered.chars().count()).sum();
        println!(
            "dry run: {} prompts ({chars} characters) -> {}",
            prompts.len(),
            path.display()
        );
        return Ok(Outcome::Success);
    }

    let backend = build_backend(config)?;
    info!("translating with backend {}", backend.capabilities().name);
    let run = run_corpus(
        &corpus,
        backend.as_ref(),
        pool.as_ref(),
        &config.decoding,
        config.backend.parallelism,
    )?;

    let hyp_path = output_path(config, HYPOTHESES_FILE)?;
    write_jsonl(&hyp_path, run.translations.iter().flat_map(|t| &t.segments))?;
    let trace_path = output_path(config, TRACE_FILE)?;
    write_jsonl(
        &trace_path,
        run.translations.iter().flat_map(|t| {
            t.trace.iter().map(move |e| TraceLine {
                doc_id: &t.doc_id,
                entry: e,
            })
        }),
    )?;
    write_json(&output_path(config, MANIFEST_FILE)?, &run.manifest)?;
    print_run_table(&run);
    println!("hypotheses -> {}", hyp_path.display());

    Ok(if run.manifest.counts.aborted > 0 {
        Outcome::Partial
    } else {
        Outcome::Success
    })
}

#[derive(Serialize)]
struct TraceLine<'a> {
    doc_id: &'a str,
    #[serde(flatten)]
    entry: &'a litmt_core::decoder::TraceEntry,
}

fn print_scores(s: &BleuReport, d: &BleuReport) {
    println!("{:<8} {:>7} {:>7} {:>9} {:>9}", "metric", "BLEU", "BP", "hyp_len", "ref_len");
    for (name, r) in [("s-BLEU", s), ("d-BLEU", d)] {
        println!(
            "{name:<8} {:>7.2} {:>7.3} {:>9} {:>9}",
            metrics::round2(r.score),
            r.brevity_penalty,
            r.hyp_length,
            r.ref_length
        );
    }
}

pub fn evaluate(config: &RunConfig, hyp: Option<&Path>, reference: Option<&Path>) -> Result<Outcome> {
    let hyp_path = match hyp {
        Some(p) => p.to_path_buf(),
        None => config.output_dir.join(HYPOTHESES_FILE),
    };
    let hypotheses: Vec<HypothesisRecord> = read_jsonl_file(&hyp_path)?;
    let references = match reference {
        Some(p) => corpus::load_records(p)?,
        None => load_corpus(config)?,
    };
    let report = corpus::validate(&references);
    if !report.is_valid() {
        return Err(CliError::Invalid(report));
    }
    let aligned = metrics::align(&hypotheses, &references)?;
    let s = metrics::s_bleu(&aligned, &config.metrics)?;
    let d = metrics::d_bleu(&aligned, &config.metrics)?;
    write_json(&output_path(config, S_BLEU_FILE)?, &s)?;
    write_json(&output_path(config, D_BLEU_FILE)?, &d)?;
    print_scores(&s, &d);
    Ok(Outcome::Success)
}
