//! Run configuration: one TOML file plus `--set key=value` overrides.
//!
//! Precedence is command line, then file, then built-in defaults. Relative
//! paths in the file are resolved against the file's directory; paths given
//! with `--set` or `--out` against the working directory.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use litmt_core::backend::HttpConfig;
use litmt_core::decoder::{DecodingConfig, ExemplarSource};
use litmt_core::metrics::BleuConfig;
use litmt_core::stage_data::{InstructionTemplate, Side, DEFAULT_STAGE1_BUDGET, DEFAULT_STAGE2_BUDGET};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("bad override {0:?}: expected KEY=VALUE")]
    OverrideSyntax(String),
    #[error("cannot apply override {key}: {detail}")]
    Override { key: String, detail: String },
    #[error("invalid configuration: {0}")]
    Schema(String),
    #[error("{key}: path {path} does not exist")]
    MissingPath { key: &'static str, path: PathBuf },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// JSONL record file.
    pub records: Option<PathBuf>,
    /// Line-aligned source and target files, used when `records` is unset.
    pub source: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub boundary_marker: Option<String>,
    /// Record file used as the exemplar pool in external mode.
    pub exemplar_pool: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageConfig {
    pub stage1_budget: usize,
    pub stage1_side: Side,
    pub stage2_budget: usize,
    pub instruction_template: InstructionTemplate,
}

impl Default for StageConfig {
    fn default() -> Self {
        StageConfig {
            stage1_budget: DEFAULT_STAGE1_BUDGET,
            stage1_side: Side::Source,
            stage2_budget: DEFAULT_STAGE2_BUDGET,
            instruction_template: InstructionTemplate::default(),
        }
    }
}

/// Text files that replace the matching inline template fields.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemplateFiles {
    pub system: Option<PathBuf>,
    pub prompt: Option<PathBuf>,
    pub context_entry: Option<PathBuf>,
    pub exemplar_entry: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Identity,
    Table,
    Scripted,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// JSONL script for the scripted backend.
    pub script: Option<PathBuf>,
    /// Record file whose targets the table backend returns.
    pub table: Option<PathBuf>,
    pub parallelism: usize,
    pub http: HttpConfig,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Identity,
            script: None,
            table: None,
            parallelism: 1,
            http: HttpConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: CorpusConfig,
    pub stage: StageConfig,
    pub decoding: DecodingConfig,
    pub templates: TemplateFiles,
    pub backend: BackendConfig,
    pub metrics: BleuConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: CorpusConfig::default(),
            stage: StageConfig::default(),
            decoding: DecodingConfig::default(),
            templates: TemplateFiles::default(),
            backend: BackendConfig::default(),
            metrics: BleuConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Parses an override value as a TOML value, falling back to a plain string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Sets `key` (dot-separated) in `table`, creating intermediate tables.
pub fn apply_override(table: &mut toml::Table, key: &str, raw: &str) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Override {
            key: key.to_string(),
            detail: "empty key segment".into(),
        });
    }
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => {
                return Err(ConfigError::Override {
                    key: key.to_string(),
                    detail: format!("{p} is not a table"),
                })
            }
        };
    }
    cur.insert(last.to_string(), parse_value(raw));
    Ok(())
}

fn split_override(s: &str) -> Result<(&str, &str), ConfigError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| ConfigError::OverrideSyntax(s.to_string()))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(ConfigError::OverrideSyntax(s.to_string()));
    }
    Ok((k, v))
}

struct Bases {
    file: PathBuf,
    cwd: PathBuf,
    overridden: HashSet<String>,
}

impl Bases {
    fn resolve(&self, key: &str, path: &mut PathBuf) {
        if path.is_absolute() {
            return;
        }
        let base = if self.overridden.contains(key) { &self.cwd } else { &self.file };
        *path = base.join(&*path);
    }

    fn resolve_opt(&self, key: &str, path: &mut Option<PathBuf>) {
        if let Some(p) = path {
            self.resolve(key, p);
        }
    }
}

impl RunConfig {
    /// Loads, overrides, resolves paths and validates.
    pub fn load(path: Option<&Path>, overrides: &[String], out: Option<&Path>) -> Result<Self, ConfigError> {
        let (mut table, file_dir) = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.to_path_buf(),
                    source,
                })?;
                let table: toml::Table = toml::from_str(&text).map_err(|source| ConfigError::Parse {
                    path: p.to_path_buf(),
                    source,
                })?;
                let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (table, dir)
            }
            None => (toml::Table::new(), PathBuf::new()),
        };
        let mut overridden = HashSet::new();
        for o in overrides {
            let (k, v) = split_override(o)?;
            apply_override(&mut table, k, v)?;
            overridden.insert(k.to_string());
        }
        let mut config: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Schema(e.message().to_string()))?;

        let bases = Bases {
            file: file_dir,
            cwd: PathBuf::new(),
            overridden,
        };
        bases.resolve_opt("corpus.records", &mut config.corpus.records);
        bases.resolve_opt("corpus.source", &mut config.corpus.source);
        bases.resolve_opt("corpus.target", &mut config.corpus.target);
        bases.resolve_opt("corpus.exemplar_pool", &mut config.corpus.exemplar_pool);
        bases.resolve_opt("templates.system", &mut config.templates.system);
        bases.resolve_opt("templates.prompt", &mut config.templates.prompt);
        bases.resolve_opt("templates.context_entry", &mut config.templates.context_entry);
        bases.resolve_opt("templates.exemplar_entry", &mut config.templates.exemplar_entry);
        bases.resolve_opt("backend.script", &mut config.backend.script);
        bases.resolve_opt("backend.table", &mut config.backend.table);
        bases.resolve("output_dir", &mut config.output_dir);
        if let Some(out) = out {
            config.output_dir = out.to_path_buf();
        }

        config.check_paths()?;
        config.load_templates()?;
        config.validate()?;
        Ok(config)
    }

    fn input_paths(&self) -> Vec<(&'static str, &Path)> {
        let c = &self.corpus;
        let t = &self.templates;
        let b = &self.backend;
        [
            ("corpus.records", &c.records),
            ("corpus.source", &c.source),
            ("corpus.target", &c.target),
            ("corpus.exemplar_pool", &c.exemplar_pool),
            ("templates.system", &t.system),
            ("templates.prompt", &t.prompt),
            ("templates.context_entry", &t.context_entry),
            ("templates.exemplar_entry", &t.exemplar_entry),
            ("backend.script", &b.script),
            ("backend.table", &b.table),
        ]
        .into_iter()
        .filter_map(|(k, p)| p.as_deref().map(|p| (k, p)))
        .collect()
    }

    fn check_paths(&self) -> Result<(), ConfigError> {
        for (key, path) in self.input_paths() {
            if !path.exists() {
                return Err(ConfigError::MissingPath {
                    key,
                    path: path.to_path_buf(),
                });
            }
        }
        Ok(())
    }

    fn load_templates(&mut self) -> Result<(), ConfigError> {
        let files = self.templates.clone();
        let template = &mut self.decoding.template;
        let slots = [
            (files.system, &mut template.system),
            (files.prompt, &mut template.prompt),
            (files.context_entry, &mut template.context_entry),
            (files.exemplar_entry, &mut template.exemplar_entry),
        ];
        for (path, slot) in slots {
            if let Some(path) = path {
                let text = fs::read_to_string(&path).map_err(|source| ConfigError::Read { path, source })?;
                *slot = text;
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        self.decoding
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.stage.stage1_budget == 0 || self.stage.stage2_budget == 0 {
            return invalid("stage budgets must be >= 1");
        }
        if self.backend.parallelism == 0 {
            return invalid("backend.parallelism must be >= 1");
        }
        if self.metrics.max_order == 0 {
            return invalid("metrics.max_order must be >= 1");
        }
        if let Some(rps) = self.backend.http.rate_limit_rps {
            if rps.is_nan() || rps <= 0.0 {
                return invalid("backend.http.rate_limit_rps must be > 0");
            }
        }
        if self.backend.http.timeout_secs == 0 {
            return invalid("backend.http.timeout_secs must be >= 1");
        }
        if !(0.0..=2.0).contains(&self.backend.http.temperature) {
            return invalid("backend.http.temperature must be in [0, 2]");
        }
        if self.corpus.records.is_none() && (self.corpus.source.is_some() != self.corpus.target.is_some()) {
            return invalid("corpus.source and corpus.target must be given together");
        }
        match self.backend.kind {
            BackendKind::Scripted if self.backend.script.is_none() => {
                return invalid("backend.kind = \"scripted\" needs backend.script")
            }
            BackendKind::Table if self.backend.table.is_none() => {
                return invalid("backend.kind = \"table\" needs backend.table")
            }
            _ => {}
        }
        if self.decoding.exemplar_source == ExemplarSource::External
            && self.decoding.exemplar_count > 0
            && self.corpus.exemplar_pool.is_none()
        {
            return invalid("decoding.exemplar_source = \"external\" needs corpus.exemplar_pool");
        }
        Ok(())
    }
}
