//! Prompt templates and the rendered per-sentence prompt.
//!
//! Training data (Stage 3) and inference both go through
//! [`PromptTemplate::assemble`], so the model sees the same layout in both.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("{template} template is missing the required placeholder {placeholder}")]
    MissingPlaceholder {
        template: &'static str,
        placeholder: &'static str,
    },
    #[error("exemplar ({doc_id}, {seg_index}) is not before the current sentence {current}")]
    FutureExemplar {
        doc_id: String,
        seg_index: usize,
        current: usize,
    },
}

/// Layout of a translation prompt.
///
/// `prompt` may use `{system}`, `{context}`, `{exemplars}` and `{source}`.
/// Context and exemplar blocks are a header followed by one rendered entry
/// per item (`{src}`, `{tgt}`), then a blank line; an empty block renders
/// as nothing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptTemplate {
    pub system: String,
    pub prompt: String,
    pub context_header: String,
    pub context_entry: String,
    pub exemplar_header: String,
    pub exemplar_entry: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            system: "You are a literary translator. Translate the Chinese source sentence into \
                     English. Keep names, tone and narrative voice consistent with the preceding \
                     translation and the style examples."
                .to_string(),
            prompt: "{system}\n\n{exemplars}{context}Source: {source}\nTranslation:".to_string(),
            context_header: "Preceding sentences:\n".to_string(),
            context_entry: "{src}\n=> {tgt}\n".to_string(),
            exemplar_header: "Style examples:\n".to_string(),
            exemplar_entry: "{src}\n=> {tgt}\n".to_string(),
        }
    }
}

/// Replaces `{name}` occurrences in one left-to-right pass. Substituted
/// values are never rescanned, so sentence text containing braces is safe.
pub fn substitute(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open + 1..];
        let hit = tail.find('}').and_then(|close| {
            let name = &tail[..close];
            vars.iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &tail[close + 1..];
            }
            None => {
                out.push('{');
                rest = tail;
            }
        }
    }
    out.push_str(rest);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextEntry {
    pub seg_index: usize,
    pub source: String,
    pub translation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExemplarEntry {
    pub exemplar_id: usize,
    pub doc_id: String,
    pub seg_index: usize,
    pub source: String,
    pub target: String,
}

/// Everything sent to a backend for one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub doc_id: String,
    pub seg_index: usize,
    pub system_text: String,
    pub context_block: Vec<ContextEntry>,
    pub exemplar_block: Vec<ExemplarEntry>,
    pub current_source: String,
    /// Full prompt including the system text.
    pub rendered: String,
    /// Prompt with the system text left out, for backends that carry it
    /// in a separate system message.
    pub user_text: String,
}

impl PromptSpec {
    /// Hex SHA-256 of the full rendered prompt.
    pub fn prompt_hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.rendered.as_bytes()))
    }
}

fn require(
    text: &str,
    template: &'static str,
    placeholder: &'static str,
) -> Result<(), PromptError> {
    if text.contains(placeholder) {
        Ok(())
    } else {
        Err(PromptError::MissingPlaceholder {
            template,
            placeholder,
        })
    }
}

impl PromptTemplate {
    /// Checks the placeholders needed for `history` context entries and
    /// `exemplars` style examples.
    pub fn check(&self, history: usize, exemplars: usize) -> Result<(), PromptError> {
        require(&self.prompt, "prompt", "{source}")?;
        if history > 0 {
            require(&self.prompt, "prompt", "{context}")?;
            require(&self.context_entry, "context entry", "{tgt}")?;
        }
        if exemplars > 0 {
            require(&self.prompt, "prompt", "{exemplars}")?;
            require(&self.exemplar_entry, "exemplar entry", "{src}")?;
            require(&self.exemplar_entry, "exemplar entry", "{tgt}")?;
        }
        Ok(())
    }

    fn block<'a>(
        &self,
        header: &str,
        entry: &str,
        items: impl ExactSizeIterator<Item = (&'a str, &'a str)>,
    ) -> String {
        if items.len() == 0 {
            return String::new();
        }
        let mut out = header.to_string();
        for (src, tgt) in items {
            out.push_str(&substitute(entry, &[("src", src), ("tgt", tgt)]));
        }
        out.push('\n');
        out
    }

    fn render_with(&self, system: &str, context: &str, exemplars: &str, source: &str) -> String {
        substitute(
            &self.prompt,
            &[
                ("system", system),
                ("context", context),
                ("exemplars", exemplars),
                ("source", source),
            ],
        )
    }

    /// Renders a prompt from already-selected context and exemplars.
    pub fn assemble(
        &self,
        doc_id: &str,
        seg_index: usize,
        context: Vec<ContextEntry>,
        exemplars: Vec<ExemplarEntry>,
        source: &str,
    ) -> Result<PromptSpec, PromptError> {
        self.check(context.len(), exemplars.len())?;
        if let Some(e) = exemplars
            .iter()
            .find(|e| e.doc_id == doc_id && e.seg_index >= seg_index)
        {
            return Err(PromptError::FutureExemplar {
                doc_id: e.doc_id.clone(),
                seg_index: e.seg_index,
                current: seg_index,
            });
        }
        let context_text = self.block(
            &self.context_header,
            &self.context_entry,
            context.iter().map(|c| (c.source.as_str(), c.translation.as_str())),
        );
        let exemplar_text = self.block(
            &self.exemplar_header,
            &self.exemplar_entry,
            exemplars.iter().map(|e| (e.source.as_str(), e.target.as_str())),
        );
        let rendered = self.render_with(&self.system, &context_text, &exemplar_text, source);
        let user_text = self
            .render_with("", &context_text, &exemplar_text, source)
            .trim_start_matches(['\n', '\r'])
            .to_string();
        Ok(PromptSpec {
            doc_id: doc_id.to_string(),
            seg_index,
            system_text: self.system.clone(),
            context_block: context,
            exemplar_block: exemplars,
            current_source: source.to_string(),
            rendered,
            user_text,
        })
    }

    /// The plain sentence-level prompt: no context, no exemplars.
    pub fn render_plain(&self, doc_id: &str, seg_index: usize, source: &str) -> Result<PromptSpec, PromptError> {
        self.assemble(doc_id, seg_index, Vec::new(), Vec::new(), source)
    }
}
