//! Document-level literary machine translation toolkit.
//!
//! - [`corpus`]: bilingual document corpora, loading and validation
//! - [`stage_data`]: paragraph, interlinear and instruction training data
//! - [`retrieval`]: tf-idf / keyword style-exemplar search
//! - [`decoder`]: incremental, history-aware document translation
//! - [`backend`]: translation engines (mocks and a chat-completions client)
//! - [`metrics`]: sentence- and document-level BLEU

pub mod backend;
pub mod corpus;
pub mod decoder;
pub mod jsonl;
pub mod metrics;
pub mod retrieval;
pub mod stage_data;
pub mod text;
