//! Segment tokenizers matching the mteval-v13a conventions used by WMT.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Tokenization {
    /// mteval-v13a: pad punctuation and symbols, keep `2,000` and `3.5` whole.
    #[default]
    #[serde(rename = "13a", alias = "intl-13a")]
    Mteval13a,
    /// One token per non-space character.
    #[serde(rename = "char", alias = "character")]
    Character,
}

struct Rules {
    symbols: Regex,
    punct_after_non_digit: Regex,
    punct_before_non_digit: Regex,
    dash_after_digit: Regex,
}

fn rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| Rules {
        // ASCII symbols { | } ~ [ \ ] ^ _ ` space ! " # $ % & ( ) * + : ; < = > ? @ /
        symbols: Regex::new(r"([\{-\~\[-\` -\&\(-\+\:-\@/])").expect("valid regex"),
        punct_after_non_digit: Regex::new(r"([^0-9])([\.,])").expect("valid regex"),
        punct_before_non_digit: Regex::new(r"([\.,])([^0-9])").expect("valid regex"),
        dash_after_digit: Regex::new(r"([0-9])(-)").expect("valid regex"),
    })
}

/// Whitespace as Python's `str.isspace` sees it, which also counts the
/// ASCII information separators U+001C..U+001F.
pub(crate) fn is_py_space(c: char) -> bool {
    c.is_whitespace() || ('\u{1c}'..='\u{1f}').contains(&c)
}

fn split_py(text: &str) -> Vec<String> {
    text.split(is_py_space)
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn tokenize_13a(line: &str) -> Vec<String> {
    let mut line = line
        .replace("<skipped>", "")
        .replace("-\n", "")
        .replace('\n', " ");
    if line.contains('&') {
        line = line
            .replace("&quot;", "\"")
            .replace("&amp;", "&")
            .replace("&lt;", "<")
            .replace("&gt;", ">");
    }
    let r = rules();
    let padded = format!(" {line} ");
    let s = r.symbols.replace_all(&padded, " ${1} ");
    let s = r.punct_after_non_digit.replace_all(&s, "${1} ${2} ");
    let s = r.punct_before_non_digit.replace_all(&s, " ${1} ${2}");
    let s = r.dash_after_digit.replace_all(&s, "${1} ${2} ");
    split_py(&s)
}

/// Tokenizes one segment. Trailing whitespace is dropped first, as the
/// reference scorer does.
pub fn tokenize(text: &str, mode: Tokenization) -> Vec<String> {
    let text = text.trim_end_matches(is_py_space);
    match mode {
        Tokenization::Mteval13a => tokenize_13a(text),
        Tokenization::Character => text
            .chars()
            .filter(|c| !is_py_space(*c))
            .map(String::from)
            .collect(),
    }
}
