//! Script-aware text helpers shared by token counting and retrieval.
//!
//! Space-delimited scripts are split on whitespace. Unsegmented CJK text has
//! no word boundaries, so every CJK character counts as its own token.

/// True for characters of scripts written without spaces between words
/// (Han, kana, Hangul syllables) and for the CJK punctuation blocks.
pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3000..=0x303F   // CJK symbols and punctuation
        | 0x3040..=0x30FF // hiragana, katakana
        | 0x3100..=0x312F // bopomofo
        | 0x3400..=0x4DBF // extension A
        | 0x4E00..=0x9FFF // unified ideographs
        | 0xAC00..=0xD7AF // hangul syllables
        | 0xF900..=0xFAFF // compatibility ideographs
        | 0xFF00..=0xFFEF // halfwidth and fullwidth forms
        | 0x20000..=0x2FA1F)
}

/// Splits `text` into tokens: maximal whitespace-free runs of non-CJK
/// characters, and single CJK characters.
pub fn script_tokens(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() || is_cjk(c) {
            if let Some(s) = start.take() {
                out.push(&text[s..i]);
            }
            if is_cjk(c) {
                out.push(&text[i..i + c.len_utf8()]);
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(&text[s..]);
    }
    out
}

/// Terms used for retrieval: script tokens, lowercased.
pub fn terms(text: &str) -> Vec<String> {
    script_tokens(text).into_iter().map(str::to_lowercase).collect()
}

/// Whether the non-space characters of `text` are predominantly CJK.
pub fn is_mostly_cjk(text: &str) -> bool {
    let (mut cjk, mut other) = (0usize, 0usize);
    for c in text.chars().filter(|c| !c.is_whitespace()) {
        if is_cjk(c) {
            cjk += 1;
        } else {
            other += 1;
        }
    }
    cjk > other
}

/// Strips trailing `\n` / `\r` characters only.
pub fn trim_line_terminators(s: &str) -> &str {
    s.trim_end_matches(['\n', '\r'])
}
