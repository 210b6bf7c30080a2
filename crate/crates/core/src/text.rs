//! Tokenization shared by the value index, the similarity model and the
//! keyword mapper.

use alloc::string::String;
use alloc::vec::Vec;

use crate::stem::porter_stem;

const STOP_WORDS: &[&str] = &[
    "a", "an", "and", "at", "by", "for", "from", "in", "of", "on", "or", "the", "to", "with",
];

pub fn is_stop_word(token: &str) -> bool {
    STOP_WORDS.contains(&token)
}

/// Split on non-alphanumerics and lowercase.
pub fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .collect()
}

/// Lowercased whitespace/punctuation separated tokens with stop words removed.
pub fn keyword_tokens(text: &str) -> Vec<String> {
    words(text).into_iter().filter(|w| !is_stop_word(w)).collect()
}

/// Tokens of a schema identifier such as `publication_keyword`.
pub fn name_tokens(identifier: &str) -> Vec<String> {
    words(identifier)
        .into_iter()
        .flat_map(|w| w.split('_').map(String::from).collect::<Vec<_>>())
        .filter(|w| !w.is_empty())
        .collect()
}

pub fn stems(tokens: &[String]) -> Vec<String> {
    tokens.iter().map(|t| porter_stem(t)).collect()
}

/// Splits a keyword into its first number (maximal digit run with an
/// optional fractional part) and the remaining text tokens.
pub fn split_number(keyword: &str) -> Option<(f64, Vec<String>)> {
    let bytes = keyword.as_bytes();
    let start = bytes.iter().position(|b| b.is_ascii_digit())?;
    let mut end = start;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    if end + 1 < bytes.len() && bytes[end] == b'.' && bytes[end + 1].is_ascii_digit() {
        end += 1;
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
    }
    let number: f64 = keyword[start..end].parse().ok()?;
    let mut rest = String::from(&keyword[..start]);
    rest.push(' ');
    rest.push_str(&keyword[end..]);
    let tokens = keyword_tokens(&rest)
        .into_iter()
        .filter(|t| !t.bytes().all(|b| b.is_ascii_digit()))
        .collect();
    Some((number, tokens))
}
