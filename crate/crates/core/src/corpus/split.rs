//! Rule-based sentence splitting.
//!
//! Deterministic and corpus-independent: terminators (`.`, `!`, `?`) end a
//! sentence when followed by whitespace and a non-lowercase continuation,
//! unless the preceding token is on the shipped abbreviation list.

use std::collections::HashSet;
use std::ops::Range;
use std::sync::OnceLock;

const ABBREVIATIONS: &str = include_str!("../../data/abbreviations.txt");

fn abbreviation_set() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        ABBREVIATIONS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

/// A sentence slice of the original text: byte span plus owned text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceSpan {
    pub text: String,
    pub range: Range<usize>,
}

/// Splits `text` into sentences with byte spans into the original text.
///
/// Spans are ordered, non-overlapping, and cover every non-whitespace byte.
/// Empty or all-whitespace input yields an empty list.
pub fn split_sentences(text: &str) -> Vec<SentenceSpan> {
    let bytes = text.as_bytes();
    let mut sentences = Vec::new();
    let mut start: Option<usize> = None;

    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if start.is_none() {
            if c.is_whitespace() {
                continue;
            }
            start = Some(i);
        }
        if c != '.' && c != '!' && c != '?' {
            continue;
        }
        // Consume trailing closers so the span includes `)."` style endings.
        let mut end = i + c.len_utf8();
        while let Some(&(j, cj)) = iter.peek() {
            if matches!(cj, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}') {
                end = j + cj.len_utf8();
                iter.next();
            } else {
                break;
            }
        }
        if !is_boundary(text, bytes, c, i, end) {
            continue;
        }
        let s = start.take().expect("sentence start set");
        sentences.push(SentenceSpan {
            text: text[s..end].to_string(),
            range: s..end,
        });
    }
    if let Some(s) = start {
        let end = text.trim_end().len();
        if end > s {
            sentences.push(SentenceSpan {
                text: text[s..end].to_string(),
                range: s..end,
            });
        }
    }
    sentences
}

/// Decides whether the terminator at `term_idx` (span ending at `end`) closes
/// a sentence.
fn is_boundary(text: &str, bytes: &[u8], terminator: char, term_idx: usize, end: usize) -> bool {
    // Must be followed by whitespace (or end of text).
    match text[end..].chars().next() {
        None => {}
        Some(next) if next.is_whitespace() => {
            // The continuation must not start lowercase; mid-sentence
            // abbreviations are typically followed by lowercase text.
            if let Some(follow) = text[end..].chars().find(|ch| !ch.is_whitespace()) {
                if follow.is_lowercase() {
                    return false;
                }
            }
        }
        Some(_) => return false,
    }
    if terminator != '.' {
        return true;
    }
    // Reject when the token before the period is a known abbreviation.
    let token = preceding_token(bytes, term_idx);
    if token.is_empty() {
        return false;
    }
    !abbreviation_set().contains(token.to_ascii_lowercase().as_str())
}

/// The run of alphanumeric bytes (periods allowed inside, as in `e.g`)
/// immediately before byte index `idx`.
fn preceding_token(bytes: &[u8], idx: usize) -> &str {
    let mut s = idx;
    while s > 0 {
        let b = bytes[s - 1];
        if b.is_ascii_alphanumeric() || (b == b'.' && s > 1 && bytes[s - 2].is_ascii_alphanumeric())
        {
            s -= 1;
        } else {
            break;
        }
    }
    std::str::from_utf8(&bytes[s..idx]).unwrap_or("")
}
