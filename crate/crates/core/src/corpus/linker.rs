//! Dictionary alias matching.
//!
//! Stands in for an external entity-linking service: alias occurrences are
//! found by longest token match, and each match carries a confidence derived
//! from alias specificity, so callers can tune a link threshold.

use std::collections::HashMap;
use std::ops::Range;

use super::EntityRecord;

/// A word token with its byte span in the source text.
#[derive(Debug, Clone)]
pub struct WordToken<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

/// Splits text into alphanumeric runs, keeping byte offsets.
pub fn word_tokens(text: &str) -> Vec<WordToken<'_>> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            tokens.push(WordToken {
                text: &text[s..i],
                start: s,
                end: i,
            });
        }
    }
    if let Some(s) = start {
        tokens.push(WordToken {
            text: &text[s..],
            start: s,
            end: text.len(),
        });
    }
    tokens
}

/// Lowercased token sequence used as the alias lookup key.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    word_tokens(text)
        .iter()
        .map(|t| t.text.to_lowercase())
        .collect()
}

#[derive(Debug, Clone)]
struct AliasTarget {
    entity_id: String,
    /// Catalog lists an all-lowercase variant of this alias, so all-lowercase
    /// occurrences in text are accepted even for single-token aliases.
    lowercase_listed: bool,
}

#[derive(Debug, Clone)]
struct AliasEntry {
    targets: Vec<AliasTarget>,
    token_count: usize,
}

/// One alias occurrence in a text unit, before threshold filtering.
#[derive(Debug, Clone)]
pub struct AliasMatch {
    /// Byte span of the matched surface form.
    pub span: Range<usize>,
    /// Entities sharing the matched alias, ascending id order.
    pub entity_ids: Vec<String>,
    /// Alias specificity: tokens / (tokens + ambiguity degree), where the
    /// ambiguity degree is the number of other entities sharing the alias.
    pub confidence: f64,
}

/// Longest-match alias table over an entity catalog.
#[derive(Debug, Clone)]
pub struct AliasIndex {
    entries: HashMap<Vec<String>, AliasEntry>,
    max_len: usize,
}

impl AliasIndex {
    pub fn build(entities: &[EntityRecord]) -> Self {
        let mut entries: HashMap<Vec<String>, AliasEntry> = HashMap::new();
        let mut max_len = 0;
        for entity in entities {
            for alias in &entity.aliases {
                let key = normalize_tokens(alias);
                if key.is_empty() {
                    continue;
                }
                max_len = max_len.max(key.len());
                let lowercase_listed = alias.chars().all(|c| !c.is_uppercase());
                let token_count = key.len();
                let entry = entries.entry(key).or_insert_with(|| AliasEntry {
                    targets: Vec::new(),
                    token_count,
                });
                match entry
                    .targets
                    .iter_mut()
                    .find(|t| t.entity_id == entity.entity_id)
                {
                    Some(t) => t.lowercase_listed |= lowercase_listed,
                    None => entry.targets.push(AliasTarget {
                        entity_id: entity.entity_id.clone(),
                        lowercase_listed,
                    }),
                }
            }
        }
        for entry in entries.values_mut() {
            entry.targets.sort_by(|a, b| a.entity_id.cmp(&b.entity_id));
        }
        AliasIndex { entries, max_len }
    }

    /// Finds alias occurrences in `text` by greedy left-to-right longest
    /// match. Matching is case-insensitive, except that an all-lowercase
    /// single-token occurrence only matches entities that list a lowercase
    /// variant of the alias (this keeps "name" from linking to "Name").
    ///
    /// Threshold filtering happens later, so overlap resolution does not
    /// depend on the threshold and raising it can only remove matches.
    pub fn find_matches(&self, text: &str) -> Vec<AliasMatch> {
        let tokens = word_tokens(text);
        let lowered: Vec<String> = tokens.iter().map(|t| t.text.to_lowercase()).collect();
        let mut matches = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let mut advanced = false;
            let longest = self.max_len.min(tokens.len() - i);
            for len in (1..=longest).rev() {
                let key = &lowered[i..i + len];
                let Some(entry) = self.entries.get(key) else {
                    continue;
                };
                let surface_lowercase = tokens[i..i + len]
                    .iter()
                    .all(|t| t.text.chars().all(|c| !c.is_uppercase()));
                let entity_ids: Vec<String> = entry
                    .targets
                    .iter()
                    .filter(|t| len > 1 || !surface_lowercase || t.lowercase_listed)
                    .map(|t| t.entity_id.clone())
                    .collect();
                if entity_ids.is_empty() {
                    continue;
                }
                let ambiguity = (entry.targets.len() - 1) as f64;
                let confidence = entry.token_count as f64 / (entry.token_count as f64 + ambiguity);
                matches.push(AliasMatch {
                    span: tokens[i].start..tokens[i + len - 1].end,
                    entity_ids,
                    confidence,
                });
                i += len;
                advanced = true;
                break;
            }
            if !advanced {
                i += 1;
            }
        }
        matches
    }
}
