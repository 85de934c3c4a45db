//! Corpus loading, sentence splitting, and dictionary entity linking.

mod linker;
mod split;

pub use linker::{normalize_tokens, word_tokens, AliasIndex, AliasMatch, WordToken};
pub use split::{split_sentences, SentenceSpan};

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed line: {message}")]
    MalformedLine {
        path: String,
        line: usize,
        message: String,
    },
    #[error("duplicate doc_id {0:?}")]
    DuplicateDocId(String),
    #[error("duplicate entity_id {0:?}")]
    DuplicateEntityId(String),
    #[error("duplicate question_id {0:?}")]
    DuplicateQuestionId(String),
    #[error("documents {first:?} and {second:?} both claim entity {entity_id:?}")]
    DuplicateEntityPage {
        entity_id: String,
        first: String,
        second: String,
    },
    #[error("document {doc_id:?} references unknown entity {entity_id:?}")]
    UnknownPageEntity { doc_id: String, entity_id: String },
    #[error("unknown entity {0:?}")]
    UnknownEntity(String),
}

/// A document with pre-split sentences.
#[derive(Debug, Clone)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    /// Entity this page describes, when the document is an entity page.
    pub entity_id: Option<String>,
    pub text: String,
    pub sentences: Vec<SentenceSpan>,
}

impl Document {
    pub fn sentence_text(&self, index: usize) -> &str {
        &self.sentences[index].text
    }
}

/// Catalog entry for one entity.
#[derive(Debug, Clone)]
pub struct EntityRecord {
    pub entity_id: String,
    pub canonical_title: String,
    /// First sentence of the entity's own page; empty when it has no page
    /// and the catalog supplies nothing.
    pub gloss: String,
    /// Surface forms for the dictionary linker; always contains the title.
    pub aliases: Vec<String>,
}

/// A linked entity occurrence in a document or question.
#[derive(Debug, Clone, PartialEq)]
pub struct Mention {
    pub entity_id: String,
    pub doc_id: String,
    pub sentence_index: usize,
    /// Byte span into the unit's original text; lies inside the sentence.
    pub char_span: Range<usize>,
    pub confidence: f64,
}

/// A question, optionally with its gold answer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Question {
    pub question_id: String,
    pub text: String,
    pub answer_entity_id: Option<String>,
}

#[derive(Deserialize)]
struct DocumentLine {
    doc_id: String,
    title: String,
    #[serde(default)]
    entity_id: Option<String>,
    text: String,
}

#[derive(Deserialize)]
struct EntityLine {
    entity_id: String,
    title: String,
    #[serde(default)]
    gloss: Option<String>,
    #[serde(default)]
    aliases: Vec<String>,
}

/// Immutable document collection plus entity catalog and alias table.
#[derive(Debug, Clone)]
pub struct Corpus {
    documents: Vec<Document>,
    doc_index: HashMap<String, usize>,
    entities: Vec<EntityRecord>,
    entity_index: HashMap<String, usize>,
    /// entity_id -> index of that entity's page in `documents`.
    page_index: HashMap<String, usize>,
    alias_index: AliasIndex,
}

impl Corpus {
    /// Loads documents and entities from the two JSONL files, splits
    /// sentences, and derives each paged entity's gloss from the first
    /// sentence of its page.
    pub fn load(documents_path: &Path, entities_path: &Path) -> Result<Corpus, CorpusError> {
        let doc_lines: Vec<DocumentLine> = read_jsonl(documents_path)?;
        let entity_lines: Vec<EntityLine> = read_jsonl(entities_path)?;

        let mut documents = Vec::with_capacity(doc_lines.len());
        let mut doc_index = HashMap::new();
        for line in doc_lines {
            if doc_index.contains_key(&line.doc_id) {
                return Err(CorpusError::DuplicateDocId(line.doc_id));
            }
            doc_index.insert(line.doc_id.clone(), documents.len());
            let sentences = split_sentences(&line.text);
            documents.push(Document {
                doc_id: line.doc_id,
                title: line.title,
                entity_id: line.entity_id,
                text: line.text,
                sentences,
            });
        }

        let mut entities = Vec::with_capacity(entity_lines.len());
        let mut entity_index = HashMap::new();
        for line in entity_lines {
            if entity_index.contains_key(&line.entity_id) {
                return Err(CorpusError::DuplicateEntityId(line.entity_id));
            }
            let mut aliases = line.aliases;
            if !aliases.iter().any(|a| a == &line.title) {
                aliases.push(line.title.clone());
            }
            entity_index.insert(line.entity_id.clone(), entities.len());
            entities.push(EntityRecord {
                entity_id: line.entity_id,
                canonical_title: line.title,
                gloss: line.gloss.unwrap_or_default(),
                aliases,
            });
        }

        let mut page_index: HashMap<String, usize> = HashMap::new();
        for (di, doc) in documents.iter().enumerate() {
            let Some(entity_id) = &doc.entity_id else {
                continue;
            };
            if !entity_index.contains_key(entity_id) {
                return Err(CorpusError::UnknownPageEntity {
                    doc_id: doc.doc_id.clone(),
                    entity_id: entity_id.clone(),
                });
            }
            if let Some(&prev) = page_index.get(entity_id) {
                return Err(CorpusError::DuplicateEntityPage {
                    entity_id: entity_id.clone(),
                    first: documents[prev].doc_id.clone(),
                    second: doc.doc_id.clone(),
                });
            }
            page_index.insert(entity_id.clone(), di);
        }

        // The gloss of a paged entity is always the first sentence of its
        // page, overriding whatever the catalog supplied.
        for entity in &mut entities {
            if let Some(&di) = page_index.get(&entity.entity_id) {
                entity.gloss = documents[di]
                    .sentences
                    .first()
                    .map(|s| s.text.clone())
                    .unwrap_or_default();
            }
        }

        let alias_index = AliasIndex::build(&entities);
        Ok(Corpus {
            documents,
            doc_index,
            entities,
            entity_index,
            page_index,
            alias_index,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn entities(&self) -> &[EntityRecord] {
        &self.entities
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.doc_index.get(doc_id).map(|&i| &self.documents[i])
    }

    pub fn entity(&self, entity_id: &str) -> Option<&EntityRecord> {
        self.entity_index.get(entity_id).map(|&i| &self.entities[i])
    }

    /// The entity's page document, if it has one.
    pub fn page_of(&self, entity_id: &str) -> Option<&Document> {
        self.page_index.get(entity_id).map(|&i| &self.documents[i])
    }

    pub fn gloss(&self, entity_id: &str) -> &str {
        self.entity(entity_id).map(|e| e.gloss.as_str()).unwrap_or("")
    }

    pub fn alias_index(&self) -> &AliasIndex {
        &self.alias_index
    }

    /// Links entity mentions in one document at the given confidence
    /// threshold. Spans are byte offsets into the document text.
    pub fn link_document(&self, doc: &Document, threshold: f64) -> Vec<Mention> {
        let mut mentions = Vec::new();
        for (si, sentence) in doc.sentences.iter().enumerate() {
            collect_mentions(
                &self.alias_index,
                &doc.doc_id,
                si,
                &sentence.text,
                sentence.range.start,
                threshold,
                &mut mentions,
            );
        }
        mentions
    }

    /// Links entity mentions in an ad-hoc text unit (a question); the given
    /// id is recorded as the mention's doc_id and spans index into `text`.
    pub fn link_text(&self, unit_id: &str, text: &str, threshold: f64) -> Vec<Mention> {
        let mut mentions = Vec::new();
        for (si, sentence) in split_sentences(text).iter().enumerate() {
            collect_mentions(
                &self.alias_index,
                unit_id,
                si,
                &sentence.text,
                sentence.range.start,
                threshold,
                &mut mentions,
            );
        }
        mentions
    }

    /// Links every document in parallel; results are keyed by document in
    /// corpus order, so output is deterministic for any thread count.
    pub fn link_all_documents(&self, threshold: f64) -> Vec<Vec<Mention>> {
        self.documents
            .par_iter()
            .map(|doc| self.link_document(doc, threshold))
            .collect()
    }
}

fn collect_mentions(
    alias_index: &AliasIndex,
    unit_id: &str,
    sentence_index: usize,
    sentence_text: &str,
    sentence_offset: usize,
    threshold: f64,
    out: &mut Vec<Mention>,
) {
    for m in alias_index.find_matches(sentence_text) {
        if m.confidence < threshold {
            continue;
        }
        for entity_id in &m.entity_ids {
            out.push(Mention {
                entity_id: entity_id.clone(),
                doc_id: unit_id.to_string(),
                sentence_index,
                char_span: (sentence_offset + m.span.start)..(sentence_offset + m.span.end),
                confidence: m.confidence,
            });
        }
    }
}

/// Loads questions.jsonl; `answer_entity_id` may be null for inference-only
/// sets.
pub fn load_questions(path: &Path) -> Result<Vec<Question>, CorpusError> {
    let questions: Vec<Question> = read_jsonl(path)?;
    let mut seen = HashMap::new();
    for q in &questions {
        if seen.insert(q.question_id.clone(), ()).is_some() {
            return Err(CorpusError::DuplicateQuestionId(q.question_id.clone()));
        }
    }
    Ok(questions)
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| CorpusError::MalformedLine {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}
