//! The full free-text knowledge graph.
//!
//! Every cataloged entity becomes a node; an edge between two entities
//! carries the corpus sentences in which they co-occur. Sentences are
//! collected from three sources: either endpoint's own page mentioning the
//! other endpoint, and any sentence anywhere mentioning both. The page
//! entity counts as implicitly mentioned by every sentence of its page.

mod store;

pub use store::{load_graph, save_graph, write_edges_jsonl, write_nodes_jsonl, GraphError};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Mention};

/// Where an evidence sentence was collected, relative to the edge's
/// canonical endpoint order (`entity_a < entity_b`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// On the page of the canonically-first endpoint.
    #[serde(rename = "in-A-page")]
    InAPage,
    /// On the page of the canonically-second endpoint.
    #[serde(rename = "in-B-page")]
    InBPage,
    /// Anywhere else: the sentence mentions both endpoints explicitly.
    #[serde(rename = "external")]
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSentence {
    pub text: String,
    #[serde(rename = "doc")]
    pub source_doc: String,
    #[serde(rename = "prov")]
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub entity_id: String,
    pub gloss: String,
}

/// Undirected edge with canonical endpoint order and de-duplicated
/// evidence sentences in corpus order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    #[serde(rename = "a")]
    pub entity_a: String,
    #[serde(rename = "b")]
    pub entity_b: String,
    pub sentences: Vec<EvidenceSentence>,
}

impl GraphEdge {
    pub fn other_endpoint(&self, entity_id: &str) -> &str {
        if self.entity_a == entity_id {
            &self.entity_b
        } else {
            &self.entity_a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FreeTextGraph {
    nodes: Vec<GraphNode>,
    node_index: HashMap<String, usize>,
    edges: Vec<GraphEdge>,
    /// entity_id -> indices into `edges`, ascending neighbor order.
    adjacency: HashMap<String, Vec<usize>>,
}

impl FreeTextGraph {
    pub fn new(mut nodes: Vec<GraphNode>, mut edges: Vec<GraphEdge>) -> FreeTextGraph {
        nodes.sort_by(|x, y| x.entity_id.cmp(&y.entity_id));
        edges.sort_by(|x, y| {
            x.entity_a
                .cmp(&y.entity_a)
                .then_with(|| x.entity_b.cmp(&y.entity_b))
        });
        let node_index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.entity_id.clone(), i))
            .collect();
        let mut adjacency: HashMap<String, Vec<usize>> = HashMap::new();
        for (ei, e) in edges.iter().enumerate() {
            adjacency.entry(e.entity_a.clone()).or_default().push(ei);
            adjacency.entry(e.entity_b.clone()).or_default().push(ei);
        }
        let by_other = |entity: &str, edges: &[GraphEdge], ids: &mut Vec<usize>| {
            ids.sort_by(|&i, &j| {
                edges[i]
                    .other_endpoint(entity)
                    .cmp(edges[j].other_endpoint(entity))
            });
        };
        for (entity, ids) in adjacency.iter_mut() {
            by_other(entity, &edges, ids);
        }
        FreeTextGraph {
            nodes,
            node_index,
            edges,
            adjacency,
        }
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn node(&self, entity_id: &str) -> Option<&GraphNode> {
        self.node_index.get(entity_id).map(|&i| &self.nodes[i])
    }

    /// Incident edges in ascending neighbor order.
    pub fn neighbors(&self, entity_id: &str) -> Result<Vec<(&str, &GraphEdge)>, GraphError> {
        if !self.node_index.contains_key(entity_id) {
            return Err(GraphError::UnknownEntity(entity_id.to_string()));
        }
        Ok(self
            .adjacency
            .get(entity_id)
            .map(|ids| {
                ids.iter()
                    .map(|&i| (self.edges[i].other_endpoint(entity_id), &self.edges[i]))
                    .collect()
            })
            .unwrap_or_default())
    }

    /// The edge between two entities, if any (order-insensitive).
    pub fn edge_between(&self, x: &str, y: &str) -> Option<&GraphEdge> {
        let (a, b) = canonical_pair(x, y);
        self.adjacency.get(a).and_then(|ids| {
            ids.iter()
                .map(|&i| &self.edges[i])
                .find(|e| e.entity_a == a && e.entity_b == b)
        })
    }
}

fn canonical_pair<'a>(x: &'a str, y: &'a str) -> (&'a str, &'a str) {
    if x <= y {
        (x, y)
    } else {
        (y, x)
    }
}

/// Normalization used to de-duplicate sentences across the three
/// collection rules: lowercase with collapsed whitespace.
pub fn normalize_sentence(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

struct EdgeAccum {
    sentences: Vec<EvidenceSentence>,
    by_norm: HashMap<String, usize>,
}

impl EdgeAccum {
    fn add(&mut self, sentence: EvidenceSentence) {
        let norm = normalize_sentence(&sentence.text);
        match self.by_norm.get(&norm) {
            Some(&i) => {
                // A page-sourced copy outranks an external duplicate.
                if self.sentences[i].provenance == Provenance::External
                    && sentence.provenance != Provenance::External
                {
                    self.sentences[i] = sentence;
                }
            }
            None => {
                self.by_norm.insert(norm, self.sentences.len());
                self.sentences.push(sentence);
            }
        }
    }
}

/// Builds the full graph by linking every document at `link_threshold` and
/// collecting co-occurrence sentences. No cap is applied to the sentences
/// of an edge; capping happens at grounding time.
pub fn build_graph(corpus: &Corpus, link_threshold: f64) -> FreeTextGraph {
    let mentions_by_doc = corpus.link_all_documents(link_threshold);
    let mut accum: HashMap<(String, String), EdgeAccum> = HashMap::new();

    for (doc, mentions) in corpus.documents().iter().zip(&mentions_by_doc) {
        let mut by_sentence: HashMap<usize, Vec<&Mention>> = HashMap::new();
        for m in mentions {
            by_sentence.entry(m.sentence_index).or_default().push(m);
        }
        let mut sentence_ids: Vec<usize> = by_sentence.keys().copied().collect();
        sentence_ids.sort_unstable();

        for si in sentence_ids {
            let mut mentioned: Vec<&str> = by_sentence[&si]
                .iter()
                .map(|m| m.entity_id.as_str())
                .collect();
            mentioned.sort_unstable();
            mentioned.dedup();
            let text = doc.sentence_text(si);

            // Rules (1)/(2): a page sentence mentioning another entity joins
            // the page entity to it.
            if let Some(page_entity) = doc.entity_id.as_deref() {
                for &other in &mentioned {
                    if other == page_entity {
                        continue;
                    }
                    let (a, b) = canonical_pair(page_entity, other);
                    let provenance = if a == page_entity {
                        Provenance::InAPage
                    } else {
                        Provenance::InBPage
                    };
                    edge_accum(&mut accum, a, b).add(EvidenceSentence {
                        text: text.to_string(),
                        source_doc: doc.doc_id.clone(),
                        provenance,
                    });
                }
            }

            // Rule (3): any sentence mentioning two entities joins them.
            for i in 0..mentioned.len() {
                for j in i + 1..mentioned.len() {
                    let (a, b) = (mentioned[i], mentioned[j]);
                    edge_accum(&mut accum, a, b).add(EvidenceSentence {
                        text: text.to_string(),
                        source_doc: doc.doc_id.clone(),
                        provenance: Provenance::External,
                    });
                }
            }
        }
    }

    let nodes = corpus
        .entities()
        .iter()
        .map(|e| GraphNode {
            entity_id: e.entity_id.clone(),
            gloss: e.gloss.clone(),
        })
        .collect();
    let edges = accum
        .into_iter()
        .map(|((a, b), acc)| GraphEdge {
            entity_a: a,
            entity_b: b,
            sentences: acc.sentences,
        })
        .collect();
    FreeTextGraph::new(nodes, edges)
}

fn edge_accum<'m>(
    accum: &'m mut HashMap<(String, String), EdgeAccum>,
    a: &str,
    b: &str,
) -> &'m mut EdgeAccum {
    accum
        .entry((a.to_string(), b.to_string()))
        .or_insert_with(|| EdgeAccum {
            sentences: Vec::new(),
            by_norm: HashMap::new(),
        })
}
