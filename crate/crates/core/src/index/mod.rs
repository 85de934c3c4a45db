//! Tokenization, tf-idf weighting, and inverted-index retrieval.
//!
//! This is the in-repo retrieval backend: it ranks documents for candidate
//! generation and scores edge sentences against questions. Weighting is
//! pinned for reproducibility: `tf = 1 + ln(count)` and
//! `idf = ln(1 + N / df)`.

use std::collections::HashMap;

use thiserror::Error;

const STOPWORDS: &str = include_str!("../../data/stopwords.txt");

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("cannot build an index over an empty unit list")]
    EmptyUnitList,
}

/// Lowercases, splits on non-alphanumerics, and drops short tokens and
/// stopwords.
pub fn tokenize(text: &str) -> Vec<String> {
    let stop = stopword_set();
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.len() >= 2)
        .map(str::to_lowercase)
        .filter(|t| !stop.contains(t.as_str()))
        .collect()
}

fn stopword_set() -> &'static std::collections::HashSet<&'static str> {
    static SET: std::sync::OnceLock<std::collections::HashSet<&'static str>> =
        std::sync::OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

/// Term table with document frequencies.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    term_ids: HashMap<String, u32>,
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    n_units: usize,
}

impl Vocabulary {
    pub fn term_id(&self, term: &str) -> Option<u32> {
        self.term_ids.get(term).copied()
    }

    pub fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    pub fn doc_freq(&self, id: u32) -> u32 {
        self.doc_freq[id as usize]
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn idf(&self, id: u32) -> f64 {
        (1.0 + self.n_units as f64 / self.doc_freq[id as usize] as f64).ln()
    }
}

/// Sorted `(term_id, weight)` pairs; ids strictly increasing, weights
/// finite and non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    fn from_sorted(entries: Vec<(u32, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(_, w)| w.is_finite() && w >= 0.0));
        SparseVector { entries }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < self.entries.len() && j < other.entries.len() {
            match self.entries[i].0.cmp(&other.entries[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.entries[i].1 * other.entries[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

/// Inverted index over a set of text units.
#[derive(Debug, Clone)]
pub struct Index {
    vocab: Vocabulary,
    unit_ids: Vec<String>,
    norms: Vec<f64>,
    /// term_id -> (unit index, unit weight for that term).
    postings: Vec<Vec<(u32, f64)>>,
}

impl Index {
    /// Builds an inverted index over `(unit_id, text)` pairs.
    pub fn build<S: AsRef<str>, T: AsRef<str>>(units: &[(S, T)]) -> Result<Index, IndexError> {
        if units.is_empty() {
            return Err(IndexError::EmptyUnitList);
        }
        let tokenized: Vec<Vec<String>> =
            units.iter().map(|(_, text)| tokenize(text.as_ref())).collect();

        let mut term_ids: HashMap<String, u32> = HashMap::new();
        let mut terms: Vec<String> = Vec::new();
        let mut doc_freq: Vec<u32> = Vec::new();
        for tokens in &tokenized {
            let mut seen: Vec<u32> = Vec::new();
            for t in tokens {
                let id = *term_ids.entry(t.clone()).or_insert_with(|| {
                    terms.push(t.clone());
                    doc_freq.push(0);
                    (terms.len() - 1) as u32
                });
                if !seen.contains(&id) {
                    seen.push(id);
                    doc_freq[id as usize] += 1;
                }
            }
        }
        let vocab = Vocabulary {
            term_ids,
            terms,
            doc_freq,
            n_units: units.len(),
        };

        let mut postings: Vec<Vec<(u32, f64)>> = vec![Vec::new(); vocab.len()];
        let mut norms = Vec::with_capacity(units.len());
        for (ui, tokens) in tokenized.iter().enumerate() {
            let vector = weigh_tokens(&vocab, tokens);
            norms.push(vector.norm());
            for &(tid, w) in vector.entries() {
                postings[tid as usize].push((ui as u32, w));
            }
        }
        Ok(Index {
            vocab,
            unit_ids: units.iter().map(|(id, _)| id.as_ref().to_string()).collect(),
            norms,
            postings,
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn unit_ids(&self) -> &[String] {
        &self.unit_ids
    }

    /// tf-idf vector of an arbitrary text in this index's weight space.
    /// Tokens outside the vocabulary are dropped.
    pub fn vectorize(&self, text: &str) -> SparseVector {
        weigh_tokens(&self.vocab, &tokenize(text))
    }

    /// Cosine similarity between two texts under this index's weights.
    /// Returns 0 when either side has no in-vocabulary tokens.
    pub fn tfidf_cosine(&self, a: &str, b: &str) -> f64 {
        let va = self.vectorize(a);
        let vb = self.vectorize(b);
        cosine(&va, &vb)
    }

    /// Top-k units by cosine to the query; ties broken by ascending unit id.
    /// Units scoring zero are never returned, so fewer than `k` results is
    /// possible.
    pub fn retrieve(&self, query: &str, k: usize) -> Vec<(String, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let qv = self.vectorize(query);
        let qnorm = qv.norm();
        if qnorm == 0.0 {
            return Vec::new();
        }
        let mut scores: HashMap<u32, f64> = HashMap::new();
        for &(tid, qw) in qv.entries() {
            for &(ui, dw) in &self.postings[tid as usize] {
                *scores.entry(ui).or_insert(0.0) += qw * dw;
            }
        }
        let mut ranked: Vec<(String, f64)> = scores
            .into_iter()
            .filter(|&(_, dot)| dot > 0.0)
            .map(|(ui, dot)| {
                let score = dot / (qnorm * self.norms[ui as usize]);
                (self.unit_ids[ui as usize].clone(), score)
            })
            .collect();
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        ranked.truncate(k);
        ranked
    }
}

fn weigh_tokens(vocab: &Vocabulary, tokens: &[String]) -> SparseVector {
    let mut counts: HashMap<u32, u32> = HashMap::new();
    for t in tokens {
        if let Some(id) = vocab.term_id(t) {
            *counts.entry(id).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(u32, f64)> = counts
        .into_iter()
        .map(|(id, c)| (id, (1.0 + (c as f64).ln()) * vocab.idf(id)))
        .collect();
    entries.sort_by_key(|&(id, _)| id);
    SparseVector::from_sorted(entries)
}

/// Cosine of two sparse vectors; 0 by convention when either is empty.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (a.dot(b) / (na * nb)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_index() -> Index {
        Index::build(&[
            ("d1", "vermeer painted delft"),
            ("d2", "delft dutch city"),
            ("d3", "amsterdam dutch capital"),
        ])
        .unwrap()
    }

    /// Brute-force tf-idf cosine over dense vectors, written independently
    /// of the index internals.
    fn dense_cosine(corpus: &[&str], a: &str, b: &str) -> f64 {
        let n = corpus.len() as f64;
        let mut terms: Vec<String> = corpus
            .iter()
            .flat_map(|t| tokenize(t))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        terms.sort();
        let df = |term: &str| {
            corpus
                .iter()
                .filter(|t| tokenize(t).contains(&term.to_string()))
                .count() as f64
        };
        let weigh = |text: &str| -> Vec<f64> {
            let toks = tokenize(text);
            terms
                .iter()
                .map(|term| {
                    let c = toks.iter().filter(|t| *t == term).count() as f64;
                    if c == 0.0 {
                        0.0
                    } else {
                        (1.0 + c.ln()) * (1.0 + n / df(term)).ln()
                    }
                })
                .collect()
        };
        let (va, vb) = (weigh(a), weigh(b));
        let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
        let na: f64 = va.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = vb.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    }

    #[test]
    fn self_similarity_is_one() {
        let idx = toy_index();
        assert!((idx.tfidf_cosine("vermeer painted delft", "vermeer painted delft") - 1.0).abs() < 1e-12);
        let single = Index::build(&[("only", "a lone document about delft")]).unwrap();
        let hits = single.retrieve("lone document about delft", 5);
        assert_eq!(hits[0].0, "only");
        assert!((hits[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn term_in_all_docs_has_lowest_idf() {
        let idx = Index::build(&[("a", "delft city"), ("b", "delft port"), ("c", "delft kiln")])
            .unwrap();
        let vocab = idx.vocabulary();
        let common = vocab.term_id("delft").unwrap();
        for id in 0..vocab.len() as u32 {
            assert!(vocab.idf(common) <= vocab.idf(id));
        }
    }

    #[test]
    fn pairwise_cosines_match_dense_oracle() {
        let corpus = ["vermeer painted delft", "delft dutch city", "amsterdam dutch capital"];
        let idx = toy_index();
        for a in &corpus {
            for b in &corpus {
                let got = idx.tfidf_cosine(a, b);
                let want = dense_cosine(&corpus, a, b);
                assert!(
                    (got - want).abs() < 1e-9,
                    "cosine({a:?}, {b:?}) = {got}, oracle {want}"
                );
            }
        }
    }

    #[test]
    fn disjoint_texts_score_zero() {
        let idx = toy_index();
        assert_eq!(idx.tfidf_cosine("vermeer painted", "amsterdam capital"), 0.0);
        assert_eq!(idx.tfidf_cosine("", ""), 0.0);
    }

    #[test]
    fn toy_query_ranking() {
        let idx = toy_index();
        let hits = idx.retrieve("dutch city", 10);
        let ids: Vec<&str> = hits.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, vec!["d2", "d3"]);
        // d1 shares no query tokens, so it is absent rather than zero-scored.
        assert!(hits.iter().all(|(id, _)| id != "d1"));
    }

    #[test]
    fn k_zero_and_k_exhaustion() {
        let idx = toy_index();
        assert!(idx.retrieve("dutch", 0).is_empty());
        let all = idx.retrieve("dutch", 100);
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn retrieval_matches_exhaustive_sort_oracle() {
        let idx = toy_index();
        let docs = ["vermeer painted delft", "delft dutch city", "amsterdam dutch capital"];
        let ids = ["d1", "d2", "d3"];
        for query in ["dutch city", "vermeer", "delft", "nothing known"] {
            let mut oracle: Vec<(String, f64)> = ids
                .iter()
                .zip(&docs)
                .map(|(id, d)| (id.to_string(), dense_cosine(&docs, query, d)))
                .filter(|&(_, s)| s > 0.0)
                .collect();
            oracle.sort_by(|a, b| {
                b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0))
            });
            let got = idx.retrieve(query, 3);
            assert_eq!(
                got.iter().map(|(id, _)| id.clone()).collect::<Vec<_>>(),
                oracle.iter().map(|(id, _)| id.clone()).collect::<Vec<_>>(),
                "query {query:?}"
            );
            for ((_, gs), (_, os)) in got.iter().zip(&oracle) {
                assert!((gs - os).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn empty_unit_list_is_an_error() {
        let units: Vec<(&str, &str)> = Vec::new();
        assert!(Index::build(&units).is_err());
    }
}
