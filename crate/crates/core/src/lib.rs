//! Free-text knowledge graph question answering.
//!
//! The pipeline turns a document collection into an entity graph whose edges
//! carry raw corpus sentences, grounds each question into a bipartite
//! subgraph (question entities on one side, candidate answers on the other),
//! and selects the answer with a graph neural network that scores and
//! aggregates evidence edges.
//!
//! Modules follow the pipeline stages:
//!
//! * [`corpus`] — document/entity loading, sentence splitting, alias linking
//! * [`index`] — tf-idf weighting, inverted-index retrieval, cosine scoring
//! * [`graph`] — full free-text knowledge graph construction and persistence
//! * [`grounding`] — per-question bipartite subgraphs and pruning
//! * [`autodiff`] — dense tensors with reverse-mode differentiation
//! * [`model`] — the graph neural network, training, and inference
//! * [`eval`] — exact-match and recall metrics
//! * [`synth`] — synthetic benchmark generation with planted facts
//! * [`pipeline`] — configuration and end-to-end command bodies

pub mod autodiff;
pub mod corpus;
pub mod eval;
pub mod graph;
pub mod grounding;
pub mod index;
pub mod model;
pub mod pipeline;
pub mod synth;

pub use pipeline::PipelineConfig;
