//! Few-shot concept learning over precomputed embeddings and unsupervised
//! hierarchy extraction.
//!
//! The pipeline has five stages:
//! 1. [`corpus`] loads an embedding table (CSV) and concept example sets
//!    (JSONL), and computes deterministic train/validation/test splits.
//! 2. [`cav`] learns one linear concept vector per concept with regularized
//!    logistic regression against sampled negatives, then filters concepts by
//!    held-out accuracy.
//! 3. [`simgraph`] turns the kept concept vectors into a calibrated
//!    concept-similarity matrix and the derived adjacency / baseline graphs.
//! 4. [`hierarchy`] orders concepts by betweenness centrality and greedily
//!    grows a rooted tree by most-similar attachment.
//! 5. [`eval`] scores graphs and trees: structure counts, cluster agreement,
//!    silhouette, and alignment against external similarity sources.
//!
//! [`synth`] generates planted-cluster corpora so the whole pipeline can be
//! verified end to end without any external data.

pub mod cav;
pub mod corpus;
pub mod eval;
pub mod hierarchy;
pub mod pipeline;
pub mod seeding;
pub mod simgraph;
pub mod synth;
