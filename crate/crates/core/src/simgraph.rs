//! Concept similarity matrix and derived graphs.
//!
//! `S[i][j]` is the mean, over all examples of concept `i`, of the calibrated
//! probability that concept `j`'s classifier assigns them. The adjacency `A`
//! thresholds `S` at 1/2; the remaining constructors are the sparsity and
//! randomness baselines used to judge graph structure.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cav::{concept_probability, ConceptVector};
use crate::corpus::{ConceptCatalog, EmbeddingStore};
use crate::seeding::{rng_for, sample_indices};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("concept {0:?} has no resolvable examples")]
    NoExamples(String),
    #[error("concept {0:?} missing from catalog")]
    UnknownConcept(String),
    #[error("requested {requested} edges but only {available} pairs exist")]
    TooManyEdges { requested: usize, available: usize },
}

/// K x K matrix of calibrated concept similarities in [0, 1].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub ids: Vec<String>,
    values: Vec<f64>, // row-major K*K
}

impl SimilarityMatrix {
    pub fn new(ids: Vec<String>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), ids.len() * ids.len());
        SimilarityMatrix { ids, values }
    }

    pub fn k(&self) -> usize {
        self.ids.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ids.len() + j]
    }

    /// Symmetrized view `(S[i][j] + S[j][i]) / 2`.
    pub fn symmetric(&self) -> SymmetricSimilarity {
        let k = self.k();
        let mut values = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                values[i * k + j] = 0.5 * (self.get(i, j) + self.get(j, i));
            }
        }
        SymmetricSimilarity {
            ids: self.ids.clone(),
            values,
        }
    }
}

/// Symmetric mean similarity, used for centrality ordering and attachment.
#[derive(Debug, Clone)]
pub struct SymmetricSimilarity {
    pub ids: Vec<String>,
    values: Vec<f64>,
}

impl SymmetricSimilarity {
    pub fn from_values(ids: Vec<String>, values: Vec<f64>) -> Self {
        let k = ids.len();
        assert_eq!(values.len(), k * k);
        for i in 0..k {
            for j in 0..i {
                assert!(
                    (values[i * k + j] - values[j * k + i]).abs() < 1e-12,
                    "matrix not symmetric at ({i},{j})"
                );
            }
        }
        SymmetricSimilarity { ids, values }
    }

    pub fn k(&self) -> usize {
        self.ids.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ids.len() + j]
    }

    /// Row sum excluding the diagonal; the centrality tie-break key.
    pub fn row_sum(&self, i: usize) -> f64 {
        (0..self.k()).filter(|&j| j != i).map(|j| self.get(i, j)).sum()
    }
}

/// Graph label, naming which construction produced the edge set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphLabel {
    #[serde(rename = "A")]
    Adjacency,
    #[serde(rename = "undirected-A")]
    UndirectedAdjacency,
    #[serde(rename = "sparse-A")]
    SparseA,
    #[serde(rename = "top1")]
    Top1,
    #[serde(rename = "random-sparse-A")]
    RandomSparseA,
    #[serde(rename = "random-top1")]
    RandomTop1,
}

/// Simple graph over concept indices; no self-loops. Undirected edges are
/// stored with `i < j`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConceptGraph {
    pub label: GraphLabel,
    pub directed: bool,
    pub ids: Vec<String>,
    pub edges: Vec<(usize, usize)>,
    pub seed: Option<u64>,
}

impl ConceptGraph {
    /// Neighbor lists of the undirected view.
    pub fn undirected_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.ids.len()];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }
}

/// Compute `S` from kept concept vectors: `S[i][j]` is the mean of
/// `sigma(<w_j, x> + b_j)` over all examples `x` of concept `i` (the whole
/// example list, not a split). Rows are computed in parallel; the per-row
/// reduction order is fixed, so the result is bitwise deterministic.
pub fn similarity_matrix(
    cavs: &[ConceptVector],
    catalog: &ConceptCatalog,
    store: &EmbeddingStore,
) -> Result<SimilarityMatrix, GraphError> {
    use rayon::prelude::*;
    let ids: Vec<String> = cavs.iter().map(|c| c.id.clone()).collect();
    let k = ids.len();
    let rows: Vec<Vec<f64>> = cavs
        .par_iter()
        .map(|row_concept| -> Result<Vec<f64>, GraphError> {
            let concept = catalog
                .get(&row_concept.id)
                .ok_or_else(|| GraphError::UnknownConcept(row_concept.id.clone()))?;
            let examples: Vec<&[f64]> = concept
                .examples
                .iter()
                .filter_map(|id| store.get(id))
                .collect();
            if examples.is_empty() {
                return Err(GraphError::NoExamples(row_concept.id.clone()));
            }
            let inv_n = 1.0 / examples.len() as f64;
            let mut row = vec![0.0; k];
            for (j, cav) in cavs.iter().enumerate() {
                let mut acc = 0.0;
                for x in &examples {
                    acc += concept_probability(cav, x);
                }
                row[j] = acc * inv_n;
            }
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    let mut values = Vec::with_capacity(k * k);
    for row in rows {
        values.extend(row);
    }
    Ok(SimilarityMatrix::new(ids, values))
}

/// Directed adjacency: edge `i -> j` iff `i != j` and `S[i][j] >= 1/2`.
pub fn adjacency(s: &SimilarityMatrix) -> ConceptGraph {
    let k = s.k();
    let mut edges = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if i != j && s.get(i, j) >= 0.5 {
                edges.push((i, j));
            }
        }
    }
    ConceptGraph {
        label: GraphLabel::Adjacency,
        directed: true,
        ids: s.ids.clone(),
        edges,
        seed: None,
    }
}

/// Undirected adjacency by the OR rule: `{i,j}` iff either direction clears
/// the 1/2 threshold.
pub fn undirected_adjacency(s: &SimilarityMatrix) -> ConceptGraph {
    let k = s.k();
    let mut edges = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            if s.get(i, j).max(s.get(j, i)) >= 0.5 {
                edges.push((i, j));
            }
        }
    }
    ConceptGraph {
        label: GraphLabel::UndirectedAdjacency,
        directed: false,
        ids: s.ids.clone(),
        edges,
        seed: None,
    }
}

/// Keep the `target_edges` pairs with largest symmetric similarity; ties at
/// the cutoff break by lexicographic pair order.
pub fn sparse_graph(
    sym: &SymmetricSimilarity,
    target_edges: usize,
) -> Result<ConceptGraph, GraphError> {
    let k = sym.k();
    let available = k * (k.saturating_sub(1)) / 2;
    if target_edges > available {
        return Err(GraphError::TooManyEdges {
            requested: target_edges,
            available,
        });
    }
    let mut pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| ((i + 1)..k).map(move |j| (i, j)))
        .collect();
    pairs.sort_by(|&(ai, aj), &(bi, bj)| {
        sym.get(bi, bj)
            .partial_cmp(&sym.get(ai, aj))
            .expect("similarities are finite")
            .then((ai, aj).cmp(&(bi, bj)))
    });
    let mut edges: Vec<(usize, usize)> = pairs.into_iter().take(target_edges).collect();
    edges.sort_unstable();
    Ok(ConceptGraph {
        label: GraphLabel::SparseA,
        directed: false,
        ids: sym.ids.clone(),
        edges,
        seed: None,
    })
}

/// One directed edge per node to its most symmetric-similar neighbour; ties
/// go to the smallest index.
pub fn top1_graph(sym: &SymmetricSimilarity) -> ConceptGraph {
    let k = sym.k();
    let mut edges = Vec::with_capacity(k);
    for i in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..k {
            if j == i {
                continue;
            }
            let v = sym.get(i, j);
            match best {
                Some((_, bv)) if v <= bv => {}
                _ => best = Some((j, v)),
            }
        }
        if let Some((j, _)) = best {
            edges.push((i, j));
        }
    }
    ConceptGraph {
        label: GraphLabel::Top1,
        directed: true,
        ids: sym.ids.clone(),
        edges,
        seed: None,
    }
}

/// Uniform undirected graph with exactly `edges` distinct pairs.
pub fn random_sparse_graph(
    ids: Vec<String>,
    edges: usize,
    seed: u64,
) -> Result<ConceptGraph, GraphError> {
    let k = ids.len();
    let available = k * (k.saturating_sub(1)) / 2;
    if edges > available {
        return Err(GraphError::TooManyEdges {
            requested: edges,
            available,
        });
    }
    let mut rng = rng_for(seed, &["random-sparse"]);
    let chosen = sample_indices(&mut rng, available, edges);
    let mut edge_list: Vec<(usize, usize)> = chosen
        .into_iter()
        .map(|flat| {
            // flat index over pairs (i, j) with i < j, row-major.
            let mut i = 0usize;
            let mut offset = flat;
            loop {
                let row_len = k - 1 - i;
                if offset < row_len {
                    return (i, i + 1 + offset);
                }
                offset -= row_len;
                i += 1;
            }
        })
        .collect();
    edge_list.sort_unstable();
    Ok(ConceptGraph {
        label: GraphLabel::RandomSparseA,
        directed: false,
        ids,
        edges: edge_list,
        seed: Some(seed),
    })
}

/// Each node points at one uniformly random other node.
pub fn random_top1_graph(ids: Vec<String>, seed: u64) -> ConceptGraph {
    use rand::Rng;
    let k = ids.len();
    let mut rng = rng_for(seed, &["random-top1"]);
    let mut edges = Vec::with_capacity(k);
    for i in 0..k {
        if k < 2 {
            break;
        }
        let mut j = rng.gen_range(0..k - 1);
        if j >= i {
            j += 1;
        }
        edges.push((i, j));
    }
    ConceptGraph {
        label: GraphLabel::RandomTop1,
        directed: true,
        ids,
        edges,
        seed: Some(seed),
    }
}
