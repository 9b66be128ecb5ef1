//! Betweenness centrality and greedy hierarchy extraction.
//!
//! Nodes are visited in decreasing order of betweenness in the undirected
//! similarity graph; each node is linked to the already-added node it is most
//! similar to. The attachment consults the symmetric similarity globally, so
//! the result is always one connected tree even when the adjacency graph is
//! not.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simgraph::{ConceptGraph, SymmetricSimilarity};

#[derive(Debug, Error)]
pub enum HierarchyError {
    #[error("cannot extract a hierarchy from zero concepts")]
    Empty,
    #[error("similarity matrix ids and graph ids differ")]
    IdMismatch,
}

/// Rooted tree over concepts, with the construction trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Hierarchy {
    pub ids: Vec<String>,
    pub root: usize,
    /// parent[v] = None exactly for the root.
    pub parent: Vec<Option<usize>>,
    /// Symmetric similarity between each node and its parent; root slot None.
    pub edge_similarity: Vec<Option<f64>>,
    /// Permutation of node indices, root first.
    pub insertion_order: Vec<usize>,
    /// Unnormalized betweenness of each node in the input graph.
    pub centrality: Vec<f64>,
}

impl Hierarchy {
    pub fn k(&self) -> usize {
        self.ids.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, Option<f64>)> + '_ {
        (0..self.k()).filter_map(move |child| {
            self.parent[child].map(|p| (child, p, self.edge_similarity[child]))
        })
    }
}

/// Exact unnormalized betweenness (Brandes) on the undirected view of a
/// simple graph. For node `v`, sums `sigma_st(v) / sigma_st` over unordered
/// pairs `{s, t}` with `s != v != t`; disconnected pairs contribute 0.
pub fn betweenness(graph: &ConceptGraph) -> Vec<f64> {
    use rayon::prelude::*;
    let n = graph.ids.len();
    let adj = graph.undirected_neighbors();
    let per_source: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| {
            let mut scores = vec![0.0f64; n];
            let mut stack: Vec<usize> = Vec::with_capacity(n);
            let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
            let mut sigma = vec![0.0f64; n];
            let mut dist = vec![-1i64; n];
            sigma[s] = 1.0;
            dist[s] = 0;
            let mut queue = VecDeque::new();
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                stack.push(v);
                for &w in &adj[v] {
                    if dist[w] < 0 {
                        dist[w] = dist[v] + 1;
                        queue.push_back(w);
                    }
                    if dist[w] == dist[v] + 1 {
                        sigma[w] += sigma[v];
                        preds[w].push(v);
                    }
                }
            }
            let mut delta = vec![0.0f64; n];
            while let Some(w) = stack.pop() {
                for &v in &preds[w] {
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
                }
                if w != s {
                    scores[w] += delta[w];
                }
            }
            scores
        })
        .collect();
    // Deterministic reduction in source order; each unordered pair was seen
    // from both endpoints, so halve.
    let mut betweenness = vec![0.0f64; n];
    for scores in per_source {
        for (acc, s) in betweenness.iter_mut().zip(scores) {
            *acc += s;
        }
    }
    for b in &mut betweenness {
        *b *= 0.5;
    }
    betweenness
}

/// Grow the tree: order nodes by betweenness descending (ties by symmetric
/// row sum descending, then id ascending); the first node is the root; each
/// later node attaches to the already-added node with the largest symmetric
/// similarity (ties to the earliest-inserted candidate).
pub fn extract_hierarchy(
    sym: &SymmetricSimilarity,
    graph: &ConceptGraph,
) -> Result<Hierarchy, HierarchyError> {
    let k = sym.k();
    if k == 0 {
        return Err(HierarchyError::Empty);
    }
    if sym.ids != graph.ids {
        return Err(HierarchyError::IdMismatch);
    }
    let centrality = betweenness(graph);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        centrality[b]
            .partial_cmp(&centrality[a])
            .expect("centrality is finite")
            .then(
                sym.row_sum(b)
                    .partial_cmp(&sym.row_sum(a))
                    .expect("similarity is finite"),
            )
            .then(sym.ids[a].cmp(&sym.ids[b]))
    });

    let mut parent: Vec<Option<usize>> = vec![None; k];
    let mut edge_similarity: Vec<Option<f64>> = vec![None; k];
    let mut added: Vec<usize> = Vec::with_capacity(k);
    for &node in &order {
        if added.is_empty() {
            added.push(node);
            continue;
        }
        let mut best = added[0];
        let mut best_sim = sym.get(node, best);
        for &candidate in &added[1..] {
            let sim = sym.get(node, candidate);
            if sim > best_sim {
                best = candidate;
                best_sim = sim;
            }
        }
        parent[node] = Some(best);
        edge_similarity[node] = Some(best_sim);
        added.push(node);
    }
    Ok(Hierarchy {
        ids: sym.ids.clone(),
        root: order[0],
        parent,
        edge_similarity,
        insertion_order: order,
        centrality,
    })
}

/// Serialized form of a hierarchy (ids instead of indices).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeFile {
    pub root: String,
    pub order: Vec<String>,
    pub edges: Vec<TreeEdge>,
    pub centrality: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeEdge {
    pub child: String,
    pub parent: String,
    pub similarity: f64,
}

impl TreeFile {
    pub fn from_hierarchy(h: &Hierarchy) -> Self {
        let edges = h
            .insertion_order
            .iter()
            .filter_map(|&child| {
                h.parent[child].map(|p| TreeEdge {
                    child: h.ids[child].clone(),
                    parent: h.ids[p].clone(),
                    similarity: h.edge_similarity[child].unwrap_or(0.0),
                })
            })
            .collect();
        TreeFile {
            root: h.ids[h.root].clone(),
            order: h.insertion_order.iter().map(|&i| h.ids[i].clone()).collect(),
            edges,
            centrality: h
                .ids
                .iter()
                .cloned()
                .zip(h.centrality.iter().copied())
                .collect(),
        }
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Render the tree as a DOT digraph: parent -> child edges, node labels are
/// concept names, edge labels the attachment similarity to 3 decimals.
pub fn tree_to_dot(h: &Hierarchy, names: &BTreeMap<String, String>) -> String {
    let mut out = String::from("digraph hierarchy {\n");
    for (idx, id) in h.ids.iter().enumerate() {
        let name = names.get(id).map(|n| n.as_str()).unwrap_or(id.as_str());
        out.push_str(&format!(
            "  n{idx} [label=\"{}\"];\n",
            dot_escape(name)
        ));
    }
    for (child, parent, sim) in h.edges() {
        out.push_str(&format!(
            "  n{parent} -> n{child} [label=\"{:.3}\"];\n",
            sim.unwrap_or(0.0)
        ));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgraph::{GraphLabel, SymmetricSimilarity};

    fn graph(n: usize, edges: &[(usize, usize)]) -> ConceptGraph {
        ConceptGraph {
            label: GraphLabel::UndirectedAdjacency,
            directed: false,
            ids: (1..=n).map(|i| format!("{i}")).collect(),
            edges: edges.to_vec(),
            seed: None,
        }
    }

    /// Brute-force betweenness: enumerate every path between every pair by
    /// BFS-layered DFS and count shortest paths through each vertex.
    fn brute_betweenness(n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
        let mut adj = vec![Vec::new(); n];
        for &(i, j) in edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut scores = vec![0.0f64; n];
        for s in 0..n {
            for t in (s + 1)..n {
                // shortest distance via BFS
                let mut dist = vec![usize::MAX; n];
                dist[s] = 0;
                let mut queue = std::collections::VecDeque::from([s]);
                while let Some(v) = queue.pop_front() {
                    for &w in &adj[v] {
                        if dist[w] == usize::MAX {
                            dist[w] = dist[v] + 1;
                            queue.push_back(w);
                        }
                    }
                }
                if dist[t] == usize::MAX {
                    continue;
                }
                // enumerate all shortest paths by DFS along decreasing dist-to-s
                let mut paths: Vec<Vec<usize>> = Vec::new();
                let mut stack = vec![vec![t]];
                while let Some(path) = stack.pop() {
                    let head = *path.last().unwrap();
                    if head == s {
                        paths.push(path);
                        continue;
                    }
                    for &w in &adj[head] {
                        if dist[w] + 1 == dist[head] {
                            let mut next = path.clone();
                            next.push(w);
                            stack.push(next);
                        }
                    }
                }
                let total = paths.len() as f64;
                for path in &paths {
                    for &v in &path[1..path.len() - 1] {
                        scores[v] += 1.0 / total;
                    }
                }
            }
        }
        scores
    }

    #[test]
    fn path_graph_center() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        assert_eq!(betweenness(&g), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn triangle_all_zero() {
        let g = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(betweenness(&g), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn star_center_is_choose_two() {
        let g = graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        assert_eq!(betweenness(&g), vec![6.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn matches_brute_force_on_random_graphs() {
        use rand::Rng;
        let mut rng = crate::seeding::rng_for(17, &["brandes"]);
        for case in 0..60 {
            let n = rng.gen_range(2..=10);
            let p = [0.2, 0.5, 0.8][case % 3];
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.gen_bool(p) {
                        edges.push((i, j));
                    }
                }
            }
            let fast = betweenness(&graph(n, &edges));
            let slow = brute_betweenness(n, &edges);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-9, "n={n} edges={edges:?}: {fast:?} vs {slow:?}");
            }
        }
    }

    fn sym_from_pairs(k: usize, pairs: &[((usize, usize), f64)]) -> SymmetricSimilarity {
        let mut values = vec![0.0; k * k];
        for i in 0..k {
            values[i * k + i] = 1.0;
        }
        for &((i, j), v) in pairs {
            values[i * k + j] = v;
            values[j * k + i] = v;
        }
        SymmetricSimilarity::from_values((1..=k).map(|i| format!("{i}")).collect(), values)
    }

    #[test]
    fn hand_executed_four_node_example() {
        // pairs: (1,2)=0.9 (1,3)=0.8 (1,4)=0.2 (2,3)=0.7 (2,4)=0.6 (3,4)=0.1
        // ids "1".."4" map to indices 0..3
        let sym = sym_from_pairs(
            4,
            &[
                ((0, 1), 0.9),
                ((0, 2), 0.8),
                ((0, 3), 0.2),
                ((1, 2), 0.7),
                ((1, 3), 0.6),
                ((2, 3), 0.1),
            ],
        );
        // adjacency = edges with sym >= 0.5
        let g = ConceptGraph {
            label: GraphLabel::UndirectedAdjacency,
            directed: false,
            ids: sym.ids.clone(),
            edges: vec![(0, 1), (0, 2), (1, 2), (1, 3)],
            seed: None,
        };
        let h = extract_hierarchy(&sym, &g).unwrap();
        // Node 2 (index 1) bridges 4 to the triangle: highest centrality,
        // root. Then 1 -> 2 (0.9), 3 -> 1 (0.8 > 0.7), 4 -> 2 (0.6).
        assert_eq!(h.ids[h.root], "2");
        let parent_of = |id: &str| {
            let idx = h.ids.iter().position(|x| x == id).unwrap();
            h.parent[idx].map(|p| h.ids[p].clone())
        };
        assert_eq!(parent_of("1").as_deref(), Some("2"));
        assert_eq!(parent_of("3").as_deref(), Some("1"));
        assert_eq!(parent_of("4").as_deref(), Some("2"));
        let sim_of = |id: &str| {
            let idx = h.ids.iter().position(|x| x == id).unwrap();
            h.edge_similarity[idx].unwrap()
        };
        assert!((sim_of("1") - 0.9).abs() < 1e-12);
        assert!((sim_of("3") - 0.8).abs() < 1e-12);
        assert!((sim_of("4") - 0.6).abs() < 1e-12);
    }

    #[test]
    fn root_tie_resolved_by_row_sum() {
        // All betweenness zero on an empty graph; root is the node with the
        // largest symmetric row sum.
        let sym = sym_from_pairs(3, &[((0, 1), 0.2), ((0, 2), 0.3), ((1, 2), 0.9)]);
        let g = graph(3, &[]);
        let h = extract_hierarchy(&sym, &g).unwrap();
        // row sums: n0=0.5, n1=1.1, n2=1.2 -> root "3" (index 2)
        assert_eq!(h.ids[h.root], "3");
    }

    #[test]
    fn single_node_is_root_only() {
        let sym = SymmetricSimilarity::from_values(vec!["only".into()], vec![1.0]);
        let g = ConceptGraph {
            label: GraphLabel::UndirectedAdjacency,
            directed: false,
            ids: vec!["only".into()],
            edges: vec![],
            seed: None,
        };
        let h = extract_hierarchy(&sym, &g).unwrap();
        assert_eq!(h.root, 0);
        assert_eq!(h.edges().count(), 0);
    }

    #[test]
    fn disconnected_graph_still_yields_one_tree() {
        let sym = sym_from_pairs(4, &[((0, 1), 0.4), ((2, 3), 0.4), ((0, 2), 0.1)]);
        let g = graph(4, &[]); // no adjacency at all
        let h = extract_hierarchy(&sym, &g).unwrap();
        assert_eq!(h.edges().count(), 3);
        // every node reaches the root
        for v in 0..4 {
            let mut cur = v;
            let mut hops = 0;
            while let Some(p) = h.parent[cur] {
                cur = p;
                hops += 1;
                assert!(hops <= 4, "cycle detected");
            }
            assert_eq!(cur, h.root);
        }
    }

    #[test]
    fn dot_output_shape() {
        let sym = sym_from_pairs(2, &[((0, 1), 0.625)]);
        let g = graph(2, &[(0, 1)]);
        let h = extract_hierarchy(&sym, &g).unwrap();
        let mut names = BTreeMap::new();
        names.insert("1".to_string(), "Jazz".to_string());
        names.insert("2".to_string(), "Rock".to_string());
        let dot = tree_to_dot(&h, &names);
        assert!(dot.starts_with("digraph"));
        assert!(dot.contains("label=\"Jazz\""));
        assert!(dot.contains("label=\"0.625\""));
        assert_eq!(dot.matches("->").count(), 1);
    }

    #[test]
    fn empty_input_errors() {
        let sym = SymmetricSimilarity::from_values(vec![], vec![]);
        let g = graph(0, &[]);
        assert!(matches!(extract_hierarchy(&sym, &g), Err(HierarchyError::Empty)));
    }

    fn random_sym(rng: &mut impl rand::Rng, k: usize) -> Vec<f64> {
        let mut values = vec![0.0; k * k];
        for i in 0..k {
            values[i * k + i] = 1.0;
            for j in 0..i {
                let v: f64 = rng.gen();
                values[i * k + j] = v;
                values[j * k + i] = v;
            }
        }
        values
    }

    fn adjacency_of(ids: Vec<String>, values: &[f64]) -> ConceptGraph {
        let k = ids.len();
        let mut edges = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                if values[i * k + j] >= 0.5 {
                    edges.push((i, j));
                }
            }
        }
        ConceptGraph {
            label: GraphLabel::UndirectedAdjacency,
            directed: false,
            ids,
            edges,
            seed: None,
        }
    }

    #[test]
    fn monotone_rescaling_preserves_topology() {
        use rand::Rng;
        let mut rng = crate::seeding::rng_for(79, &["monotone-tree"]);
        for _ in 0..30 {
            let k = rng.gen_range(2..=12);
            let ids: Vec<String> = (1..=k).map(|i| format!("{i}")).collect();
            let values = random_sym(&mut rng, k);
            let g = adjacency_of(ids.clone(), &values);
            // affine map: keeps attachment argmaxes and every tie-break order
            let mapped: Vec<f64> = values.iter().map(|v| 0.3 * v + 0.2).collect();
            let h1 = extract_hierarchy(
                &SymmetricSimilarity::from_values(ids.clone(), values),
                &g,
            )
            .unwrap();
            let h2 =
                extract_hierarchy(&SymmetricSimilarity::from_values(ids, mapped), &g).unwrap();
            assert_eq!(h1.root, h2.root);
            assert_eq!(h1.parent, h2.parent);
        }
        // Nonlinear monotone maps can reorder tied row sums, so check one on
        // a fixed instance whose ordering keys have no ties.
        let ids: Vec<String> = (1..=4).map(|i| format!("{i}")).collect();
        let sim = [
            1.0, 0.9, 0.3, 0.2, //
            0.9, 1.0, 0.7, 0.3, //
            0.3, 0.7, 1.0, 0.6, //
            0.2, 0.3, 0.6, 1.0,
        ];
        let g = adjacency_of(ids.clone(), &sim);
        let cubed: Vec<f64> = sim.iter().map(|v| v.powi(3)).collect();
        let h1 =
            extract_hierarchy(&SymmetricSimilarity::from_values(ids.clone(), sim.to_vec()), &g)
                .unwrap();
        let h2 = extract_hierarchy(&SymmetricSimilarity::from_values(ids, cubed), &g).unwrap();
        assert_eq!(h1.root, h2.root);
        assert_eq!(h1.parent, h2.parent);
    }

    #[test]
    fn edge_similarity_multiset_is_permutation_invariant() {
        use rand::seq::SliceRandom;
        use rand::Rng;
        let mut rng = crate::seeding::rng_for(80, &["perm-tree"]);
        for _ in 0..30 {
            let k = rng.gen_range(2..=12);
            let ids: Vec<String> = (1..=k).map(|i| format!("{i}")).collect();
            let values = random_sym(&mut rng, k);
            let h1 = extract_hierarchy(
                &SymmetricSimilarity::from_values(ids.clone(), values.clone()),
                &adjacency_of(ids.clone(), &values),
            )
            .unwrap();
            let mut perm: Vec<usize> = (0..k).collect();
            perm.shuffle(&mut rng);
            let pids: Vec<String> = perm.iter().map(|&i| ids[i].clone()).collect();
            let mut pvalues = vec![0.0; k * k];
            for i in 0..k {
                for j in 0..k {
                    pvalues[i * k + j] = values[perm[i] * k + perm[j]];
                }
            }
            let h2 = extract_hierarchy(
                &SymmetricSimilarity::from_values(pids.clone(), pvalues.clone()),
                &adjacency_of(pids, &pvalues),
            )
            .unwrap();
            let weights = |h: &Hierarchy| {
                let mut w: Vec<f64> = h.edge_similarity.iter().flatten().copied().collect();
                w.sort_by(|a, b| a.partial_cmp(b).unwrap());
                w
            };
            assert_eq!(weights(&h1), weights(&h2));
        }
    }
}
