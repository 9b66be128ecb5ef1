//! Evaluation: structure counts, cluster agreement, silhouette, and
//! alignment of a hierarchy against external similarity sources.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::Hierarchy;
use crate::seeding::rng_for;
use crate::simgraph::{ConceptGraph, GraphLabel};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("node {0:?} has no cluster label")]
    UnlabeledNode(String),
    #[error("silhouette needs at least 2 distinct clusters")]
    SingleCluster,
    #[error("similarity source is missing nodes: {0:?}")]
    MissingNodes(Vec<String>),
}

/// Mean with a 95% normal-approximation confidence half-width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanWithCi {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

impl MeanWithCi {
    /// `half_width = 1.96 * sd / sqrt(n)` with the sample standard deviation;
    /// zero for fewer than two observations.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = if n == 0 {
            0.0
        } else {
            samples.iter().sum::<f64>() / n as f64
        };
        let half_width = if n < 2 {
            0.0
        } else {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            1.96 * var.sqrt() / (n as f64).sqrt()
        };
        MeanWithCi {
            mean,
            half_width,
            n,
        }
    }
}

/// Edge, component, and isolation counts for one graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureReport {
    pub label: String,
    pub edge_count: usize,
    pub connected_components: usize,
    pub isolated_nodes: usize,
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Count edges (per the graph's directedness convention), connected
/// components, and isolated nodes; CC and IN are computed on the undirected
/// view.
pub fn structure_metrics(graph: &ConceptGraph) -> StructureReport {
    let n = graph.ids.len();
    let mut uf = UnionFind::new(n);
    let mut degree = vec![0usize; n];
    for &(i, j) in &graph.edges {
        uf.union(i, j);
        degree[i] += 1;
        degree[j] += 1;
    }
    let mut roots: Vec<usize> = (0..n).map(|v| uf.find(v)).collect();
    roots.sort_unstable();
    roots.dedup();
    StructureReport {
        label: serde_json::to_value(graph.label)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
        edge_count: graph.edges.len(),
        connected_components: roots.len(),
        isolated_nodes: degree.iter().filter(|&&d| d == 0).count(),
    }
}

/// Structure counts for a hierarchy (always K-1 edges, 1 CC, 0 IN).
pub fn hierarchy_structure(h: &Hierarchy) -> StructureReport {
    let graph = hierarchy_as_graph(h);
    let mut report = structure_metrics(&graph);
    report.label = "H".to_string();
    report
}

fn hierarchy_as_graph(h: &Hierarchy) -> ConceptGraph {
    ConceptGraph {
        label: GraphLabel::UndirectedAdjacency,
        directed: false,
        ids: h.ids.clone(),
        edges: h
            .edges()
            .map(|(c, p, _)| if c < p { (c, p) } else { (p, c) })
            .collect(),
        seed: None,
    }
}

/// Cluster label per concept id.
pub type ClusterAssignment = BTreeMap<String, String>;

/// Fraction of tree edges whose endpoints share a cluster label.
pub fn edge_cluster_accuracy(
    h: &Hierarchy,
    clusters: &ClusterAssignment,
) -> Result<MeanWithCi, EvalError> {
    for id in &h.ids {
        if !clusters.contains_key(id) {
            return Err(EvalError::UnlabeledNode(id.clone()));
        }
    }
    let samples: Vec<f64> = h
        .edges()
        .map(|(child, parent, _)| {
            let same = clusters[&h.ids[child]] == clusters[&h.ids[parent]];
            if same {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(MeanWithCi::from_samples(&samples))
}

/// Silhouette over an explicit distance matrix (row-major n x n).
///
/// `s(i) = (b - a) / max(a, b)` with `a` the mean intra-cluster distance
/// (excluding self) and `b` the smallest mean distance to another cluster.
/// Singleton clusters and the degenerate `a = b = 0` case score 0.
pub fn silhouette_from_distance(
    distance: &[f64],
    labels: &[usize],
) -> Result<MeanWithCi, EvalError> {
    let n = labels.len();
    assert_eq!(distance.len(), n * n);
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut cluster_sizes = vec![0usize; k];
    for &l in labels {
        cluster_sizes[l] += 1;
    }
    if cluster_sizes.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(EvalError::SingleCluster);
    }
    let mut scores = Vec::with_capacity(n);
    for i in 0..n {
        let own = labels[i];
        if cluster_sizes[own] == 1 {
            scores.push(0.0);
            continue;
        }
        let mut sums = vec![0.0f64; k];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += distance[i * n + j];
            }
        }
        let a = sums[own] / (cluster_sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && cluster_sizes[c] > 0)
            .map(|c| sums[c] / cluster_sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        scores.push(if denom == 0.0 { 0.0 } else { (b - a) / denom });
    }
    Ok(MeanWithCi::from_samples(&scores))
}

/// Silhouette of a clustering under the distance `d(i, j) = 1 - sym[i][j]`.
pub fn silhouette(
    sym: &crate::simgraph::SymmetricSimilarity,
    clusters: &ClusterAssignment,
) -> Result<MeanWithCi, EvalError> {
    let n = sym.k();
    for id in &sym.ids {
        if !clusters.contains_key(id) {
            return Err(EvalError::UnlabeledNode(id.clone()));
        }
    }
    let mut label_index: BTreeMap<&str, usize> = BTreeMap::new();
    let labels: Vec<usize> = sym
        .ids
        .iter()
        .map(|id| {
            let name = clusters[id].as_str();
            let next = label_index.len();
            *label_index.entry(name).or_insert(next)
        })
        .collect();
    let mut distance = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            distance[i * n + j] = 1.0 - sym.get(i, j);
        }
    }
    silhouette_from_distance(&distance, &labels)
}

/// Whether larger source values mean more similar (cosine) or less
/// (distance).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceMetric {
    CosineSimilarity,
    EuclideanDistance,
}

impl SourceMetric {
    /// Reported direction arrow: higher-better or lower-better.
    pub fn direction(self) -> &'static str {
        match self {
            SourceMetric::CosineSimilarity => "higher-better",
            SourceMetric::EuclideanDistance => "lower-better",
        }
    }
}

enum SourceValues {
    Embeddings(HashMap<String, Vec<f64>>),
    Matrix {
        index: HashMap<String, usize>,
        values: Vec<f64>,
        n: usize,
    },
}

/// An external notion of concept similarity: either per-concept vectors
/// scored pairwise under a metric, or a precomputed matrix.
pub struct SimilaritySource {
    pub name: String,
    pub metric: SourceMetric,
    values: SourceValues,
}

impl SimilaritySource {
    pub fn from_embeddings(
        name: &str,
        metric: SourceMetric,
        vectors: HashMap<String, Vec<f64>>,
    ) -> Self {
        SimilaritySource {
            name: name.to_string(),
            metric,
            values: SourceValues::Embeddings(vectors),
        }
    }

    pub fn from_matrix(name: &str, metric: SourceMetric, ids: &[String], values: Vec<f64>) -> Self {
        let n = ids.len();
        assert_eq!(values.len(), n * n);
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        SimilaritySource {
            name: name.to_string(),
            metric,
            values: SourceValues::Matrix { index, values, n },
        }
    }

    pub fn covers(&self, id: &str) -> bool {
        match &self.values {
            SourceValues::Embeddings(map) => map.contains_key(id),
            SourceValues::Matrix { index, .. } => index.contains_key(id),
        }
    }

    /// Pairwise score under the source's metric.
    pub fn score(&self, a: &str, b: &str) -> Option<f64> {
        match &self.values {
            SourceValues::Embeddings(map) => {
                let va = map.get(a)?;
                let vb = map.get(b)?;
                Some(match self.metric {
                    SourceMetric::CosineSimilarity => cosine(va, vb),
                    SourceMetric::EuclideanDistance => euclidean(va, vb),
                })
            }
            SourceValues::Matrix { index, values, n } => {
                let ia = *index.get(a)?;
                let ib = *index.get(b)?;
                Some(values[ia * n + ib])
            }
        }
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Alignment of a hierarchy with a source: the mean pairwise score over the
/// tree's (child, parent) edges, with its confidence interval.
pub fn alignment_score(h: &Hierarchy, source: &SimilaritySource) -> Result<MeanWithCi, EvalError> {
    let missing: Vec<String> = h
        .ids
        .iter()
        .filter(|id| !source.covers(id))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(EvalError::MissingNodes(missing));
    }
    let samples: Vec<f64> = h
        .edges()
        .map(|(child, parent, _)| {
            source
                .score(&h.ids[child], &h.ids[parent])
                .expect("coverage checked")
        })
        .collect();
    Ok(MeanWithCi::from_samples(&samples))
}

/// Similarity source built from the concept vectors' own weights. Euclidean
/// distance over L2-normalized weights by default; cosine by flag.
pub fn cav_weight_source(
    cavs: &[crate::cav::ConceptVector],
    metric: SourceMetric,
) -> SimilaritySource {
    let vectors: HashMap<String, Vec<f64>> = cavs
        .iter()
        .map(|c| {
            let norm: f64 = c.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
            let v = if norm == 0.0 || metric == SourceMetric::CosineSimilarity {
                c.weights.clone()
            } else {
                c.weights.iter().map(|w| w / norm).collect()
            };
            (c.id.clone(), v)
        })
        .collect();
    SimilaritySource::from_embeddings("cav-weights", metric, vectors)
}

/// Uniform random recursive tree over the given ids: random insertion order,
/// each node attaching to a uniformly random already-added node.
pub fn random_hierarchy(ids: Vec<String>, seed: u64) -> Hierarchy {
    use rand::seq::SliceRandom;
    use rand::Rng;
    let k = ids.len();
    assert!(k >= 1, "need at least one node");
    let mut rng = rng_for(seed, &["random-hierarchy"]);
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(&mut rng);
    let mut parent = vec![None; k];
    for (pos, &node) in order.iter().enumerate().skip(1) {
        let attach = order[rng.gen_range(0..pos)];
        parent[node] = Some(attach);
    }
    Hierarchy {
        ids,
        root: order[0],
        parent,
        edge_similarity: vec![None; k],
        insertion_order: order,
        centrality: vec![0.0; k],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgraph::SymmetricSimilarity;

    fn graph(n: usize, edges: &[(usize, usize)]) -> ConceptGraph {
        ConceptGraph {
            label: GraphLabel::UndirectedAdjacency,
            directed: false,
            ids: (0..n).map(|i| format!("c{i}")).collect(),
            edges: edges.to_vec(),
            seed: None,
        }
    }

    #[test]
    fn empty_graph_counts() {
        let report = structure_metrics(&graph(5, &[]));
        assert_eq!(
            (report.edge_count, report.connected_components, report.isolated_nodes),
            (0, 5, 5)
        );
    }

    #[test]
    fn two_disjoint_edges_on_five_nodes() {
        let report = structure_metrics(&graph(5, &[(0, 1), (2, 3)]));
        assert_eq!(
            (report.edge_count, report.connected_components, report.isolated_nodes),
            (2, 3, 1)
        );
    }

    #[test]
    fn union_find_agrees_with_bfs() {
        use rand::Rng;
        let mut rng = rng_for(8, &["cc"]);
        for _ in 0..100 {
            let n = rng.gen_range(1..=50);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.gen_bool(0.08) {
                        edges.push((i, j));
                    }
                }
            }
            let g = graph(n, &edges);
            let report = structure_metrics(&g);
            // BFS count
            let adj = g.undirected_neighbors();
            let mut seen = vec![false; n];
            let mut components = 0;
            for s in 0..n {
                if seen[s] {
                    continue;
                }
                components += 1;
                let mut queue = std::collections::VecDeque::from([s]);
                seen[s] = true;
                while let Some(v) = queue.pop_front() {
                    for &w in &adj[v] {
                        if !seen[w] {
                            seen[w] = true;
                            queue.push_back(w);
                        }
                    }
                }
            }
            assert_eq!(report.connected_components, components);
        }
    }

    fn chain_hierarchy(ids: &[&str], parents: &[(usize, usize)]) -> Hierarchy {
        let k = ids.len();
        let mut parent = vec![None; k];
        for &(c, p) in parents {
            parent[c] = Some(p);
        }
        let root = (0..k).find(|&v| parent[v].is_none()).unwrap();
        let mut order = vec![root];
        order.extend((0..k).filter(|&v| v != root));
        Hierarchy {
            ids: ids.iter().map(|s| s.to_string()).collect(),
            root,
            parent,
            edge_similarity: vec![Some(0.5); k],
            insertion_order: order,
            centrality: vec![0.0; k],
        }
    }

    #[test]
    fn edge_cluster_accuracy_enumeration() {
        // edges {(a,b),(b,c),(b,d)}, clusters {a,b | c,d} -> 1/3
        let h = chain_hierarchy(&["a", "b", "c", "d"], &[(0, 1), (2, 1), (3, 1)]);
        let mut clusters = ClusterAssignment::new();
        clusters.insert("a".into(), "x".into());
        clusters.insert("b".into(), "x".into());
        clusters.insert("c".into(), "y".into());
        clusters.insert("d".into(), "y".into());
        let acc = edge_cluster_accuracy(&h, &clusters).unwrap();
        assert!((acc.mean - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(acc.n, 3);
    }

    #[test]
    fn one_cluster_means_perfect_accuracy() {
        let h = chain_hierarchy(&["a", "b", "c"], &[(1, 0), (2, 1)]);
        let clusters: ClusterAssignment = ["a", "b", "c"]
            .iter()
            .map(|s| (s.to_string(), "all".to_string()))
            .collect();
        assert_eq!(edge_cluster_accuracy(&h, &clusters).unwrap().mean, 1.0);
    }

    #[test]
    fn unlabeled_node_errors() {
        let h = chain_hierarchy(&["a", "b"], &[(1, 0)]);
        let clusters: ClusterAssignment =
            [("a".to_string(), "x".to_string())].into_iter().collect();
        assert!(matches!(
            edge_cluster_accuracy(&h, &clusters),
            Err(EvalError::UnlabeledNode(_))
        ));
    }

    #[test]
    fn silhouette_one_dimensional_worked_example() {
        // points 0,1 in cluster X; 5 in cluster Y; d = |x - y|
        let points = [0.0f64, 1.0, 5.0];
        let labels = [0usize, 0, 1];
        let n = 3;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = (points[i] - points[j]).abs();
            }
        }
        let s = silhouette_from_distance(&d, &labels).unwrap();
        // s(0)=0.8, s(1)=0.75, s(5)=0 (singleton) -> mean 0.51666...
        assert!((s.mean - (0.8 + 0.75) / 3.0).abs() < 1e-12);
        assert!((s.mean - 0.5167).abs() < 1e-4);
    }

    #[test]
    fn silhouette_degenerate_identical_clusters() {
        // two clusters over identical points: a=b=0 -> 0 by convention
        let d = vec![0.0; 16];
        let labels = [0usize, 0, 1, 1];
        let s = silhouette_from_distance(&d, &labels).unwrap();
        assert_eq!(s.mean, 0.0);
    }

    #[test]
    fn silhouette_single_cluster_errors() {
        let d = vec![0.0; 4];
        assert!(matches!(
            silhouette_from_distance(&d, &[0, 0]),
            Err(EvalError::SingleCluster)
        ));
    }

    #[test]
    fn silhouette_invariant_under_relabeling() {
        use rand::Rng;
        let mut rng = rng_for(31, &["sil"]);
        let n = 12;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = rng.gen_range(0.0..2.0);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let swapped: Vec<usize> = labels.iter().map(|&l| [2, 0, 1][l]).collect();
        let a = silhouette_from_distance(&d, &labels).unwrap();
        let b = silhouette_from_distance(&d, &swapped).unwrap();
        assert!((a.mean - b.mean).abs() < 1e-12);
    }

    #[test]
    fn silhouette_wrapper_uses_one_minus_similarity() {
        let ids: Vec<String> = vec!["a".into(), "b".into(), "c".into(), "d".into()];
        let mut values = vec![0.0; 16];
        for i in 0..4 {
            values[i * 4 + i] = 1.0;
        }
        let set = |values: &mut Vec<f64>, i: usize, j: usize, v: f64| {
            values[i * 4 + j] = v;
            values[j * 4 + i] = v;
        };
        set(&mut values, 0, 1, 0.9);
        set(&mut values, 2, 3, 0.9);
        set(&mut values, 0, 2, 0.1);
        set(&mut values, 0, 3, 0.1);
        set(&mut values, 1, 2, 0.1);
        set(&mut values, 1, 3, 0.1);
        let sym = SymmetricSimilarity::from_values(ids, values);
        let clusters: ClusterAssignment = [
            ("a", "x"),
            ("b", "x"),
            ("c", "y"),
            ("d", "y"),
        ]
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        let s = silhouette(&sym, &clusters).unwrap();
        // a = 1 - 0.9 = 0.1, b = 1 - 0.1 = 0.9 for every point
        assert!((s.mean - (0.9 - 0.1) / 0.9).abs() < 1e-12);
        assert!(s.mean > 0.0 && s.mean <= 1.0);
    }

    #[test]
    fn alignment_constant_source_has_zero_width() {
        let h = chain_hierarchy(&["a", "b", "c"], &[(1, 0), (2, 0)]);
        let ids: Vec<String> = h.ids.clone();
        let values = vec![0.4; 9];
        let source = SimilaritySource::from_matrix("const", SourceMetric::CosineSimilarity, &ids, values);
        let score = alignment_score(&h, &source).unwrap();
        assert_eq!(score.mean, 0.4);
        assert_eq!(score.half_width, 0.0);
        assert_eq!(score.n, 2);
    }

    #[test]
    fn alignment_missing_node_errors() {
        let h = chain_hierarchy(&["a", "b"], &[(1, 0)]);
        let source = SimilaritySource::from_embeddings(
            "partial",
            SourceMetric::CosineSimilarity,
            [("a".to_string(), vec![1.0])].into_iter().collect(),
        );
        match alignment_score(&h, &source) {
            Err(EvalError::MissingNodes(ids)) => assert_eq!(ids, vec!["b".to_string()]),
            other => panic!("expected MissingNodes, got {other:?}"),
        }
    }

    #[test]
    fn cav_weight_source_distances() {
        let mk = |id: &str, w: Vec<f64>| crate::cav::ConceptVector {
            id: id.into(),
            name: id.into(),
            weights: w,
            bias: 0.0,
            test_accuracy: 1.0,
            validation_accuracy: 1.0,
            converged: true,
            kept: true,
        };
        let cavs = vec![
            mk("a", vec![2.0, 0.0]),
            mk("b", vec![3.0, 0.0]),
            mk("c", vec![0.0, 5.0]),
        ];
        let src = cav_weight_source(&cavs, SourceMetric::EuclideanDistance);
        // identical directions -> distance 0 after normalization
        assert!(src.score("a", "b").unwrap().abs() < 1e-12);
        // orthogonal unit vectors -> sqrt(2)
        assert!((src.score("a", "c").unwrap() - 2.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(src.metric.direction(), "lower-better");
        let cos = cav_weight_source(&cavs, SourceMetric::CosineSimilarity);
        assert_eq!(cos.metric.direction(), "higher-better");
        assert!((cos.score("a", "b").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_hierarchy_is_a_tree() {
        for seed in 0..5 {
            let ids: Vec<String> = (0..20).map(|i| format!("c{i}")).collect();
            let h = random_hierarchy(ids, seed);
            assert_eq!(h.edges().count(), 19);
            let report = hierarchy_structure(&h);
            assert_eq!(report.connected_components, 1);
            assert_eq!(report.isolated_nodes, 0);
        }
        let single = random_hierarchy(vec!["only".into()], 0);
        assert_eq!(single.edges().count(), 0);
        let a = random_hierarchy(vec!["x".into(), "y".into(), "z".into()], 3);
        let b = random_hierarchy(vec!["x".into(), "y".into(), "z".into()], 3);
        assert_eq!(a.parent, b.parent);
    }
}
