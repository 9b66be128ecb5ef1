//! Pipeline stages behind the CLI: each stage reads the previous stage's
//! files, writes its own, and embeds a provenance block (config + seed) in
//! every JSON output. Stage outputs are staged under a `.quarantine` suffix
//! and renamed into place only when the whole stage succeeds, so a failed
//! rerun never clobbers good outputs.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cav::{self, CavSet, ConceptVector, TrainConfig};
use crate::corpus::{self, ConceptCatalog, EmbeddingStore};
use crate::eval::{self, ClusterAssignment, MeanWithCi, SimilaritySource, SourceMetric, StructureReport};
use crate::hierarchy::{self, Hierarchy, TreeFile};
use crate::simgraph::{self, ConceptGraph, SimilarityMatrix, SymmetricSimilarity};
use crate::synth::{self, SynthConfig};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("missing input file: {0}")]
    MissingInput(PathBuf),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{0}")]
    Corpus(#[from] corpus::CorpusError),
    #[error("{0}")]
    Cav(#[from] cav::CavError),
    #[error("{0}")]
    Graph(#[from] simgraph::GraphError),
    #[error("{0}")]
    Hierarchy(#[from] hierarchy::HierarchyError),
    #[error("{0}")]
    Eval(#[from] eval::EvalError),
    #[error("{0}")]
    Synth(#[from] synth::SynthError),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad json in {path}: {message}")]
    BadJson { path: PathBuf, message: String },
}

impl PipelineError {
    /// Process exit code: 2 missing upstream file, 3 validation, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::MissingInput(_) => 2,
            PipelineError::Validation(_)
            | PipelineError::Corpus(_)
            | PipelineError::BadJson { .. } => 3,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// External similarity source declaration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceSpec {
    pub name: String,
    pub path: PathBuf,
    /// "embeddings" (corpus CSV format) or "matrix" (K x K CSV).
    pub kind: SourceKind,
    pub metric: SourceMetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    Embeddings,
    Matrix,
}

/// Full pipeline configuration; flags override file values, and every random
/// draw flows from `seed`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub embeddings: Option<PathBuf>,
    pub concepts: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub min_examples: usize,
    pub l2_lambda: f64,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub negatives_per_positive: f64,
    pub accuracy_threshold: f64,
    pub histogram_bin_width: f64,
    pub clusters: Option<PathBuf>,
    pub sources: Vec<SourceSpec>,
    pub synth: SynthConfig,
    /// 0 means the library default thread count.
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        PipelineConfig {
            embeddings: None,
            concepts: None,
            output_dir: PathBuf::from("out"),
            seed: 0,
            min_examples: corpus::DEFAULT_MIN_EXAMPLES,
            l2_lambda: train.l2_lambda,
            max_iterations: train.max_iterations,
            gradient_tolerance: train.gradient_tolerance,
            negatives_per_positive: train.negatives_per_positive,
            accuracy_threshold: train.accuracy_threshold,
            histogram_bin_width: 0.02,
            clusters: None,
            sources: Vec::new(),
            synth: SynthConfig::default(),
            workers: 0,
        }
    }
}

impl PipelineConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            l2_lambda: self.l2_lambda,
            max_iterations: self.max_iterations,
            gradient_tolerance: self.gradient_tolerance,
            negatives_per_positive: self.negatives_per_positive,
            accuracy_threshold: self.accuracy_threshold,
            seed: self.seed,
        }
    }

    pub fn embeddings_path(&self) -> PathBuf {
        self.embeddings
            .clone()
            .unwrap_or_else(|| self.output_dir.join("embeddings.csv"))
    }

    pub fn concepts_path(&self) -> PathBuf {
        self.concepts
            .clone()
            .unwrap_or_else(|| self.output_dir.join("concepts.jsonl"))
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config: serde_json::Value,
}

impl Provenance {
    fn of(config: &PipelineConfig) -> Self {
        let mut value = serde_json::to_value(config).expect("config serializes");
        // Worker count and output location change where and how fast results
        // are produced, never what they are; keeping them out of provenance
        // lets runs with different settings produce identical outputs.
        if let Some(map) = value.as_object_mut() {
            map.remove("workers");
            map.remove("output_dir");
        }
        Provenance {
            seed: config.seed,
            config: value,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WithProvenance<T> {
    pub provenance: Provenance,
    #[serde(flatten)]
    pub body: T,
}

/// Staged output files: everything is written to `<path>.quarantine` first
/// and renamed into place on [`StageOutputs::commit`]. Files left behind by a
/// failed stage keep the suffix.
struct StageOutputs {
    staged: Vec<(PathBuf, PathBuf)>,
}

impl StageOutputs {
    fn new() -> Self {
        StageOutputs { staged: Vec::new() }
    }

    fn stage(&mut self, path: PathBuf) -> PathBuf {
        let mut quarantined = path.clone().into_os_string();
        quarantined.push(".quarantine");
        let quarantined = PathBuf::from(quarantined);
        self.staged.push((quarantined.clone(), path));
        quarantined
    }

    fn write_json<T: Serialize>(&mut self, path: PathBuf, value: &T) -> Result<(), PipelineError> {
        let staged = self.stage(path);
        let text = serde_json::to_string_pretty(value).expect("value serializes");
        fs::write(&staged, text + "\n").map_err(io_err(&staged))
    }

    fn commit(self) -> Result<(), PipelineError> {
        for (from, to) in self.staged {
            fs::rename(&from, &to).map_err(io_err(&to))?;
        }
        Ok(())
    }
}

fn require(path: PathBuf) -> Result<PathBuf, PipelineError> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(PipelineError::MissingInput(path))
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::BadJson {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn ensure_output_dir(config: &PipelineConfig) -> Result<(), PipelineError> {
    fs::create_dir_all(&config.output_dir).map_err(io_err(&config.output_dir))
}

/// `synth`: emit embeddings.csv, concepts.jsonl and clusters.csv.
pub fn cmd_synth(config: &PipelineConfig) -> Result<(), PipelineError> {
    ensure_output_dir(config)?;
    let mut synth_config = config.synth.clone();
    synth_config.seed = config.seed;
    let (store, catalog, assignment) = synth::generate(&synth_config)?;
    let mut outputs = StageOutputs::new();
    let embeddings = outputs.stage(config.out("embeddings.csv"));
    store.save_csv(&embeddings)?;
    let concepts = outputs.stage(config.out("concepts.jsonl"));
    catalog.save_jsonl(&concepts)?;
    let clusters = outputs.stage(config.out("clusters.csv"));
    write_clusters_csv(&clusters, &assignment)?;
    outputs.commit()
}

fn write_clusters_csv(path: &Path, assignment: &ClusterAssignment) -> Result<(), PipelineError> {
    let mut out = String::from("id,cluster\n");
    for (id, cluster) in assignment {
        out.push_str(&format!("{id},{cluster}\n"));
    }
    fs::write(path, out).map_err(io_err(path))
}

pub fn read_clusters_csv(path: &Path) -> Result<ClusterAssignment, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut assignment = ClusterAssignment::new();
    for (k, line) in text.lines().enumerate() {
        if k == 0 {
            if line.trim() != "id,cluster" {
                return Err(PipelineError::Validation(format!(
                    "{}: expected header `id,cluster`, found {line:?}",
                    path.display()
                )));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (id, cluster) = line.split_once(',').ok_or_else(|| {
            PipelineError::Validation(format!(
                "{} line {}: expected `id,cluster`",
                path.display(),
                k + 1
            ))
        })?;
        assignment.insert(id.to_string(), cluster.to_string());
    }
    Ok(assignment)
}

fn load_corpus(
    config: &PipelineConfig,
) -> Result<(EmbeddingStore, ConceptCatalog, corpus::CatalogReport), PipelineError> {
    let embeddings = require(config.embeddings_path())?;
    let concepts = require(config.concepts_path())?;
    let store = EmbeddingStore::load_csv(&embeddings)?;
    let (catalog, report) = ConceptCatalog::load_jsonl(&concepts, &store, config.min_examples)?;
    if catalog.is_empty() {
        return Err(PipelineError::Validation(format!(
            "{}: no concept has at least {} resolvable examples",
            concepts.display(),
            config.min_examples
        )));
    }
    Ok((store, catalog, report))
}

/// Accuracy histogram data (Fig.-style: fixed-width bins over [0, 1]).
#[derive(Debug, Serialize, Deserialize)]
pub struct AccuracyHistogram {
    pub bin_width: f64,
    pub counts: Vec<usize>,
}

impl AccuracyHistogram {
    fn of(accuracies: &[f64], bin_width: f64) -> Self {
        let bins = (1.0 / bin_width).ceil() as usize;
        let mut counts = vec![0usize; bins];
        for &a in accuracies {
            let idx = ((a / bin_width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        AccuracyHistogram { bin_width, counts }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LearnReport {
    pub trained: usize,
    pub kept: usize,
    pub filtered_out: usize,
    pub mean_test_accuracy: MeanWithCi,
    pub kept_mean_test_accuracy: MeanWithCi,
    pub histogram: AccuracyHistogram,
    pub rejected_concepts: Vec<String>,
    pub dropped_example_ids: BTreeMap<String, usize>,
}

/// `learn`: split, train all concepts, filter, and write splits.json,
/// cavs.json and learn_report.json.
pub fn cmd_learn(config: &PipelineConfig) -> Result<(), PipelineError> {
    ensure_output_dir(config)?;
    let (store, catalog, catalog_report) = load_corpus(config)?;
    let split = corpus::split_catalog(&catalog, config.seed, config.min_examples)?;
    let train_config = config.train_config();
    let cavs = run_in_pool(config.workers, || {
        cav::train_all(&catalog, &store, &split, &train_config)
    })?;
    // filter_cavs errors when nothing survives; the kept flag is already set.
    let kept = cav::filter_cavs(&cavs, config.accuracy_threshold)?;

    let accuracies: Vec<f64> = cavs.iter().map(|c| c.test_accuracy).collect();
    let kept_accuracies: Vec<f64> = kept.iter().map(|c| c.test_accuracy).collect();
    let report = LearnReport {
        trained: cavs.len(),
        kept: kept.len(),
        filtered_out: cavs.len() - kept.len(),
        mean_test_accuracy: MeanWithCi::from_samples(&accuracies),
        kept_mean_test_accuracy: MeanWithCi::from_samples(&kept_accuracies),
        histogram: AccuracyHistogram::of(&accuracies, config.histogram_bin_width),
        rejected_concepts: catalog_report.rejected,
        dropped_example_ids: catalog_report.dropped_ids,
    };

    let mut outputs = StageOutputs::new();
    outputs.write_json(
        config.out("splits.json"),
        &WithProvenance {
            provenance: Provenance::of(config),
            body: split,
        },
    )?;
    outputs.write_json(
        config.out("cavs.json"),
        &WithProvenance {
            provenance: Provenance::of(config),
            body: CavSet {
                dim: store.dim(),
                accuracy_threshold: config.accuracy_threshold,
                concepts: cavs,
            },
        },
    )?;
    outputs.write_json(
        config.out("learn_report.json"),
        &WithProvenance {
            provenance: Provenance::of(config),
            body: report,
        },
    )?;
    outputs.commit()
}

fn run_in_pool<T>(workers: usize, job: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    if workers == 0 {
        job()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool")
            .install(job)
    }
}

fn load_cavs(config: &PipelineConfig) -> Result<CavSet, PipelineError> {
    let path = require(config.out("cavs.json"))?;
    let wrapped: WithProvenance<CavSet> = read_json(&path)?;
    Ok(wrapped.body)
}

fn kept_of(set: &CavSet) -> Result<Vec<ConceptVector>, PipelineError> {
    Ok(cav::filter_cavs(&set.concepts, set.accuracy_threshold)?)
}

pub fn write_similarity_csv(path: &Path, s: &SimilarityMatrix) -> Result<(), PipelineError> {
    let k = s.k();
    let mut out = String::from("id");
    for id in &s.ids {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    for i in 0..k {
        out.push_str(&s.ids[i]);
        for j in 0..k {
            // 15 significant digits
            out.push_str(&format!(",{:.14e}", s.get(i, j)));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

pub fn read_similarity_csv(path: &Path) -> Result<SimilarityMatrix, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| PipelineError::Validation(format!("{}: empty file", path.display())))?;
    let ids: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
    let k = ids.len();
    let mut values = Vec::with_capacity(k * k);
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let row_id = fields.next().unwrap_or("");
        if row_id != ids[row] {
            return Err(PipelineError::Validation(format!(
                "{} row {}: id {row_id:?} does not match column order",
                path.display(),
                row + 2
            )));
        }
        for field in fields {
            let v: f64 = field.parse().map_err(|_| {
                PipelineError::Validation(format!(
                    "{} row {}: bad number {field:?}",
                    path.display(),
                    row + 2
                ))
            })?;
            values.push(v);
        }
    }
    if values.len() != k * k {
        return Err(PipelineError::Validation(format!(
            "{}: expected {k}x{k} values",
            path.display()
        )));
    }
    Ok(SimilarityMatrix::new(ids, values))
}

/// `graph`: compute S and every graph variant.
pub fn cmd_graph(config: &PipelineConfig) -> Result<(), PipelineError> {
    ensure_output_dir(config)?;
    let (store, catalog, _) = load_corpus(config)?;
    let set = load_cavs(config)?;
    let kept = kept_of(&set)?;
    let s = run_in_pool(config.workers, || {
        simgraph::similarity_matrix(&kept, &catalog, &store)
    })?;
    let sym = s.symmetric();
    let k = s.k();
    let target = k.saturating_sub(1);

    let graphs: Vec<ConceptGraph> = vec![
        simgraph::adjacency(&s),
        simgraph::undirected_adjacency(&s),
        simgraph::sparse_graph(&sym, target)?,
        simgraph::top1_graph(&sym),
        simgraph::random_sparse_graph(s.ids.clone(), target, config.seed)?,
        simgraph::random_top1_graph(s.ids.clone(), config.seed),
    ];

    let mut outputs = StageOutputs::new();
    let sim_path = outputs.stage(config.out("similarity.csv"));
    write_similarity_csv(&sim_path, &s)?;
    for graph in &graphs {
        let name = graph_file_name(graph);
        outputs.write_json(
            config.out(&name),
            &WithProvenance {
                provenance: Provenance::of(config),
                body: graph,
            },
        )?;
    }
    outputs.commit()
}

pub fn graph_file_name(graph: &ConceptGraph) -> String {
    let label = serde_json::to_value(graph.label)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    format!("graph_{}.json", label.replace('-', "_"))
}

/// `tree`: recompute the undirected adjacency from similarity.csv, run
/// betweenness-ordered extraction, and write tree.json + tree.dot.
pub fn cmd_tree(config: &PipelineConfig) -> Result<(), PipelineError> {
    ensure_output_dir(config)?;
    let sim_path = require(config.out("similarity.csv"))?;
    let s = read_similarity_csv(&sim_path)?;
    let sym = s.symmetric();
    let graph = simgraph::undirected_adjacency(&s);
    let tree = hierarchy::extract_hierarchy(&sym, &graph)?;
    let names = concept_names(config)?;
    let mut outputs = StageOutputs::new();
    outputs.write_json(
        config.out("tree.json"),
        &WithProvenance {
            provenance: Provenance::of(config),
            body: TreeFile::from_hierarchy(&tree),
        },
    )?;
    let dot_path = outputs.stage(config.out("tree.dot"));
    fs::write(&dot_path, hierarchy::tree_to_dot(&tree, &names)).map_err(io_err(&dot_path))?;
    outputs.commit()
}

fn concept_names(config: &PipelineConfig) -> Result<BTreeMap<String, String>, PipelineError> {
    // cavs.json carries names; fall back to bare ids when it is absent.
    let path = config.out("cavs.json");
    if !path.is_file() {
        return Ok(BTreeMap::new());
    }
    let set: WithProvenance<CavSet> = read_json(&path)?;
    Ok(set
        .body
        .concepts
        .into_iter()
        .map(|c| (c.id, c.name))
        .collect())
}

pub fn load_tree(config: &PipelineConfig) -> Result<Hierarchy, PipelineError> {
    let path = require(config.out("tree.json"))?;
    let wrapped: WithProvenance<TreeFile> = read_json(&path)?;
    hierarchy_from_tree_file(&wrapped.body)
        .ok_or_else(|| PipelineError::Validation(format!("{}: malformed tree", path.display())))
}

fn hierarchy_from_tree_file(tree: &TreeFile) -> Option<Hierarchy> {
    let mut ids: Vec<String> = tree.order.clone();
    ids.sort();
    let index: HashMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let k = ids.len();
    let mut parent = vec![None; k];
    let mut edge_similarity = vec![None; k];
    for edge in &tree.edges {
        let child = *index.get(edge.child.as_str())?;
        let p = *index.get(edge.parent.as_str())?;
        parent[child] = Some(p);
        edge_similarity[child] = Some(edge.similarity);
    }
    let root = *index.get(tree.root.as_str())?;
    if parent[root].is_some() {
        return None;
    }
    let insertion_order: Vec<usize> = tree
        .order
        .iter()
        .map(|id| index.get(id.as_str()).copied())
        .collect::<Option<_>>()?;
    let centrality: Vec<f64> = ids
        .iter()
        .map(|id| tree.centrality.get(id).copied().unwrap_or(0.0))
        .collect();
    Some(Hierarchy {
        ids,
        root,
        parent,
        edge_similarity,
        insertion_order,
        centrality,
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AlignmentRow {
    pub source: String,
    pub metric: SourceMetric,
    pub direction: String,
    /// Mean score of the mined tree's edges under this source.
    pub mined: MeanWithCi,
    /// Mean score of a tree extracted from the source itself.
    pub source_tree: MeanWithCi,
    /// Mean over random recursive trees on the same nodes.
    pub random: MeanWithCi,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClusterEvaluation {
    pub edge_accuracy: MeanWithCi,
    pub random_edge_accuracy: MeanWithCi,
    pub silhouette: MeanWithCi,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub structure: Vec<StructureReport>,
    pub cluster: Option<ClusterEvaluation>,
    pub alignment: Vec<AlignmentRow>,
}

const RANDOM_BASELINE_TREES: usize = 20;

/// Build a hierarchy from an external source: pairwise scores become a
/// symmetric similarity (distances negated so larger means closer), the
/// adjacency is the top-(K-1) sparsification, and extraction proceeds as
/// usual.
pub fn hierarchy_from_source(
    ids: &[String],
    source: &SimilaritySource,
) -> Result<Hierarchy, PipelineError> {
    let missing: Vec<String> = ids.iter().filter(|id| !source.covers(id)).cloned().collect();
    if !missing.is_empty() {
        return Err(PipelineError::Eval(eval::EvalError::MissingNodes(missing)));
    }
    let k = ids.len();
    let mut values = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let score = source.score(&ids[i], &ids[j]).expect("coverage checked");
            values[i * k + j] = match source.metric {
                SourceMetric::CosineSimilarity => score,
                SourceMetric::EuclideanDistance => -score,
            };
        }
    }
    // Average both orientations in case the source matrix is asymmetric.
    let mut sym_values = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            sym_values[i * k + j] = 0.5 * (values[i * k + j] + values[j * k + i]);
        }
    }
    let sym = SymmetricSimilarity::from_values(ids.to_vec(), sym_values);
    let graph = simgraph::sparse_graph(&sym, k.saturating_sub(1))?;
    Ok(hierarchy::extract_hierarchy(&sym, &graph)?)
}

fn load_source(spec: &SourceSpec) -> Result<SimilaritySource, PipelineError> {
    let path = require(spec.path.clone())?;
    match spec.kind {
        SourceKind::Embeddings => {
            let store = EmbeddingStore::load_csv(&path)?;
            let vectors: HashMap<String, Vec<f64>> = store
                .ids()
                .map(|id| (id.to_string(), store.get(id).unwrap().to_vec()))
                .collect();
            Ok(SimilaritySource::from_embeddings(
                &spec.name,
                spec.metric,
                vectors,
            ))
        }
        SourceKind::Matrix => {
            let matrix = read_similarity_csv(&path)?;
            let k = matrix.k();
            let mut values = Vec::with_capacity(k * k);
            for i in 0..k {
                for j in 0..k {
                    values.push(matrix.get(i, j));
                }
            }
            Ok(SimilaritySource::from_matrix(
                &spec.name,
                spec.metric,
                &matrix.ids,
                values,
            ))
        }
    }
}

fn mean_of_random_trees(
    ids: &[String],
    source: &SimilaritySource,
    seed: u64,
) -> Result<MeanWithCi, PipelineError> {
    let mut means = Vec::with_capacity(RANDOM_BASELINE_TREES);
    for k in 0..RANDOM_BASELINE_TREES {
        let tree = eval::random_hierarchy(ids.to_vec(), seed.wrapping_add(k as u64));
        means.push(eval::alignment_score(&tree, source)?.mean);
    }
    Ok(MeanWithCi::from_samples(&means))
}

/// `eval`: structure metrics for every graph file present, cluster agreement
/// when clusters.csv is available, and alignment rows for the concept-weight
/// source plus any configured external sources.
pub fn cmd_eval(config: &PipelineConfig) -> Result<(), PipelineError> {
    ensure_output_dir(config)?;
    let tree = load_tree(config)?;
    let sim_path = require(config.out("similarity.csv"))?;
    let s = read_similarity_csv(&sim_path)?;
    let sym = s.symmetric();

    let mut structure = vec![eval::hierarchy_structure(&tree)];
    for name in [
        "graph_A.json",
        "graph_undirected_A.json",
        "graph_sparse_A.json",
        "graph_top1.json",
        "graph_random_sparse_A.json",
        "graph_random_top1.json",
    ] {
        let path = config.out(name);
        if path.is_file() {
            let graph: WithProvenance<ConceptGraph> = read_json(&path)?;
            structure.push(eval::structure_metrics(&graph.body));
        }
    }

    // Explicit path, or the synth stage's clusters.csv when present.
    let clusters_path = config.clusters.clone().or_else(|| {
        let fallback = config.out("clusters.csv");
        fallback.is_file().then_some(fallback)
    });
    let cluster = match &clusters_path {
        Some(path) => {
            let clusters = read_clusters_csv(&require(path.clone())?)?;
            let edge_accuracy = eval::edge_cluster_accuracy(&tree, &clusters)?;
            let mut random_acc = Vec::with_capacity(RANDOM_BASELINE_TREES);
            for k in 0..RANDOM_BASELINE_TREES {
                let random = eval::random_hierarchy(
                    tree.ids.clone(),
                    config.seed.wrapping_add(k as u64),
                );
                random_acc.push(eval::edge_cluster_accuracy(&random, &clusters)?.mean);
            }
            Some(ClusterEvaluation {
                edge_accuracy,
                random_edge_accuracy: MeanWithCi::from_samples(&random_acc),
                silhouette: eval::silhouette(&sym, &clusters)?,
            })
        }
        None => None,
    };

    let mut alignment = Vec::new();
    let mut sources: Vec<SimilaritySource> = Vec::new();
    if let Ok(set) = load_cavs(config) {
        let kept = kept_of(&set)?;
        sources.push(eval::cav_weight_source(&kept, SourceMetric::EuclideanDistance));
    }
    for spec in &config.sources {
        sources.push(load_source(spec)?);
    }
    for source in &sources {
        let mined = eval::alignment_score(&tree, source)?;
        let source_tree = hierarchy_from_source(&tree.ids, source)?;
        let source_tree_score = eval::alignment_score(&source_tree, source)?;
        let random = mean_of_random_trees(&tree.ids, source, config.seed)?;
        alignment.push(AlignmentRow {
            source: source.name.clone(),
            metric: source.metric,
            direction: source.metric.direction().to_string(),
            mined,
            source_tree: source_tree_score,
            random,
        });
    }

    let mut outputs = StageOutputs::new();
    outputs.write_json(
        config.out("report.json"),
        &WithProvenance {
            provenance: Provenance::of(config),
            body: EvalReport {
                structure,
                cluster,
                alignment,
            },
        },
    )?;
    outputs.commit()
}

/// `pipeline`: synth (only when no external corpus is configured), then
/// learn, graph, tree, eval.
pub fn cmd_pipeline(config: &PipelineConfig) -> Result<(), PipelineError> {
    if config.embeddings.is_none() && !config.embeddings_path().is_file() {
        cmd_synth(config)?;
    }
    cmd_learn(config)?;
    cmd_graph(&config)?;
    cmd_tree(&config)?;
    cmd_eval(&config)?;
    Ok(())
}
