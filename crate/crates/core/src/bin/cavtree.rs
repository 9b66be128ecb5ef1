use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cavtree::eval::SourceMetric;
use cavtree::pipeline::{self, PipelineConfig, SourceKind, SourceSpec};

/// Learn concept vectors from example sets over precomputed embeddings,
/// build a concept similarity graph, extract a hierarchy, and evaluate it.
#[derive(Parser)]
#[command(name = "cavtree", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with planted cluster structure
    Synth(CommonArgs),
    /// Train one concept vector per concept and filter by held-out accuracy
    Learn(CommonArgs),
    /// Compute the similarity matrix and all graph variants
    Graph(CommonArgs),
    /// Extract the concept hierarchy (tree.json + tree.dot)
    Tree(CommonArgs),
    /// Evaluate structure, cluster agreement, and source alignment
    Eval(CommonArgs),
    /// Run every stage in order
    Pipeline(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; flags given here override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (env CAVTREE_OUT_DIR, default "out")
    #[arg(long, env = "CAVTREE_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Embeddings CSV (header id,v0,...,v{d-1})
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Concepts JSONL ({"id","name","examples"} per line)
    #[arg(long)]
    concepts: Option<PathBuf>,
    /// Ground-truth clusters CSV (id,cluster) for evaluation
    #[arg(long)]
    clusters: Option<PathBuf>,
    /// Global seed; every random draw in every stage flows from it
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for concept training (0 = library default)
    #[arg(long)]
    workers: Option<usize>,
    /// Minimum resolvable examples per concept
    #[arg(long)]
    min_examples: Option<usize>,
    /// L2 penalty on concept weights
    #[arg(long)]
    l2_lambda: Option<f64>,
    /// Gradient descent iteration cap
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Stop when the gradient infinity norm drops below this
    #[arg(long)]
    gradient_tolerance: Option<f64>,
    /// Negatives sampled per positive example
    #[arg(long)]
    negatives_per_positive: Option<f64>,
    /// Held-out accuracy below which a concept is dropped
    #[arg(long)]
    accuracy_threshold: Option<f64>,
    /// Accuracy histogram bin width in the learning report
    #[arg(long)]
    histogram_bin_width: Option<f64>,
    /// External similarity source, as name:kind:metric:path
    /// (kind: embeddings|matrix; metric: cosine|euclidean); repeatable
    #[arg(long = "source", value_name = "SPEC")]
    sources: Vec<String>,
    /// Synthetic corpus: embedding dimension
    #[arg(long)]
    synth_dim: Option<usize>,
    /// Synthetic corpus: number of planted clusters
    #[arg(long)]
    synth_clusters: Option<usize>,
    /// Synthetic corpus: concepts per cluster
    #[arg(long)]
    synth_concepts: Option<usize>,
    /// Synthetic corpus: examples per concept
    #[arg(long)]
    synth_examples: Option<usize>,
    /// Synthetic corpus: cluster prototype scale
    #[arg(long)]
    synth_scale: Option<f64>,
    /// Synthetic corpus: concept mean spread around the prototype
    #[arg(long)]
    synth_spread: Option<f64>,
    /// Synthetic corpus: per-example noise
    #[arg(long)]
    synth_noise: Option<f64>,
}

fn parse_source(spec: &str) -> Result<SourceSpec, String> {
    let mut parts = spec.splitn(4, ':');
    let name = parts.next().unwrap_or("");
    let kind = parts.next().unwrap_or("");
    let metric = parts.next().unwrap_or("");
    let path = parts.next().unwrap_or("");
    if name.is_empty() || path.is_empty() {
        return Err(format!(
            "bad --source {spec:?}: expected name:kind:metric:path"
        ));
    }
    let kind = match kind {
        "embeddings" => SourceKind::Embeddings,
        "matrix" => SourceKind::Matrix,
        other => return Err(format!("bad source kind {other:?}: embeddings|matrix")),
    };
    let metric = match metric {
        "cosine" => SourceMetric::CosineSimilarity,
        "euclidean" => SourceMetric::EuclideanDistance,
        other => return Err(format!("bad source metric {other:?}: cosine|euclidean")),
    };
    Ok(SourceSpec {
        name: name.to_string(),
        path: PathBuf::from(path),
        kind,
        metric,
    })
}

fn build_config(args: &CommonArgs) -> Result<PipelineConfig, String> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            serde_json::from_str(&text)
                .map_err(|e| format!("bad config {}: {e}", path.display()))?
        }
        None => PipelineConfig::default(),
    };
    macro_rules! set {
        ($field:ident) => {
            if let Some(v) = &args.$field {
                config.$field = v.clone();
            }
        };
    }
    if let Some(dir) = &args.out_dir {
        config.output_dir = dir.clone();
    }
    if let Some(path) = &args.embeddings {
        config.embeddings = Some(path.clone());
    }
    if let Some(path) = &args.concepts {
        config.concepts = Some(path.clone());
    }
    if let Some(path) = &args.clusters {
        config.clusters = Some(path.clone());
    }
    set!(seed);
    set!(workers);
    set!(min_examples);
    set!(l2_lambda);
    set!(max_iterations);
    set!(gradient_tolerance);
    set!(negatives_per_positive);
    set!(accuracy_threshold);
    set!(histogram_bin_width);
    if let Some(v) = args.synth_dim {
        config.synth.dim = v;
    }
    if let Some(v) = args.synth_clusters {
        config.synth.clusters = v;
    }
    if let Some(v) = args.synth_concepts {
        config.synth.concepts_per_cluster = v;
    }
    if let Some(v) = args.synth_examples {
        config.synth.examples_per_concept = v;
    }
    if let Some(v) = args.synth_scale {
        config.synth.prototype_scale = v;
    }
    if let Some(v) = args.synth_spread {
        config.synth.concept_spread = v;
    }
    if let Some(v) = args.synth_noise {
        config.synth.example_noise = v;
    }
    for spec in &args.sources {
        config.sources.push(parse_source(spec)?);
    }
    config.synth.seed = config.seed;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (
        &CommonArgs,
        fn(&PipelineConfig) -> Result<(), pipeline::PipelineError>,
    ) = match &cli.command {
        Command::Synth(a) => (a, pipeline::cmd_synth),
        Command::Learn(a) => (a, pipeline::cmd_learn),
        Command::Graph(a) => (a, pipeline::cmd_graph),
        Command::Tree(a) => (a, pipeline::cmd_tree),
        Command::Eval(a) => (a, pipeline::cmd_eval),
        Command::Pipeline(a) => (a, pipeline::cmd_pipeline),
    };
    let config = match build_config(args) {
        Ok(c) => c,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(3);
        }
    };
    match run(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
