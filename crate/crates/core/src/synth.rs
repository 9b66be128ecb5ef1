//! Synthetic corpora with planted cluster structure.
//!
//! Each cluster has a prototype direction; each concept is a Gaussian bump
//! around its cluster prototype; each example is a noisy copy of its concept
//! mean. Separation is fully controlled by `prototype_scale`,
//! `concept_spread`, and `example_noise`, which makes pipeline recovery
//! testable at desk scale.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Concept, ConceptCatalog, EmbeddingStore};
use crate::eval::ClusterAssignment;
use crate::seeding::rng_for;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("dim {dim} < clusters {clusters}: orthogonal prototypes need dim >= clusters")]
    DimTooSmall { dim: usize, clusters: usize },
    #[error("all size fields must be positive")]
    ZeroSize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub dim: usize,
    pub clusters: usize,
    pub concepts_per_cluster: usize,
    pub examples_per_concept: usize,
    pub prototype_scale: f64,
    pub concept_spread: f64,
    pub example_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            dim: 16,
            clusters: 4,
            concepts_per_cluster: 4,
            examples_per_concept: 40,
            prototype_scale: 10.0,
            concept_spread: 0.5,
            example_noise: 0.1,
            seed: 0,
        }
    }
}

/// Generate a corpus: orthogonal basis prototypes scaled by
/// `prototype_scale`, concept means jittered by `concept_spread`, examples
/// jittered by `example_noise`. Deterministic per seed.
pub fn generate(
    config: &SynthConfig,
) -> Result<(EmbeddingStore, ConceptCatalog, ClusterAssignment), SynthError> {
    use rand_distr::{Distribution, StandardNormal};
    if config.dim == 0
        || config.clusters == 0
        || config.concepts_per_cluster == 0
        || config.examples_per_concept == 0
    {
        return Err(SynthError::ZeroSize);
    }
    if config.dim < config.clusters {
        return Err(SynthError::DimTooSmall {
            dim: config.dim,
            clusters: config.clusters,
        });
    }
    let d = config.dim;
    let mut store = EmbeddingStore::new(d);
    let mut concepts = Vec::new();
    let mut assignment = ClusterAssignment::new();
    for m in 0..config.clusters {
        let cluster_id = format!("k{m}");
        let mut prototype = vec![0.0; d];
        prototype[m] = config.prototype_scale;
        for c in 0..config.concepts_per_cluster {
            let concept_id = format!("k{m}_c{c}");
            let mut rng = rng_for(config.seed, &["synth", &concept_id]);
            let mut mean = prototype.clone();
            for v in &mut mean {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v += config.concept_spread * z;
            }
            let mut example_ids = Vec::with_capacity(config.examples_per_concept);
            for e in 0..config.examples_per_concept {
                let id = format!("{concept_id}_e{e}");
                let mut x = mean.clone();
                for v in &mut x {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *v += config.example_noise * z;
                }
                store
                    .insert(id.clone(), x)
                    .expect("generated ids are unique and finite");
                example_ids.push(id);
            }
            assignment.insert(concept_id.clone(), cluster_id.clone());
            concepts.push(Concept {
                id: concept_id.clone(),
                name: concept_id,
                examples: example_ids,
            });
        }
    }
    let catalog = ConceptCatalog::from_concepts(concepts).expect("generated concept ids unique");
    Ok((store, catalog, assignment))
}
