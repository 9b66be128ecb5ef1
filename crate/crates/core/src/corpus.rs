//! Embedding tables, concept example sets, and deterministic splits.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeding::rng_for;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("dimension mismatch at row {row}: expected {expected} values, found {found}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("duplicate id {id:?} at row {row}")]
    DuplicateId { row: usize, id: String },
    #[error("empty id at row {row}")]
    EmptyId { row: usize },
    #[error("invalid number at row {row}, column {column}: {value:?}")]
    BadNumber {
        row: usize,
        column: usize,
        value: String,
    },
    #[error("invalid embeddings header: expected `id,v0,...`, found {0:?}")]
    BadHeader(String),
    #[error("invalid concepts line {line}: {message}")]
    BadConceptLine { line: usize, message: String },
    #[error("duplicate concept id {0:?}")]
    DuplicateConcept(String),
    #[error("too few examples for split: {found} < {required}")]
    TooFewExamples { found: usize, required: usize },
}

/// Immutable table of example embeddings, `id -> R^dim`.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    entries: IndexMap<String, Vec<f64>>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        EmbeddingStore {
            dim,
            entries: IndexMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.entries.get(id).map(|v| v.as_slice())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    /// Insert one entry; the vector must match `dim` and be finite.
    pub fn insert(&mut self, id: String, vector: Vec<f64>) -> Result<(), CorpusError> {
        let row = self.entries.len() + 2; // header is row 1
        if id.is_empty() {
            return Err(CorpusError::EmptyId { row });
        }
        if vector.len() != self.dim {
            return Err(CorpusError::DimensionMismatch {
                row,
                expected: self.dim,
                found: vector.len(),
            });
        }
        if let Some(column) = vector.iter().position(|v| !v.is_finite()) {
            return Err(CorpusError::NonFinite { row, column });
        }
        if self.entries.contains_key(&id) {
            return Err(CorpusError::DuplicateId { row, id });
        }
        self.entries.insert(id, vector);
        Ok(())
    }

    /// Load from CSV with header `id,v0,...,v{d-1}`; dim is inferred.
    pub fn load_csv(path: &Path) -> Result<Self, CorpusError> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => CorpusError::Io {
                path: path.display().to_string(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => CorpusError::Csv(e),
        })?;
        let headers = reader.headers()?.clone();
        if headers.is_empty() || headers.get(0) != Some("id") {
            return Err(CorpusError::BadHeader(headers.iter().collect::<Vec<_>>().join(",")));
        }
        let dim = headers.len() - 1;
        for (k, name) in headers.iter().skip(1).enumerate() {
            if name != format!("v{k}") {
                return Err(CorpusError::BadHeader(
                    headers.iter().collect::<Vec<_>>().join(","),
                ));
            }
        }
        let mut store = EmbeddingStore::new(dim);
        for (k, record) in reader.records().enumerate() {
            let row = k + 2;
            let record = record?;
            if record.len() != dim + 1 {
                return Err(CorpusError::DimensionMismatch {
                    row,
                    expected: dim,
                    found: record.len().saturating_sub(1),
                });
            }
            let id = record.get(0).unwrap_or("").to_string();
            if id.is_empty() {
                return Err(CorpusError::EmptyId { row });
            }
            let mut vector = Vec::with_capacity(dim);
            for (column, field) in record.iter().skip(1).enumerate() {
                let value: f64 = field.parse().map_err(|_| CorpusError::BadNumber {
                    row,
                    column,
                    value: field.to_string(),
                })?;
                if !value.is_finite() {
                    return Err(CorpusError::NonFinite { row, column });
                }
                vector.push(value);
            }
            if store.contains(&id) {
                return Err(CorpusError::DuplicateId { row, id });
            }
            store.entries.insert(id, vector);
        }
        Ok(store)
    }

    /// Write the store back out in the same CSV format, full precision.
    pub fn save_csv(&self, path: &Path) -> Result<(), CorpusError> {
        let mut writer = csv::Writer::from_path(path).map_err(|e| CorpusError::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(e.to_string()),
        })?;
        let mut header = vec!["id".to_string()];
        header.extend((0..self.dim).map(|k| format!("v{k}")));
        writer.write_record(&header)?;
        for (id, vector) in &self.entries {
            let mut record = vec![id.clone()];
            // Ryu shortest representation round-trips f64 exactly.
            record.extend(vector.iter().map(|v| format!("{v}")));
            writer.write_record(&record)?;
        }
        writer.flush().map_err(|e| CorpusError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(())
    }
}

/// One named concept with its positive example ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Concept {
    pub id: String,
    pub name: String,
    pub examples: Vec<String>,
}

/// Ordered list of concepts; ids unique, examples resolved against a store.
#[derive(Debug, Clone, Default)]
pub struct ConceptCatalog {
    concepts: Vec<Concept>,
}

/// Per-concept outcome of loading a catalog against a store.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CatalogReport {
    /// concept id -> number of example ids that did not resolve
    pub dropped_ids: BTreeMap<String, usize>,
    /// concepts rejected for having fewer than `min_examples` resolvable ids
    pub rejected: Vec<String>,
}

impl ConceptCatalog {
    pub fn from_concepts(concepts: Vec<Concept>) -> Result<Self, CorpusError> {
        let mut seen = std::collections::HashSet::new();
        for c in &concepts {
            if !seen.insert(c.id.clone()) {
                return Err(CorpusError::DuplicateConcept(c.id.clone()));
            }
        }
        Ok(ConceptCatalog { concepts })
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn get(&self, id: &str) -> Option<&Concept> {
        self.concepts.iter().find(|c| c.id == id)
    }

    /// Load a JSONL catalog, dropping example ids missing from `store` and
    /// rejecting concepts left with fewer than `min_examples` ids.
    pub fn load_jsonl(
        path: &Path,
        store: &EmbeddingStore,
        min_examples: usize,
    ) -> Result<(Self, CatalogReport), CorpusError> {
        let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let reader = BufReader::new(file);
        let mut concepts = Vec::new();
        let mut report = CatalogReport::default();
        let mut seen = std::collections::HashSet::new();
        for (k, line) in reader.lines().enumerate() {
            let line_no = k + 1;
            let line = line.map_err(|source| CorpusError::Io {
                path: path.display().to_string(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let concept: Concept =
                serde_json::from_str(&line).map_err(|e| CorpusError::BadConceptLine {
                    line: line_no,
                    message: e.to_string(),
                })?;
            if concept.id.is_empty() {
                return Err(CorpusError::BadConceptLine {
                    line: line_no,
                    message: "empty concept id".to_string(),
                });
            }
            if !seen.insert(concept.id.clone()) {
                return Err(CorpusError::DuplicateConcept(concept.id));
            }
            let before = concept.examples.len();
            let mut resolved: Vec<String> = Vec::with_capacity(before);
            let mut seen_example = std::collections::HashSet::new();
            for id in concept.examples {
                if store.contains(&id) && seen_example.insert(id.clone()) {
                    resolved.push(id);
                }
            }
            let dropped = before - resolved.len();
            if dropped > 0 {
                report.dropped_ids.insert(concept.id.clone(), dropped);
            }
            if resolved.len() < min_examples {
                report.rejected.push(concept.id);
                continue;
            }
            concepts.push(Concept {
                id: concept.id,
                name: concept.name,
                examples: resolved,
            });
        }
        Ok((ConceptCatalog { concepts }, report))
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<(), CorpusError> {
        let mut file = std::fs::File::create(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        for concept in &self.concepts {
            let line = serde_json::to_string(concept).expect("concept serializes");
            writeln!(file, "{line}").map_err(|source| CorpusError::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
        Ok(())
    }
}

/// Train/validation/test ids for one concept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitEntry {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

/// Splits for a whole catalog, keyed by concept id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: u64,
    pub concepts: BTreeMap<String, SplitEntry>,
}

/// Minimum examples a concept needs before it can be split 70/10/20 and still
/// hold out at least 2 test ids.
pub const DEFAULT_MIN_EXAMPLES: usize = 10;

/// Deterministically split one concept's example ids 70/10/20.
///
/// The shuffle is keyed by `(seed, concept_id)` over the *sorted* id list, so
/// the assignment depends only on the id set, and splits of other concepts are
/// unaffected by catalog edits. Validation gets `floor(0.1 n)`, test
/// `floor(0.2 n)`, train the remainder.
pub fn split_concept(
    concept_id: &str,
    example_ids: &[String],
    seed: u64,
    min_examples: usize,
) -> Result<SplitEntry, CorpusError> {
    let n = example_ids.len();
    if n < min_examples {
        return Err(CorpusError::TooFewExamples {
            found: n,
            required: min_examples,
        });
    }
    let mut ids: Vec<String> = example_ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let n = ids.len();
    let mut rng = rng_for(seed, &["split", concept_id]);
    use rand::seq::SliceRandom;
    ids.shuffle(&mut rng);
    let n_val = n / 10;
    let n_test = n / 5;
    let test = ids.split_off(n - n_test);
    let val = ids.split_off(n - n_test - n_val);
    let train = ids;
    Ok(SplitEntry { train, val, test })
}

/// Split every concept of a catalog.
pub fn split_catalog(
    catalog: &ConceptCatalog,
    seed: u64,
    min_examples: usize,
) -> Result<SplitAssignment, CorpusError> {
    let mut concepts = BTreeMap::new();
    for concept in catalog.concepts() {
        let entry = split_concept(&concept.id, &concept.examples, seed, min_examples)?;
        concepts.insert(concept.id.clone(), entry);
    }
    Ok(SplitAssignment { seed, concepts })
}
