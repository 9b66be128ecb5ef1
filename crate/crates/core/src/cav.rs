//! Concept vectors: one regularized logistic regression per concept.
//!
//! A concept vector is the weight vector (plus bias) of a logistic regression
//! separating the concept's example embeddings from negatives sampled
//! uniformly from the other concepts' examples. Concepts whose held-out
//! accuracy falls below a threshold are dropped from the downstream graph.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ConceptCatalog, EmbeddingStore, SplitAssignment, SplitEntry};
use crate::seeding::{rng_for, sample_indices};

#[derive(Debug, Error)]
pub enum CavError {
    #[error("cannot learn a concept against an empty complement")]
    EmptyComplement,
    #[error("concept {0:?} not present in catalog")]
    UnknownConcept(String),
    #[error("no split available for concept {0:?}")]
    MissingSplit(String),
    #[error("example {example:?} of concept {concept:?} missing from store")]
    MissingEmbedding { concept: String, example: String },
    #[error("non-finite loss while training concept {concept:?} at iteration {iteration}")]
    NonFiniteLoss { concept: String, iteration: usize },
    #[error("no concept passed the accuracy filter")]
    EmptyKeptSet,
}

/// Learned concept vector with its held-out evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptVector {
    pub id: String,
    pub name: String,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub test_accuracy: f64,
    pub validation_accuracy: f64,
    pub converged: bool,
    pub kept: bool,
}

/// Training hyperparameters; every random draw is keyed off `seed`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub l2_lambda: f64,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub negatives_per_positive: f64,
    pub accuracy_threshold: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_lambda: 1.0,
            max_iterations: 1000,
            gradient_tolerance: 1e-6,
            negatives_per_positive: 1.0,
            accuracy_threshold: 0.70,
            seed: 0,
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Predicted probability that `x` belongs to the concept.
pub fn concept_probability(cav: &ConceptVector, x: &[f64]) -> f64 {
    debug_assert_eq!(cav.weights.len(), x.len());
    let z: f64 = cav.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + cav.bias;
    sigmoid(z)
}

const LOG_CLAMP: f64 = 1e-12;

/// Mean negative log-likelihood plus `(lambda/2)·||w||²`, and its exact
/// gradient. The bias is not regularized; probabilities are clamped to
/// `[1e-12, 1-1e-12]` before the log so the loss stays finite.
pub fn logistic_loss_grad(
    weights: &[f64],
    bias: f64,
    x: &[&[f64]],
    y: &[f64],
    l2_lambda: f64,
) -> (f64, Vec<f64>, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    assert!(n > 0, "empty batch");
    let d = weights.len();
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; d];
    let mut grad_b = 0.0;
    for (row, &label) in x.iter().zip(y) {
        debug_assert_eq!(row.len(), d);
        let z: f64 = weights.iter().zip(*row).map(|(w, v)| w * v).sum::<f64>() + bias;
        let p = sigmoid(z);
        let pc = p.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
        loss -= label * pc.ln() + (1.0 - label) * (1.0 - pc).ln();
        let residual = p - label;
        for (g, v) in grad_w.iter_mut().zip(*row) {
            *g += residual * v;
        }
        grad_b += residual;
    }
    let inv_n = 1.0 / n as f64;
    loss *= inv_n;
    grad_b *= inv_n;
    let mut penalty = 0.0;
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g = *g * inv_n + l2_lambda * w;
        penalty += w * w;
    }
    loss += 0.5 * l2_lambda * penalty;
    (loss, grad_w, grad_b)
}

/// Result of fitting one logistic regression.
#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub iterations: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
}

const ARMIJO_C: f64 = 1e-4;
const ARMIJO_SHRINK: f64 = 0.5;
const MIN_STEP: f64 = 1e-20;

/// Full-batch gradient descent with Armijo backtracking, starting from
/// `w = 0, b = 0`. Stops when the gradient infinity norm drops below `tol`
/// (converged) or after `max_iterations` / a failed line search.
pub fn fit_logistic(
    x: &[&[f64]],
    y: &[f64],
    l2_lambda: f64,
    max_iterations: usize,
    tol: f64,
) -> Result<LogisticFit, CavError> {
    let d = x.first().map_or(0, |row| row.len());
    let mut weights = vec![0.0; d];
    let mut bias = 0.0;
    let (mut loss, mut grad_w, mut grad_b) = logistic_loss_grad(&weights, bias, x, y, l2_lambda);
    let initial_loss = loss;
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..max_iterations {
        if !loss.is_finite() {
            return Err(CavError::NonFiniteLoss {
                concept: String::new(),
                iteration: iter,
            });
        }
        let grad_inf = grad_w
            .iter()
            .chain(std::iter::once(&grad_b))
            .fold(0.0f64, |m, g| m.max(g.abs()));
        if grad_inf < tol {
            converged = true;
            break;
        }
        let grad_sq: f64 = grad_w.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b;
        let mut step = 1.0;
        let mut accepted = None;
        while step >= MIN_STEP {
            let trial_w: Vec<f64> = weights
                .iter()
                .zip(&grad_w)
                .map(|(w, g)| w - step * g)
                .collect();
            let trial_b = bias - step * grad_b;
            let (trial_loss, tw, tb) = logistic_loss_grad(&trial_w, trial_b, x, y, l2_lambda);
            if trial_loss <= loss - ARMIJO_C * step * grad_sq {
                accepted = Some((trial_w, trial_b, trial_loss, tw, tb));
                break;
            }
            step *= ARMIJO_SHRINK;
        }
        match accepted {
            Some((w, b, l, gw, gb)) => {
                weights = w;
                bias = b;
                loss = l;
                grad_w = gw;
                grad_b = gb;
                iterations = iter + 1;
            }
            None => break, // line search stalled at machine precision
        }
    }
    // A stalled line search at a (near) stationary point still counts.
    if !converged {
        let grad_inf = grad_w
            .iter()
            .chain(std::iter::once(&grad_b))
            .fold(0.0f64, |m, g| m.max(g.abs()));
        converged = grad_inf < tol;
    }
    Ok(LogisticFit {
        weights,
        bias,
        converged,
        iterations,
        initial_loss,
        final_loss: loss,
    })
}

/// Which portion of the other concepts' splits negatives are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitRole {
    Train,
    Val,
    Test,
}

impl SplitRole {
    fn tag(self) -> &'static str {
        match self {
            SplitRole::Train => "train",
            SplitRole::Val => "val",
            SplitRole::Test => "test",
        }
    }

    fn of<'a>(self, entry: &'a SplitEntry) -> &'a [String] {
        match self {
            SplitRole::Train => &entry.train,
            SplitRole::Val => &entry.val,
            SplitRole::Test => &entry.test,
        }
    }
}

/// Negatives drawn for one concept, with a flag set when the pool was smaller
/// than the requested count.
#[derive(Debug, Clone)]
pub struct NegativeDraw {
    pub ids: Vec<String>,
    pub capped: bool,
}

/// Draw negatives uniformly without replacement from the union of the other
/// concepts' ids in the given split role. Deterministic per
/// `(seed, role, concept_id)`.
pub fn sample_negatives(
    concept_id: &str,
    catalog: &ConceptCatalog,
    split: &SplitAssignment,
    role: SplitRole,
    requested: usize,
    seed: u64,
) -> Result<NegativeDraw, CavError> {
    let mut pool: Vec<&String> = Vec::new();
    for concept in catalog.concepts() {
        if concept.id == concept_id {
            continue;
        }
        let entry = split
            .concepts
            .get(&concept.id)
            .ok_or_else(|| CavError::MissingSplit(concept.id.clone()))?;
        pool.extend(role.of(entry));
    }
    pool.sort_unstable();
    pool.dedup();
    if pool.is_empty() {
        return Err(CavError::EmptyComplement);
    }
    let capped = requested > pool.len();
    let mut rng = rng_for(seed, &["negatives", role.tag(), concept_id]);
    let ids = sample_indices(&mut rng, pool.len(), requested)
        .into_iter()
        .map(|i| pool[i].clone())
        .collect();
    Ok(NegativeDraw { ids, capped })
}

fn gather<'a>(
    store: &'a EmbeddingStore,
    concept: &str,
    ids: &[String],
) -> Result<Vec<&'a [f64]>, CavError> {
    ids.iter()
        .map(|id| {
            store.get(id).ok_or_else(|| CavError::MissingEmbedding {
                concept: concept.to_string(),
                example: id.clone(),
            })
        })
        .collect()
}

fn accuracy(cav_w: &[f64], cav_b: f64, pos: &[&[f64]], neg: &[&[f64]]) -> f64 {
    let mut correct = 0usize;
    for row in pos {
        let z: f64 = cav_w.iter().zip(*row).map(|(w, v)| w * v).sum::<f64>() + cav_b;
        if sigmoid(z) >= 0.5 {
            correct += 1;
        }
    }
    for row in neg {
        let z: f64 = cav_w.iter().zip(*row).map(|(w, v)| w * v).sum::<f64>() + cav_b;
        if sigmoid(z) < 0.5 {
            correct += 1;
        }
    }
    correct as f64 / (pos.len() + neg.len()) as f64
}

/// Train one concept vector: positives are the concept's train split,
/// negatives a balanced draw from the other concepts' train splits. Held-out
/// accuracy is measured on the test (resp. validation) splits with negatives
/// drawn from the matching portions.
pub fn train_cav(
    concept_id: &str,
    catalog: &ConceptCatalog,
    store: &EmbeddingStore,
    split: &SplitAssignment,
    config: &TrainConfig,
) -> Result<ConceptVector, CavError> {
    let concept = catalog
        .get(concept_id)
        .ok_or_else(|| CavError::UnknownConcept(concept_id.to_string()))?;
    let entry = split
        .concepts
        .get(concept_id)
        .ok_or_else(|| CavError::MissingSplit(concept_id.to_string()))?;

    let want = |n: usize| (config.negatives_per_positive * n as f64).round() as usize;

    let train_neg = sample_negatives(
        concept_id,
        catalog,
        split,
        SplitRole::Train,
        want(entry.train.len()),
        config.seed,
    )?;
    let pos = gather(store, concept_id, &entry.train)?;
    let neg = gather(store, concept_id, &train_neg.ids)?;
    let mut rows: Vec<&[f64]> = Vec::with_capacity(pos.len() + neg.len());
    let mut labels: Vec<f64> = Vec::with_capacity(pos.len() + neg.len());
    rows.extend(&pos);
    labels.extend(std::iter::repeat(1.0).take(pos.len()));
    rows.extend(&neg);
    labels.extend(std::iter::repeat(0.0).take(neg.len()));

    let fit = fit_logistic(
        &rows,
        &labels,
        config.l2_lambda,
        config.max_iterations,
        config.gradient_tolerance,
    )
    .map_err(|e| match e {
        CavError::NonFiniteLoss { iteration, .. } => CavError::NonFiniteLoss {
            concept: concept_id.to_string(),
            iteration,
        },
        other => other,
    })?;

    let eval = |role: SplitRole, positives: &[String]| -> Result<f64, CavError> {
        if positives.is_empty() {
            return Ok(0.0);
        }
        let draw = sample_negatives(
            concept_id,
            catalog,
            split,
            role,
            want(positives.len()),
            config.seed,
        )?;
        let pos = gather(store, concept_id, positives)?;
        let neg = gather(store, concept_id, &draw.ids)?;
        Ok(accuracy(&fit.weights, fit.bias, &pos, &neg))
    };

    let test_accuracy = eval(SplitRole::Test, &entry.test)?;
    let validation_accuracy = eval(SplitRole::Val, &entry.val)?;
    let kept = fit.converged && test_accuracy >= config.accuracy_threshold;

    Ok(ConceptVector {
        id: concept.id.clone(),
        name: concept.name.clone(),
        weights: fit.weights,
        bias: fit.bias,
        test_accuracy,
        validation_accuracy,
        converged: fit.converged,
        kept,
    })
}

/// Train every concept of the catalog. Training is parallel across concepts;
/// per-concept seeding makes the result independent of scheduling.
pub fn train_all(
    catalog: &ConceptCatalog,
    store: &EmbeddingStore,
    split: &SplitAssignment,
    config: &TrainConfig,
) -> Result<Vec<ConceptVector>, CavError> {
    use rayon::prelude::*;
    catalog
        .concepts()
        .par_iter()
        .map(|c| train_cav(&c.id, catalog, store, split, config))
        .collect()
}

/// Keep concepts with `test_accuracy >= threshold` that converged, preserving
/// order. Errors if nothing survives, since the downstream graph would be
/// undefined.
pub fn filter_cavs(cavs: &[ConceptVector], threshold: f64) -> Result<Vec<ConceptVector>, CavError> {
    let kept: Vec<ConceptVector> = cavs
        .iter()
        .filter(|c| c.converged && c.test_accuracy >= threshold)
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(CavError::EmptyKeptSet);
    }
    Ok(kept)
}

/// Serialized set of trained concept vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CavSet {
    pub dim: usize,
    pub accuracy_threshold: f64,
    pub concepts: Vec<ConceptVector>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::split_catalog;
    use crate::corpus::Concept;

    fn finite_diff(
        weights: &[f64],
        bias: f64,
        x: &[&[f64]],
        y: &[f64],
        lambda: f64,
    ) -> (Vec<f64>, f64) {
        let eps = 1e-5;
        let mut grad_w = vec![0.0; weights.len()];
        for k in 0..weights.len() {
            let mut wp = weights.to_vec();
            let mut wm = weights.to_vec();
            wp[k] += eps;
            wm[k] -= eps;
            let (lp, _, _) = logistic_loss_grad(&wp, bias, x, y, lambda);
            let (lm, _, _) = logistic_loss_grad(&wm, bias, x, y, lambda);
            grad_w[k] = (lp - lm) / (2.0 * eps);
        }
        let (lp, _, _) = logistic_loss_grad(weights, bias + eps, x, y, lambda);
        let (lm, _, _) = logistic_loss_grad(weights, bias - eps, x, y, lambda);
        (grad_w, (lp - lm) / (2.0 * eps))
    }

    #[test]
    fn zero_weights_loss_is_ln2() {
        let rows: Vec<&[f64]> = vec![&[1.0, -2.0], &[0.5, 3.0], &[-1.0, 0.0]];
        let y = [1.0, 0.0, 1.0];
        let (loss, _, _) = logistic_loss_grad(&[0.0, 0.0], 0.0, &rows, &y, 0.0);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn single_point_closed_form() {
        // x=(1), y=1, w=(ln 3), b=0: p=0.75, loss=-ln 0.75, grad_w=(p-1)x=-0.25
        let w = [3.0f64.ln()];
        let rows: Vec<&[f64]> = vec![&[1.0]];
        let (loss, grad_w, grad_b) = logistic_loss_grad(&w, 0.0, &rows, &[1.0], 0.0);
        assert!((loss - -(0.75f64.ln())).abs() < 1e-12);
        assert!((loss - 0.287682).abs() < 1e-6);
        assert!((grad_w[0] - -0.25).abs() < 1e-12);
        assert!((grad_b - -0.25).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        use rand::Rng;
        let mut rng = rng_for(99, &["gradcheck"]);
        for case in 0..50 {
            let n = rng.gen_range(1..=20);
            let d = rng.gen_range(1..=8);
            let lambda = if case % 2 == 0 { 0.0 } else { 1.0 };
            let data: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let rows: Vec<&[f64]> = data.iter().map(|r| r.as_slice()).collect();
            let y: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..2))).collect();
            let weights: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let bias = rng.gen_range(-1.0..1.0);
            let (_, grad_w, grad_b) = logistic_loss_grad(&weights, bias, &rows, &y, lambda);
            let (fd_w, fd_b) = finite_diff(&weights, bias, &rows, &y, lambda);
            for (a, f) in grad_w.iter().zip(&fd_w) {
                let scale = a.abs().max(f.abs()).max(1e-8);
                assert!((a - f).abs() / scale <= 1e-4, "w: {a} vs {f}");
            }
            let scale = grad_b.abs().max(fd_b.abs()).max(1e-8);
            assert!((grad_b - fd_b).abs() / scale <= 1e-4, "b: {grad_b} vs {fd_b}");
        }
    }

    #[test]
    fn fit_loss_non_increasing() {
        use rand::Rng;
        let mut rng = rng_for(5, &["fitloss"]);
        let data: Vec<Vec<f64>> = (0..30)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let rows: Vec<&[f64]> = data.iter().map(|r| r.as_slice()).collect();
        let y: Vec<f64> = (0..30).map(|i| f64::from(i % 2)).collect();
        let fit = fit_logistic(&rows, &y, 0.1, 200, 1e-8).unwrap();
        assert!(fit.final_loss <= fit.initial_loss);
    }

    #[test]
    fn sigmoid_evaluations() {
        let cav = ConceptVector {
            id: "c".into(),
            name: "c".into(),
            weights: vec![1.0, 0.0],
            bias: 0.0,
            test_accuracy: 1.0,
            validation_accuracy: 1.0,
            converged: true,
            kept: true,
        };
        assert!((concept_probability(&cav, &[3.0f64.ln(), 7.0]) - 0.75).abs() < 1e-12);
        let zero = ConceptVector {
            weights: vec![0.0, 0.0],
            ..cav.clone()
        };
        assert_eq!(concept_probability(&zero, &[12.0, -4.0]), 0.5);
        let one_d = ConceptVector {
            weights: vec![1.0],
            ..cav
        };
        assert!((concept_probability(&one_d, &[-(3.0f64.ln())]) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_symmetry() {
        for z in [-40.0, -3.3, -0.1, 0.0, 2.7, 55.0] {
            assert!((sigmoid(-z) - (1.0 - sigmoid(z))).abs() < 1e-15);
        }
    }

    fn blob_corpus(
        centers: &[(f64, f64)],
        per_concept: usize,
        spread: f64,
        seed: u64,
    ) -> (EmbeddingStore, ConceptCatalog) {
        use rand::Rng;
        let mut store = EmbeddingStore::new(2);
        let mut concepts = Vec::new();
        let mut rng = rng_for(seed, &["blobs"]);
        for (ci, (cx, cy)) in centers.iter().enumerate() {
            let mut ids = Vec::new();
            for k in 0..per_concept {
                let id = format!("c{ci}_e{k}");
                let v = vec![
                    cx + rng.gen_range(-spread..spread),
                    cy + rng.gen_range(-spread..spread),
                ];
                store.insert(id.clone(), v).unwrap();
                ids.push(id);
            }
            concepts.push(Concept {
                id: format!("c{ci}"),
                name: format!("c{ci}"),
                examples: ids,
            });
        }
        (store, ConceptCatalog::from_concepts(concepts).unwrap())
    }

    #[test]
    fn separable_blobs_reach_perfect_accuracy() {
        let (store, catalog) = blob_corpus(&[(5.0, 0.0), (-5.0, 0.0)], 50, 0.1, 11);
        let split = split_catalog(&catalog, 11, 10).unwrap();
        let config = TrainConfig {
            l2_lambda: 1.0,
            seed: 11,
            ..TrainConfig::default()
        };
        let cav = train_cav("c0", &catalog, &store, &split, &config).unwrap();
        assert_eq!(cav.test_accuracy, 1.0, "separable data must classify perfectly");
    }

    #[test]
    fn indistinguishable_classes_hover_at_chance() {
        // Two concepts over the same point distribution.
        let (store, catalog) = blob_corpus(&[(0.0, 0.0), (0.0, 0.0)], 100, 1.0, 13);
        let split = split_catalog(&catalog, 13, 10).unwrap();
        let config = TrainConfig {
            seed: 13,
            ..TrainConfig::default()
        };
        let cav = train_cav("c0", &catalog, &store, &split, &config).unwrap();
        assert!(
            (cav.test_accuracy - 0.5).abs() <= 0.25,
            "accuracy {} should be near chance",
            cav.test_accuracy
        );
    }

    #[test]
    fn negatives_counts_and_determinism() {
        let (store, catalog) = blob_corpus(&[(5.0, 0.0), (-5.0, 0.0)], 40, 0.1, 7);
        let _ = store;
        let split = split_catalog(&catalog, 7, 10).unwrap();
        let a = sample_negatives(&catalog.concepts()[0].id, &catalog, &split, SplitRole::Train, 28, 7)
            .unwrap();
        assert_eq!(a.ids.len(), 28);
        assert!(!a.capped);
        let b = sample_negatives(&catalog.concepts()[0].id, &catalog, &split, SplitRole::Train, 28, 7)
            .unwrap();
        assert_eq!(a.ids, b.ids);
        // Pool (28 train ids of c1) smaller than requested 100.
        let c = sample_negatives(&catalog.concepts()[0].id, &catalog, &split, SplitRole::Train, 100, 7)
            .unwrap();
        assert_eq!(c.ids.len(), 28);
        assert!(c.capped);
    }

    #[test]
    fn filter_threshold_rule() {
        let mk = |acc: f64| ConceptVector {
            id: format!("c{acc}"),
            name: String::new(),
            weights: vec![0.0],
            bias: 0.0,
            test_accuracy: acc,
            validation_accuracy: acc,
            converged: true,
            kept: false,
        };
        let cavs = vec![mk(0.9), mk(0.69), mk(0.71)];
        let kept = filter_cavs(&cavs, 0.7).unwrap();
        let ids: Vec<&str> = kept.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, vec!["c0.9", "c0.71"]);
        assert_eq!(filter_cavs(&cavs, 0.0).unwrap().len(), 3);
        assert!(matches!(
            filter_cavs(&cavs, 1.01),
            Err(CavError::EmptyKeptSet)
        ));
    }

    #[test]
    fn filter_monotone_in_threshold() {
        use rand::Rng;
        let mut rng = rng_for(3, &["monotone"]);
        let cavs: Vec<ConceptVector> = (0..30)
            .map(|i| ConceptVector {
                id: format!("c{i}"),
                name: String::new(),
                weights: vec![0.0],
                bias: 0.0,
                test_accuracy: rng.gen_range(0.0..1.0),
                validation_accuracy: 0.0,
                converged: rng.gen_bool(0.9),
                kept: false,
            })
            .collect();
        let lo: Vec<String> = filter_cavs(&cavs, 0.3)
            .map(|v| v.into_iter().map(|c| c.id).collect())
            .unwrap_or_default();
        let hi: Vec<String> = filter_cavs(&cavs, 0.6)
            .map(|v| v.into_iter().map(|c| c.id).collect())
            .unwrap_or_default();
        assert!(hi.iter().all(|id| lo.contains(id)));
    }

    #[test]
    fn training_is_deterministic() {
        let (store, catalog) = blob_corpus(&[(5.0, 0.0), (-5.0, 0.0), (0.0, 5.0)], 30, 0.5, 21);
        let split = split_catalog(&catalog, 21, 10).unwrap();
        let config = TrainConfig {
            seed: 21,
            ..TrainConfig::default()
        };
        let a = train_all(&catalog, &store, &split, &config).unwrap();
        let b = train_all(&catalog, &store, &split, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scaling_invariance_of_initial_iterate() {
        // sigma(<w/c, c*x>) == sigma(<w, x>)
        let w = [0.3, -1.2, 0.7];
        let x = [1.5, 0.25, -2.0];
        let c = 37.5;
        let scaled_w: Vec<f64> = w.iter().map(|v| v / c).collect();
        let scaled_x: Vec<f64> = x.iter().map(|v| v * c).collect();
        let z1: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
        let z2: f64 = scaled_w.iter().zip(&scaled_x).map(|(a, b)| a * b).sum();
        assert!((sigmoid(z1) - sigmoid(z2)).abs() < 1e-12);
    }
}
