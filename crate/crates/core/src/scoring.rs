//! Sequence negative log-likelihood and text-candidate selection.

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoringError {
    #[error("step distribution has a negative or non-finite probability")]
    BadProbability,
    #[error("step probabilities sum to {0}, expected 1 within 1e-6")]
    NotNormalized(f64),
    #[error("{steps} step distributions for {targets} targets")]
    LengthMismatch { steps: usize, targets: usize },
    #[error("target id {id} at step {step} outside vocabulary of {vocab}")]
    TargetOutOfVocab { step: usize, id: usize, vocab: usize },
    #[error("no candidates to select from")]
    NoCandidates,
}

/// A probability distribution over the vocabulary for one decoding step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution {
    probs: Vec<f64>,
}

impl StepDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, ScoringError> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(ScoringError::BadProbability);
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(ScoringError::NotNormalized(sum));
        }
        Ok(Self { probs })
    }

    pub fn uniform(vocab: usize) -> Self {
        Self { probs: vec![1.0 / vocab as f64; vocab] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn vocab_size(&self) -> usize {
        self.probs.len()
    }
}

/// `-sum_i ln P(y_i)`, summed over the sequence (not averaged).
/// A zero target probability gives positive infinity.
pub fn sequence_nll(steps: &[StepDistribution], target: &[usize]) -> Result<f64, ScoringError> {
    if steps.len() != target.len() {
        return Err(ScoringError::LengthMismatch { steps: steps.len(), targets: target.len() });
    }
    let mut nll = 0.0;
    for (step, (dist, &id)) in steps.iter().zip(target).enumerate() {
        let p = *dist.probs.get(id).ok_or(ScoringError::TargetOutOfVocab {
            step,
            id,
            vocab: dist.vocab_size(),
        })?;
        nll -= p.ln();
    }
    // -0.0 for the empty and all-ones cases.
    Ok(nll + 0.0)
}

fn term_counts(s: &str) -> HashMap<String, u64> {
    let mut counts = HashMap::new();
    for w in s.split_whitespace() {
        *counts.entry(w.to_lowercase()).or_insert(0) += 1;
    }
    counts
}

/// Cosine similarity of case-folded whitespace-token count vectors.
pub fn text_similarity(a: &str, b: &str) -> f64 {
    let (ca, cb) = (term_counts(a), term_counts(b));
    if ca.is_empty() || cb.is_empty() {
        return 0.0;
    }
    let dot: u64 = ca.iter().map(|(w, n)| n * cb.get(w).copied().unwrap_or(0)).sum();
    let na: u64 = ca.values().map(|n| n * n).sum();
    let nb: u64 = cb.values().map(|n| n * n).sum();
    (dot as f64 / ((na as f64) * (nb as f64)).sqrt()).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub text: String,
    pub score: Option<f64>,
}

/// Index of the highest-scoring candidate (first on ties). Without a score
/// on every candidate the first one wins.
pub fn select_best(candidates: &[Candidate]) -> Result<usize, ScoringError> {
    if candidates.is_empty() {
        return Err(ScoringError::NoCandidates);
    }
    let scores: Option<Vec<f64>> = candidates.iter().map(|c| c.score).collect();
    let Some(scores) = scores else {
        return Ok(0);
    };
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(best)
}
