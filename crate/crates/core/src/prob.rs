//! Probability vectors, the cross-entropy loss, and the shared optimizer
//! configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to probabilities before taking a log, so losses and
/// gradients stay finite at saturated outputs.
pub const LOG_FLOOR: f64 = 1e-12;

/// A normalized class distribution: entries >= 0 summing to 1 within 1e-6.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    probs: Vec<f64>,
}

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Domain("empty probability vector".into()));
        }
        let mut sum = 0.0;
        for &p in &probs {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Domain(format!("invalid probability {p}")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Domain(format!(
                "probabilities sum to {sum}, expected 1 within 1e-6"
            )));
        }
        Ok(ProbVector { probs })
    }

    /// Numerically stable softmax (max-subtraction) over raw logits.
    pub fn from_logits(logits: &[f64]) -> Result<Self> {
        if logits.is_empty() {
            return Err(Error::Domain("empty logit vector".into()));
        }
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|&z| (z - m).exp()).collect();
        let sum: f64 = exps.iter().sum();
        Ok(ProbVector {
            probs: exps.into_iter().map(|e| e / sum).collect(),
        })
    }

    pub fn uniform(num_classes: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::Domain("uniform over zero classes".into()));
        }
        Ok(ProbVector {
            probs: vec![1.0 / num_classes as f64; num_classes],
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, class: usize) -> Result<f64> {
        self.probs
            .get(class)
            .copied()
            .ok_or_else(|| Error::Index(format!("class {class} of {}", self.probs.len())))
    }
}

/// `-log(probs[target])` with the probability floored at [`LOG_FLOOR`].
pub fn cross_entropy(probs: &ProbVector, target: usize) -> Result<f64> {
    let p = probs.get(target)?;
    Ok(-p.max(LOG_FLOOR).ln())
}

/// Index of the maximum probability; ties break toward the lowest index.
pub fn argmax_label(probs: &ProbVector) -> Result<usize> {
    if probs.is_empty() {
        return Err(Error::Domain("argmax of empty vector".into()));
    }
    let mut best = 0;
    for (i, &p) in probs.values().iter().enumerate().skip(1) {
        if p > probs.values()[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Whether an optimization raises or lowers the classifier's confidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Decrease cross-entropy to the target label (raise its confidence).
    Assistive,
    /// Increase cross-entropy to the true label, or decrease it to a wrong
    /// target (targeted deception).
    Deceptive,
}

/// The scalar objective a gradient is taken against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LossSpec {
    pub target_label: usize,
    pub direction: Direction,
}

impl LossSpec {
    pub fn assistive(target_label: usize) -> Self {
        LossSpec {
            target_label,
            direction: Direction::Assistive,
        }
    }

    pub fn deceptive(target_label: usize) -> Self {
        LossSpec {
            target_label,
            direction: Direction::Deceptive,
        }
    }
}

/// Step-size, iteration, and budget settings shared by the iterative signal
/// generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimConfig {
    /// Step size per iteration.
    pub step_size: f64,
    pub iterations: usize,
    /// L-infinity budget around the original values; absent means
    /// unconstrained (clip to the unit interval only).
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Step with sign(gradient) instead of the raw gradient.
    #[serde(default = "default_true")]
    pub use_sign_gradient: bool,
    pub seed: u64,
}

fn default_true() -> bool {
    true
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) {
            return Err(Error::Domain(format!(
                "step_size {} must be > 0",
                self.step_size
            )));
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0) {
                return Err(Error::Domain(format!("epsilon {e} must be >= 0")));
            }
        }
        Ok(())
    }
}
