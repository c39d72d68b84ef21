//! The differentiable-classifier contract and its implementations: a
//! from-scratch reference CNN with analytic backpropagation, closed-form
//! probe models for oracle tests, and loss-averaging ensembles.

mod checkpoint;
mod probe;
mod reference;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use probe::{ChannelMeanProbe, LogisticPixel};
pub use reference::{train_reference, ReferenceCnn, TrainOptions, TrainReport};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::image::{Image, PixelGrad};
use crate::prob::{cross_entropy, LossSpec, ProbVector};

/// Anything that maps image batches to class probabilities and exposes the
/// gradient of a scalar loss with respect to input pixels.
pub trait DifferentiableClassifier: Send + Sync {
    fn num_classes(&self) -> usize;

    /// Expected input raster shape `(height, width)`; channels are always 3.
    fn input_shape(&self) -> (usize, usize);

    /// Stable name identifying this model (weights included).
    fn identity(&self) -> String;

    /// One normalized probability vector per input image.
    fn predict_probs(&self, batch: &[Image]) -> Result<Vec<ProbVector>>;

    /// Gradient of the mean cross-entropy to `loss.target_label` over the
    /// batch, with respect to every input pixel. Same shapes as `batch`.
    fn input_gradient(&self, batch: &[Image], loss: &LossSpec) -> Result<Vec<PixelGrad>>;
}

/// Validate a batch against a classifier's declared input shape.
pub(crate) fn check_batch(batch: &[Image], shape: (usize, usize)) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Domain("empty batch".into()));
    }
    for (i, img) in batch.iter().enumerate() {
        if img.shape() != shape {
            return Err(Error::Dimension(format!(
                "batch item {i}: {:?}, classifier expects {:?}",
                img.shape(),
                shape
            )));
        }
    }
    Ok(())
}

/// Mean cross-entropy of a batch under a classifier.
pub fn batch_cross_entropy(
    c: &dyn DifferentiableClassifier,
    batch: &[Image],
    target: usize,
) -> Result<f64> {
    let probs = c.predict_probs(batch)?;
    let mut sum = 0.0;
    for p in &probs {
        sum += cross_entropy(p, target)?;
    }
    Ok(sum / probs.len() as f64)
}

/// A non-empty set of classifiers over the same label alphabet and input
/// shape. Combines by arithmetic mean of member losses, so its gradient is
/// the mean of member input gradients.
pub struct Ensemble {
    members: Vec<Arc<dyn DifferentiableClassifier>>,
}

impl Ensemble {
    pub fn new(members: Vec<Arc<dyn DifferentiableClassifier>>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::Domain("empty ensemble".into()))?;
        let (nc, shape) = (first.num_classes(), first.input_shape());
        for m in &members[1..] {
            if m.num_classes() != nc || m.input_shape() != shape {
                return Err(Error::Dimension(format!(
                    "ensemble member {} disagrees on shape or classes",
                    m.identity()
                )));
            }
        }
        Ok(Ensemble { members })
    }

    pub fn single(member: Arc<dyn DifferentiableClassifier>) -> Self {
        Ensemble {
            members: vec![member],
        }
    }

    pub fn members(&self) -> &[Arc<dyn DifferentiableClassifier>] {
        &self.members
    }
}

impl DifferentiableClassifier for Ensemble {
    fn num_classes(&self) -> usize {
        self.members[0].num_classes()
    }

    fn input_shape(&self) -> (usize, usize) {
        self.members[0].input_shape()
    }

    fn identity(&self) -> String {
        let names: Vec<String> = self.members.iter().map(|m| m.identity()).collect();
        format!("ensemble[{}]", names.join("+"))
    }

    /// Arithmetic mean of member probabilities (used for reporting; the
    /// optimization signal is the mean of member losses).
    fn predict_probs(&self, batch: &[Image]) -> Result<Vec<ProbVector>> {
        check_batch(batch, self.input_shape())?;
        let per_member: Vec<Vec<ProbVector>> = self
            .members
            .iter()
            .map(|m| m.predict_probs(batch))
            .collect::<Result<_>>()?;
        let k = self.members.len() as f64;
        let mut out = Vec::with_capacity(batch.len());
        for i in 0..batch.len() {
            let mut acc = vec![0.0; self.num_classes()];
            for probs in &per_member {
                for (a, &p) in acc.iter_mut().zip(probs[i].values()) {
                    *a += p / k;
                }
            }
            out.push(ProbVector::new(acc)?);
        }
        Ok(out)
    }

    fn input_gradient(&self, batch: &[Image], loss: &LossSpec) -> Result<Vec<PixelGrad>> {
        check_batch(batch, self.input_shape())?;
        let k = self.members.len() as f64;
        let mut acc: Option<Vec<PixelGrad>> = None;
        for m in &self.members {
            let grads = m.input_gradient(batch, loss)?;
            match &mut acc {
                None => acc = Some(grads),
                Some(total) => {
                    for (t, g) in total.iter_mut().zip(&grads) {
                        for (a, b) in t.data.iter_mut().zip(&g.data) {
                            *a += b;
                        }
                    }
                }
            }
        }
        let mut total = acc.expect("ensemble is non-empty");
        for g in &mut total {
            for v in &mut g.data {
                *v /= k;
            }
        }
        Ok(total)
    }
}
