//! Closed-form probe classifiers. Their losses and gradients have hand
//! derivable values, which makes them the reference points for the attack
//! and optimizer test suites.

use crate::classifiers::{check_batch, DifferentiableClassifier};
use crate::error::Result;
use crate::image::{Image, PixelGrad};
use crate::prob::{LossSpec, ProbVector, LOG_FLOOR};

/// Two-class logistic model over a single pixel: `p(class 1) = sigmoid(w * v + b)`
/// where `v` is channel 0 of the only pixel of a 1x1 image.
#[derive(Debug, Clone)]
pub struct LogisticPixel {
    pub weight: f64,
    pub bias: f64,
}

impl LogisticPixel {
    pub fn new(weight: f64, bias: f64) -> Self {
        LogisticPixel { weight, bias }
    }

    fn p1(&self, img: &Image) -> f64 {
        let z = self.weight * img.get(0, 0, 0) + self.bias;
        1.0 / (1.0 + (-z).exp())
    }
}

impl DifferentiableClassifier for LogisticPixel {
    fn num_classes(&self) -> usize {
        2
    }

    fn input_shape(&self) -> (usize, usize) {
        (1, 1)
    }

    fn identity(&self) -> String {
        format!("logistic-pixel(w={},b={})", self.weight, self.bias)
    }

    fn predict_probs(&self, batch: &[Image]) -> Result<Vec<ProbVector>> {
        check_batch(batch, (1, 1))?;
        batch
            .iter()
            .map(|img| {
                let p = self.p1(img);
                ProbVector::new(vec![1.0 - p, p])
            })
            .collect()
    }

    fn input_gradient(&self, batch: &[Image], loss: &LossSpec) -> Result<Vec<PixelGrad>> {
        check_batch(batch, (1, 1))?;
        if loss.target_label > 1 {
            return Err(crate::error::Error::Index(format!(
                "target {} of 2 classes",
                loss.target_label
            )));
        }
        let n = batch.len() as f64;
        Ok(batch
            .iter()
            .map(|img| {
                let p = self.p1(img);
                // d CE(target) / d v, for CE through the sigmoid
                let d = if loss.target_label == 1 {
                    (p - 1.0) * self.weight
                } else {
                    p * self.weight
                };
                let mut g = PixelGrad::zeros(1, 1);
                g.add(0, 0, 0, d / n);
                g
            })
            .collect())
    }
}

/// Two-class linear probe: `p(class 1)` is the mean of one channel over the
/// whole image. Its optimum under assistive descent is analytic (drive the
/// channel to 1), which the 3D texture tests rely on.
#[derive(Debug, Clone)]
pub struct ChannelMeanProbe {
    channel: usize,
    shape: (usize, usize),
}

impl ChannelMeanProbe {
    pub fn new(channel: usize, shape: (usize, usize)) -> Result<Self> {
        if channel > 2 {
            return Err(crate::error::Error::Index(format!(
                "channel {channel} of 3"
            )));
        }
        if shape.0 == 0 || shape.1 == 0 {
            return Err(crate::error::Error::Domain("empty probe shape".into()));
        }
        Ok(ChannelMeanProbe { channel, shape })
    }

    fn mean(&self, img: &Image) -> f64 {
        let (h, w) = self.shape;
        let mut s = 0.0;
        for r in 0..h {
            for c in 0..w {
                s += img.get(r, c, self.channel);
            }
        }
        s / (h * w) as f64
    }
}

impl DifferentiableClassifier for ChannelMeanProbe {
    fn num_classes(&self) -> usize {
        2
    }

    fn input_shape(&self) -> (usize, usize) {
        self.shape
    }

    fn identity(&self) -> String {
        format!(
            "channel-mean-probe(ch={},{}x{})",
            self.channel, self.shape.0, self.shape.1
        )
    }

    fn predict_probs(&self, batch: &[Image]) -> Result<Vec<ProbVector>> {
        check_batch(batch, self.shape)?;
        batch
            .iter()
            .map(|img| {
                let p = self.mean(img).clamp(0.0, 1.0);
                ProbVector::new(vec![1.0 - p, p])
            })
            .collect()
    }

    fn input_gradient(&self, batch: &[Image], loss: &LossSpec) -> Result<Vec<PixelGrad>> {
        check_batch(batch, self.shape)?;
        if loss.target_label > 1 {
            return Err(crate::error::Error::Index(format!(
                "target {} of 2 classes",
                loss.target_label
            )));
        }
        let (h, w) = self.shape;
        let n = batch.len() as f64;
        let inv_area = 1.0 / (h * w) as f64;
        Ok(batch
            .iter()
            .map(|img| {
                let p = self.mean(img);
                // CE(1) = -ln(max(p, floor)); CE(0) = -ln(max(1-p, floor))
                let d = if loss.target_label == 1 {
                    if p > LOG_FLOOR {
                        -inv_area / p
                    } else {
                        0.0
                    }
                } else if 1.0 - p > LOG_FLOOR {
                    inv_area / (1.0 - p)
                } else {
                    0.0
                };
                let mut g = PixelGrad::zeros(h, w);
                for r in 0..h {
                    for c in 0..w {
                        g.add(r, c, self.channel, d / n);
                    }
                }
                g
            })
            .collect())
    }
}
