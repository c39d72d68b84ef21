//! A small fixed-architecture CNN with hand-written forward and backward
//! passes, so input gradients need no external autodiff:
//!
//! conv 3x3x8 (stride 1, zero-pad 1) -> ReLU -> 2x2 max-pool ->
//! conv 3x3x16 -> ReLU -> 2x2 max-pool -> flatten -> dense -> softmax
//!
//! Weights are stored as `f32` (the checkpoint format is 32-bit), all
//! arithmetic runs in `f64` so finite-difference gradient checks hold at
//! tight tolerances.

use rand::Rng;
use rayon::prelude::*;

use crate::classifiers::{check_batch, DifferentiableClassifier};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::image::{Image, PixelGrad};
use crate::prob::{argmax_label, LossSpec, ProbVector};
use crate::rng::SeedTree;

const C1: usize = 8;
const C2: usize = 16;
const K: usize = 3;
const MOMENTUM: f64 = 0.9;

#[derive(Debug, Clone)]
pub struct ReferenceCnn {
    name: String,
    height: usize,
    width: usize,
    num_classes: usize,
    seed: u64,
    pub(crate) w1: Vec<f32>,
    pub(crate) b1: Vec<f32>,
    pub(crate) w2: Vec<f32>,
    pub(crate) b2: Vec<f32>,
    pub(crate) wd: Vec<f32>,
    pub(crate) bd: Vec<f32>,
}

/// Per-layer gradient accumulators used during training.
struct WeightGrads {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
    wd: Vec<f64>,
    bd: Vec<f64>,
}

impl WeightGrads {
    fn zeros(model: &ReferenceCnn) -> Self {
        WeightGrads {
            w1: vec![0.0; model.w1.len()],
            b1: vec![0.0; model.b1.len()],
            w2: vec![0.0; model.w2.len()],
            b2: vec![0.0; model.b2.len()],
            wd: vec![0.0; model.wd.len()],
            bd: vec![0.0; model.bd.len()],
        }
    }
}

/// Cached activations from one forward pass.
struct Forward {
    a0: Vec<f64>,
    z1: Vec<f64>,
    p1: Vec<f64>,
    am1: Vec<usize>,
    z2: Vec<f64>,
    p2: Vec<f64>,
    am2: Vec<usize>,
    probs: Vec<f64>,
}

impl ReferenceCnn {
    /// Seeded He-uniform initialization with zero biases.
    pub fn new(height: usize, width: usize, num_classes: usize, seed: u64) -> Result<Self> {
        if height % 4 != 0 || width % 4 != 0 || height < 4 || width < 4 {
            return Err(Error::Domain(format!(
                "input {height}x{width} must be a multiple of 4 in both dimensions"
            )));
        }
        if num_classes < 2 {
            return Err(Error::Domain("need at least 2 classes".into()));
        }
        let flat = (height / 4) * (width / 4) * C2;
        let root = SeedTree::new(seed).child_str("refcnn-init");
        let init = |tag: &str, n: usize, fan_in: usize| -> Vec<f32> {
            let limit = (6.0 / fan_in as f64).sqrt();
            let mut rng = root.child_str(tag).rng();
            (0..n).map(|_| rng.gen_range(-limit..limit) as f32).collect()
        };
        Ok(ReferenceCnn {
            name: format!("refcnn-s{seed}"),
            height,
            width,
            num_classes,
            seed,
            w1: init("conv1", C1 * 3 * K * K, 3 * K * K),
            b1: vec![0.0; C1],
            w2: init("conv2", C2 * C1 * K * K, C1 * K * K),
            b2: vec![0.0; C2],
            wd: init("dense", num_classes * flat, flat),
            bd: vec![0.0; num_classes],
        })
    }

    pub(crate) fn from_parts(
        name: String,
        height: usize,
        width: usize,
        num_classes: usize,
        seed: u64,
        blobs: [Vec<f32>; 6],
    ) -> Result<Self> {
        let [w1, b1, w2, b2, wd, bd] = blobs;
        let flat = (height / 4) * (width / 4) * C2;
        let expect = [
            ("conv1_weight", w1.len(), C1 * 3 * K * K),
            ("conv1_bias", b1.len(), C1),
            ("conv2_weight", w2.len(), C2 * C1 * K * K),
            ("conv2_bias", b2.len(), C2),
            ("dense_weight", wd.len(), num_classes * flat),
            ("dense_bias", bd.len(), num_classes),
        ];
        for (field, got, want) in expect {
            if got != want {
                return Err(Error::Format(format!(
                    "{field}: expected {want} values, got {got}"
                )));
            }
        }
        Ok(ReferenceCnn {
            name,
            height,
            width,
            num_classes,
            seed,
            w1,
            b1,
            w2,
            b2,
            wd,
            bd,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rename(&mut self, name: &str) {
        self.name = name.to_string();
    }

    pub(crate) fn layer_blobs(&self) -> [(&'static str, &[f32]); 6] {
        [
            ("conv1_weight", &self.w1),
            ("conv1_bias", &self.b1),
            ("conv2_weight", &self.w2),
            ("conv2_bias", &self.b2),
            ("dense_weight", &self.wd),
            ("dense_bias", &self.bd),
        ]
    }

    fn forward(&self, img: &Image) -> Forward {
        let (h, w) = (self.height, self.width);
        let a0: Vec<f64> = img.values().to_vec();
        let mut z1 = vec![0.0; h * w * C1];
        conv_forward(&a0, h, w, 3, C1, &self.w1, &self.b1, &mut z1);
        let a1: Vec<f64> = z1.iter().map(|&v| v.max(0.0)).collect();
        let (p1, am1) = maxpool_forward(&a1, h, w, C1);

        let (h2, w2) = (h / 2, w / 2);
        let mut z2 = vec![0.0; h2 * w2 * C2];
        conv_forward(&p1, h2, w2, C1, C2, &self.w2, &self.b2, &mut z2);
        let a2: Vec<f64> = z2.iter().map(|&v| v.max(0.0)).collect();
        let (p2, am2) = maxpool_forward(&a2, h2, w2, C2);

        let mut logits = vec![0.0; self.num_classes];
        for k in 0..self.num_classes {
            let mut acc = f64::from(self.bd[k]);
            let row = &self.wd[k * p2.len()..(k + 1) * p2.len()];
            for (wv, x) in row.iter().zip(&p2) {
                acc += f64::from(*wv) * x;
            }
            logits[k] = acc;
        }
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|&z| (z - m).exp()).collect();
        let sum: f64 = exps.iter().sum();
        let probs = exps.into_iter().map(|e| e / sum).collect();

        Forward {
            a0,
            z1,
            p1,
            am1,
            z2,
            p2,
            am2,
            probs,
        }
    }

    /// Backward pass from softmax-CE logit gradients. Returns the input
    /// gradient; optionally accumulates weight gradients for training.
    fn backward(
        &self,
        fwd: &Forward,
        dlogits: &[f64],
        mut grads: Option<&mut WeightGrads>,
    ) -> Vec<f64> {
        let (h, w) = (self.height, self.width);
        let (h2, w2) = (h / 2, w / 2);
        let flat = fwd.p2.len();

        // dense
        let mut dp2 = vec![0.0; flat];
        for k in 0..self.num_classes {
            let g = dlogits[k];
            let row = &self.wd[k * flat..(k + 1) * flat];
            for (i, wv) in row.iter().enumerate() {
                dp2[i] += f64::from(*wv) * g;
            }
            if let Some(gr) = grads.as_deref_mut() {
                gr.bd[k] += g;
                for (i, x) in fwd.p2.iter().enumerate() {
                    gr.wd[k * flat + i] += x * g;
                }
            }
        }

        // pool2 -> relu2 -> conv2
        let mut dz2 = vec![0.0; h2 * w2 * C2];
        for (slot, &src) in fwd.am2.iter().enumerate() {
            if fwd.z2[src] > 0.0 {
                dz2[src] += dp2[slot];
            }
        }
        let mut dp1 = vec![0.0; h2 * w2 * C1];
        conv_backward(
            &fwd.p1,
            &dz2,
            h2,
            w2,
            C1,
            C2,
            &self.w2,
            &mut dp1,
            grads.as_deref_mut().map(|g| (&mut g.w2[..], &mut g.b2[..])),
        );

        // pool1 -> relu1 -> conv1
        let mut dz1 = vec![0.0; h * w * C1];
        for (slot, &src) in fwd.am1.iter().enumerate() {
            if fwd.z1[src] > 0.0 {
                dz1[src] += dp1[slot];
            }
        }
        let mut da0 = vec![0.0; h * w * 3];
        conv_backward(
            &fwd.a0,
            &dz1,
            h,
            w,
            3,
            C1,
            &self.w1,
            &mut da0,
            grads.map(|g| (&mut g.w1[..], &mut g.b1[..])),
        );
        da0
    }

    fn input_gradient_single(&self, img: &Image, target: usize, scale: f64) -> PixelGrad {
        let fwd = self.forward(img);
        let mut dlogits = fwd.probs.clone();
        dlogits[target] -= 1.0;
        for v in &mut dlogits {
            *v *= scale;
        }
        let data = self.backward(&fwd, &dlogits, None);
        PixelGrad {
            height: self.height,
            width: self.width,
            data,
        }
    }
}

impl DifferentiableClassifier for ReferenceCnn {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn input_shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    fn identity(&self) -> String {
        self.name.clone()
    }

    fn predict_probs(&self, batch: &[Image]) -> Result<Vec<ProbVector>> {
        check_batch(batch, self.input_shape())?;
        batch
            .par_iter()
            .map(|img| ProbVector::new(self.forward(img).probs))
            .collect()
    }

    fn input_gradient(&self, batch: &[Image], loss: &LossSpec) -> Result<Vec<PixelGrad>> {
        check_batch(batch, self.input_shape())?;
        if loss.target_label >= self.num_classes {
            return Err(Error::Index(format!(
                "target {} of {} classes",
                loss.target_label, self.num_classes
            )));
        }
        let scale = 1.0 / batch.len() as f64;
        Ok(batch
            .par_iter()
            .map(|img| self.input_gradient_single(img, loss.target_label, scale))
            .collect())
    }
}

fn conv_forward(
    input: &[f64],
    h: usize,
    w: usize,
    icn: usize,
    ocn: usize,
    weights: &[f32],
    bias: &[f32],
    out: &mut [f64],
) {
    for r in 0..h {
        for c in 0..w {
            for o in 0..ocn {
                let mut acc = f64::from(bias[o]);
                for kr in 0..K {
                    let rr = r as isize + kr as isize - 1;
                    if rr < 0 || rr >= h as isize {
                        continue;
                    }
                    for kc in 0..K {
                        let cc = c as isize + kc as isize - 1;
                        if cc < 0 || cc >= w as isize {
                            continue;
                        }
                        let base = (rr as usize * w + cc as usize) * icn;
                        let wbase = ((o * icn) * K + kr) * K + kc;
                        for i in 0..icn {
                            acc += f64::from(weights[wbase + i * K * K]) * input[base + i];
                        }
                    }
                }
                out[(r * w + c) * ocn + o] = acc;
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    input: &[f64],
    dz: &[f64],
    h: usize,
    w: usize,
    icn: usize,
    ocn: usize,
    weights: &[f32],
    dinput: &mut [f64],
    mut wgrads: Option<(&mut [f64], &mut [f64])>,
) {
    for r in 0..h {
        for c in 0..w {
            for o in 0..ocn {
                let g = dz[(r * w + c) * ocn + o];
                if g == 0.0 {
                    continue;
                }
                if let Some((_, db)) = wgrads.as_mut() {
                    db[o] += g;
                }
                for kr in 0..K {
                    let rr = r as isize + kr as isize - 1;
                    if rr < 0 || rr >= h as isize {
                        continue;
                    }
                    for kc in 0..K {
                        let cc = c as isize + kc as isize - 1;
                        if cc < 0 || cc >= w as isize {
                            continue;
                        }
                        let base = (rr as usize * w + cc as usize) * icn;
                        let wbase = ((o * icn) * K + kr) * K + kc;
                        for i in 0..icn {
                            dinput[base + i] += f64::from(weights[wbase + i * K * K]) * g;
                            if let Some((dw, _)) = wgrads.as_mut() {
                                dw[wbase + i * K * K] += input[base + i] * g;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// 2x2 max pooling; ties go to the first element in scan order so the
/// backward routing is deterministic.
fn maxpool_forward(input: &[f64], h: usize, w: usize, cn: usize) -> (Vec<f64>, Vec<usize>) {
    let (h2, w2) = (h / 2, w / 2);
    let mut out = vec![0.0; h2 * w2 * cn];
    let mut arg = vec![0usize; h2 * w2 * cn];
    for r2 in 0..h2 {
        for c2 in 0..w2 {
            for ch in 0..cn {
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = 0;
                for dr in 0..2 {
                    for dc in 0..2 {
                        let idx = ((r2 * 2 + dr) * w + (c2 * 2 + dc)) * cn + ch;
                        if input[idx] > best {
                            best = input[idx];
                            best_idx = idx;
                        }
                    }
                }
                let slot = (r2 * w2 + c2) * cn + ch;
                out[slot] = best;
                arg[slot] = best_idx;
            }
        }
    }
    (out, arg)
}

/// Hyperparameters for [`train_reference`]. Optimization is plain SGD with
/// momentum 0.9.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TrainReport {
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
    pub final_mean_loss: f64,
}

/// Train a fresh [`ReferenceCnn`] on `dataset`. Deterministic given the seed:
/// the same call produces bit-identical weights.
pub fn train_reference(
    dataset: &LabeledDataset,
    height: usize,
    width: usize,
    opts: &TrainOptions,
    test: Option<&LabeledDataset>,
) -> Result<(ReferenceCnn, TrainReport)> {
    if dataset.is_empty() {
        return Err(Error::Domain("empty training dataset".into()));
    }
    if opts.batch_size == 0 {
        return Err(Error::Domain("batch_size must be positive".into()));
    }
    let mut model = ReferenceCnn::new(height, width, dataset.num_classes(), opts.seed)?;
    for (i, (img, _)) in dataset.iter().enumerate() {
        if img.shape() != (height, width) {
            return Err(Error::Dimension(format!(
                "training item {i}: {:?}, expected {:?}",
                img.shape(),
                (height, width)
            )));
        }
    }

    let mut vel = WeightGrads::zeros(&model);
    let shuffle_root = SeedTree::new(opts.seed).child_str("shuffle");
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut final_mean_loss = 0.0;

    for epoch in 0..opts.epochs {
        let mut rng = shuffle_root.child(epoch as u64).rng();
        // Fisher-Yates
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(opts.batch_size) {
            let mut grads = WeightGrads::zeros(&model);
            let scale = 1.0 / chunk.len() as f64;
            for &idx in chunk {
                let (img, label) = dataset.get(idx).expect("index in range");
                let fwd = model.forward(img);
                epoch_loss -= fwd.probs[*label].max(crate::prob::LOG_FLOOR).ln();
                let mut dlogits = fwd.probs.clone();
                dlogits[*label] -= 1.0;
                for v in &mut dlogits {
                    *v *= scale;
                }
                model.backward(&fwd, &dlogits, Some(&mut grads));
            }
            sgd_step(&mut model.w1, &mut vel.w1, &grads.w1, opts.learning_rate);
            sgd_step(&mut model.b1, &mut vel.b1, &grads.b1, opts.learning_rate);
            sgd_step(&mut model.w2, &mut vel.w2, &grads.w2, opts.learning_rate);
            sgd_step(&mut model.b2, &mut vel.b2, &grads.b2, opts.learning_rate);
            sgd_step(&mut model.wd, &mut vel.wd, &grads.wd, opts.learning_rate);
            sgd_step(&mut model.bd, &mut vel.bd, &grads.bd, opts.learning_rate);
        }
        final_mean_loss = epoch_loss / dataset.len() as f64;
    }

    let train_accuracy = model_accuracy(&model, dataset)?;
    let test_accuracy = test.map(|t| model_accuracy(&model, t)).transpose()?;
    Ok((
        model,
        TrainReport {
            train_accuracy,
            test_accuracy,
            final_mean_loss,
        },
    ))
}

fn sgd_step(weights: &mut [f32], velocity: &mut [f64], grads: &[f64], lr: f64) {
    for ((w, v), g) in weights.iter_mut().zip(velocity.iter_mut()).zip(grads) {
        *v = MOMENTUM * *v - lr * g;
        *w = (f64::from(*w) + *v) as f32;
    }
}

fn model_accuracy(model: &ReferenceCnn, ds: &LabeledDataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::Domain("empty dataset".into()));
    }
    let images: Vec<Image> = ds.iter().map(|(i, _)| i.clone()).collect();
    let probs = model.predict_probs(&images)?;
    let mut hits = 0usize;
    for (p, (_, label)) in probs.iter().zip(ds.iter()) {
        if argmax_label(p)? == *label {
            hits += 1;
        }
    }
    Ok(hits as f64 / ds.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{cross_entropy, Direction};
    use rand::Rng;

    fn random_image(seed: u64, h: usize, w: usize) -> Image {
        let mut rng = SeedTree::new(seed).rng();
        let data = (0..h * w * 3).map(|_| rng.gen_range(0.05..0.95)).collect();
        Image::from_vec(h, w, data).unwrap()
    }

    #[test]
    fn zero_image_zero_bias_gives_uniform() {
        let model = ReferenceCnn::new(8, 8, 5, 42).unwrap();
        let probs = model.predict_probs(&[Image::zeros(8, 8)]).unwrap();
        for &p in probs[0].values() {
            assert!((p - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn batch_items_are_independent() {
        let model = ReferenceCnn::new(8, 8, 3, 1).unwrap();
        let img = random_image(9, 8, 8);
        let probs = model.predict_probs(&[img.clone(), img]).unwrap();
        assert_eq!(probs[0], probs[1]);
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let model = ReferenceCnn::new(8, 8, 4, 7).unwrap();
        let img = random_image(11, 8, 8);
        let target = 2;
        let spec = LossSpec {
            target_label: target,
            direction: Direction::Assistive,
        };
        let grad = &model.input_gradient(std::slice::from_ref(&img), &spec).unwrap()[0];

        let h = 1e-3;
        let mut rng = SeedTree::new(5).rng();
        let mut checked = 0;
        for _ in 0..120 {
            let r = rng.gen_range(0..8);
            let c = rng.gen_range(0..8);
            let ch = rng.gen_range(0..3);
            let v = img.get(r, c, ch);
            let mut plus = img.clone();
            plus.set(r, c, ch, v + h);
            let mut minus = img.clone();
            minus.set(r, c, ch, v - h);
            let lp = cross_entropy(&model.predict_probs(&[plus]).unwrap()[0], target).unwrap();
            let lm = cross_entropy(&model.predict_probs(&[minus]).unwrap()[0], target).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let an = grad.get(r, c, ch);
            let denom = an.abs().max(fd.abs()).max(1e-6);
            assert!(
                ((fd - an).abs() / denom) <= 1e-4,
                "fd {fd} vs analytic {an} at ({r},{c},{ch})"
            );
            checked += 1;
        }
        assert!(checked >= 100);
    }

    #[test]
    fn gradient_zero_at_saturated_optimum() {
        // drive the dense bias so class 0 saturates, then the fused
        // softmax-CE gradient collapses
        let mut model = ReferenceCnn::new(4, 4, 2, 3).unwrap();
        model.bd[0] = 60.0;
        model.bd[1] = -60.0;
        let img = Image::zeros(4, 4);
        let g = model
            .input_gradient(&[img], &LossSpec::assistive(0))
            .unwrap();
        assert!(g[0].max_abs() <= 1e-6);
    }

    fn separable_blobs(seed: u64, n_per_class: usize) -> LabeledDataset {
        // class 0: bright left half; class 1: bright right half
        let mut ds = LabeledDataset::new(2).unwrap();
        let mut rng = SeedTree::new(seed).rng();
        for label in 0..2 {
            for _ in 0..n_per_class {
                let mut img = Image::zeros(8, 8);
                for r in 0..8 {
                    for c in 0..8 {
                        let lit = if label == 0 { c < 4 } else { c >= 4 };
                        let base = if lit { 0.8 } else { 0.1 };
                        for ch in 0..3 {
                            img.set(r, c, ch, base + rng.gen_range(-0.05..0.05));
                        }
                    }
                }
                ds.push(img, label).unwrap();
            }
        }
        ds
    }

    #[test]
    fn trains_to_perfect_accuracy_on_separable_blobs() {
        let ds = separable_blobs(21, 20);
        let opts = TrainOptions {
            epochs: 5,
            batch_size: 8,
            learning_rate: 0.05,
            seed: 42,
        };
        let (_, report) = train_reference(&ds, 8, 8, &opts, None).unwrap();
        assert_eq!(report.train_accuracy, 1.0);
    }

    #[test]
    fn zero_epochs_keeps_seeded_initialization() {
        let ds = separable_blobs(22, 4);
        let opts = TrainOptions {
            epochs: 0,
            batch_size: 4,
            learning_rate: 0.05,
            seed: 9,
        };
        let (model, _) = train_reference(&ds, 8, 8, &opts, None).unwrap();
        let fresh = ReferenceCnn::new(8, 8, 2, 9).unwrap();
        assert_eq!(model.w1, fresh.w1);
        assert_eq!(model.wd, fresh.wd);
        assert_eq!(model.bd, fresh.bd);
    }

    #[test]
    fn training_is_bit_deterministic() {
        let ds = separable_blobs(23, 10);
        let opts = TrainOptions {
            epochs: 3,
            batch_size: 4,
            learning_rate: 0.05,
            seed: 77,
        };
        let (a, _) = train_reference(&ds, 8, 8, &opts, None).unwrap();
        let (b, _) = train_reference(&ds, 8, 8, &opts, None).unwrap();
        assert_eq!(a.w1, b.w1);
        assert_eq!(a.b1, b.b1);
        assert_eq!(a.w2, b.w2);
        assert_eq!(a.b2, b.b2);
        assert_eq!(a.wd, b.wd);
        assert_eq!(a.bd, b.bd);
    }

    #[test]
    fn empty_dataset_rejected() {
        let ds = LabeledDataset::new(2).unwrap();
        let opts = TrainOptions {
            epochs: 1,
            batch_size: 4,
            learning_rate: 0.05,
            seed: 0,
        };
        assert!(train_reference(&ds, 8, 8, &opts, None).is_err());
    }
}
