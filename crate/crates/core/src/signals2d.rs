//! 2D signal generation: FGSM/PGD attacks, dataset hardening, and
//! location-invariant assistive patches trained with random-erasing
//! augmentation.
//!
//! Attacks ascend the cross-entropy to the true label; hardening and patch
//! training descend it toward the target, which raises the target-class
//! confidence.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::DifferentiableClassifier;
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::image::{clip_unit, project_linf, sign0, Image};
use crate::prob::{cross_entropy, LossSpec, OptimConfig};
use crate::rng::SeedTree;

/// A rectangular signal pasted over images, optimized for one target class.
#[derive(Debug, Clone)]
pub struct Patch {
    pub pixels: Image,
    pub target_label: usize,
}

impl Patch {
    pub fn size(&self) -> (usize, usize) {
        self.pixels.shape()
    }

    /// Bilinearly resample the patch to a new size (the resize-for-eval
    /// protocol: train large, evaluate small).
    pub fn resized(&self, height: usize, width: usize) -> Result<Patch> {
        if height == 0 || width == 0 {
            return Err(Error::Domain("resized patch must be non-empty".into()));
        }
        let (ph, pw) = self.pixels.shape();
        let mut out = Image::zeros(height, width);
        for r in 0..height {
            for c in 0..width {
                // map destination pixel center into source coordinates
                let sy = ((r as f64 + 0.5) * ph as f64 / height as f64 - 0.5)
                    .clamp(0.0, (ph - 1) as f64);
                let sx = ((c as f64 + 0.5) * pw as f64 / width as f64 - 0.5)
                    .clamp(0.0, (pw - 1) as f64);
                let (y0, x0) = (sy.floor() as usize, sx.floor() as usize);
                let (y1, x1) = ((y0 + 1).min(ph - 1), (x0 + 1).min(pw - 1));
                let (fy, fx) = (sy - y0 as f64, sx - x0 as f64);
                for ch in 0..3 {
                    let v = self.pixels.get(y0, x0, ch) * (1.0 - fy) * (1.0 - fx)
                        + self.pixels.get(y0, x1, ch) * (1.0 - fy) * fx
                        + self.pixels.get(y1, x0, ch) * fy * (1.0 - fx)
                        + self.pixels.get(y1, x1, ch) * fy * fx;
                    out.set(r, c, ch, v);
                }
            }
        }
        Ok(Patch {
            pixels: out,
            target_label: self.target_label,
        })
    }
}

/// Fill style for erased rectangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EraseFill {
    /// Per-pixel uniform random values.
    Random,
    /// Constant 0.5 gray.
    Gray,
}

/// Random-erasing augmentation parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EraseParams {
    pub erase_probability: f64,
    /// Fraction of image area the rectangle covers, sampled uniformly.
    pub area_fraction: (f64, f64),
    /// Height/width ratio factor, sampled uniformly.
    pub aspect: (f64, f64),
    pub fill: EraseFill,
}

impl EraseParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.erase_probability) {
            return Err(Error::Domain(format!(
                "erase_probability {} outside [0,1]",
                self.erase_probability
            )));
        }
        for (name, (lo, hi)) in [("area_fraction", self.area_fraction), ("aspect", self.aspect)] {
            if !(lo > 0.0 && hi <= 1.0 && lo <= hi) {
                return Err(Error::Domain(format!(
                    "{name} range ({lo}, {hi}) must be non-empty and within (0,1]"
                )));
            }
        }
        Ok(())
    }
}

/// How a patch's pixels start before optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PatchInit {
    #[default]
    Random,
    Gray,
}

/// Training settings for [`train_patch_2d`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchTrainConfig {
    /// (height, width) of the trained patch.
    pub patch_size: (usize, usize),
    pub iterations: usize,
    pub step_size: f64,
    /// Sample a fresh top-left corner per image per iteration; when false the
    /// patch trains pinned at (0, 0).
    #[serde(default = "default_true")]
    pub random_location: bool,
    #[serde(default)]
    pub random_erase: Option<EraseParams>,
    /// Optionally resample the returned patch for evaluation.
    #[serde(default)]
    pub resize_for_eval: Option<(usize, usize)>,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub init: PatchInit,
}

fn default_true() -> bool {
    true
}

fn default_batch() -> usize {
    16
}

impl PatchTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size.0 == 0 || self.patch_size.1 == 0 {
            return Err(Error::Domain("patch_size must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Domain("batch_size must be positive".into()));
        }
        if !(self.step_size > 0.0) {
            return Err(Error::Domain("step_size must be > 0".into()));
        }
        if let Some(p) = &self.random_erase {
            p.validate()?;
        }
        Ok(())
    }
}

/// Fast gradient sign attack: `clip(x + epsilon * sign(grad CE(true_label)))`.
pub fn fgsm_attack(
    c: &dyn DifferentiableClassifier,
    image: &Image,
    true_label: usize,
    epsilon: f64,
) -> Result<Image> {
    if epsilon < 0.0 {
        return Err(Error::Domain(format!("epsilon {epsilon} must be >= 0")));
    }
    let grads = c.input_gradient(
        std::slice::from_ref(image),
        &LossSpec::deceptive(true_label),
    )?;
    let stepped: Vec<f64> = image
        .values()
        .iter()
        .zip(&grads[0].data)
        .map(|(&v, &g)| v + epsilon * sign0(g))
        .collect();
    Image::from_vec_clipped(image.height(), image.width(), stepped)
}

/// Projected gradient descent attack: `steps` FGSM-style steps of size
/// `step_size`, each projected back into the epsilon-ball of the original.
pub fn pgd_attack(
    c: &dyn DifferentiableClassifier,
    image: &Image,
    true_label: usize,
    epsilon: f64,
    step_size: f64,
    steps: usize,
) -> Result<Image> {
    if epsilon < 0.0 {
        return Err(Error::Domain(format!("epsilon {epsilon} must be >= 0")));
    }
    let origin = image.clone();
    let mut x = image.clone();
    for _ in 0..steps {
        let grads = c.input_gradient(std::slice::from_ref(&x), &LossSpec::deceptive(true_label))?;
        let stepped: Vec<f64> = x
            .values()
            .iter()
            .zip(&grads[0].data)
            .map(|(&v, &g)| v + step_size * sign0(g))
            .collect();
        let moved = Image::from_vec_clipped(x.height(), x.width(), stepped)?;
        x = project_linf(&clip_unit(&moved), &origin, epsilon)?;
    }
    Ok(x)
}

/// Result of hardening one image.
#[derive(Debug, Clone)]
pub struct Hardened {
    pub image: Image,
    pub confidence_before: f64,
    pub confidence_after: f64,
    /// Set when the final confidence dropped below the initial one, which is
    /// only possible at saturated optima.
    pub warning: bool,
}

/// Iterative descent on the cross-entropy to the true label; the assistive
/// counterpart of [`pgd_attack`].
pub fn harden_image(
    c: &dyn DifferentiableClassifier,
    image: &Image,
    true_label: usize,
    cfg: &OptimConfig,
) -> Result<Hardened> {
    cfg.validate()?;
    if true_label >= c.num_classes() {
        return Err(Error::Index(format!(
            "label {true_label} of {} classes",
            c.num_classes()
        )));
    }
    let spec = LossSpec::assistive(true_label);
    let origin = image.clone();
    let p_before = c.predict_probs(std::slice::from_ref(image))?[0].get(true_label)?;

    let mut x = image.clone();
    for _ in 0..cfg.iterations {
        let grads = c.input_gradient(std::slice::from_ref(&x), &spec)?;
        let g = &grads[0];
        let stepped: Vec<f64> = x
            .values()
            .iter()
            .zip(&g.data)
            .map(|(&v, &gv)| {
                let step = if cfg.use_sign_gradient { sign0(gv) } else { gv };
                v - cfg.step_size * step
            })
            .collect();
        x = Image::from_vec_clipped(x.height(), x.width(), stepped)?;
        if let Some(eps) = cfg.epsilon {
            x = project_linf(&x, &origin, eps)?;
        }
    }

    let p_after = c.predict_probs(std::slice::from_ref(&x))?[0].get(true_label)?;
    Ok(Hardened {
        image: x,
        confidence_before: p_before,
        confidence_after: p_after,
        warning: p_after < p_before,
    })
}

/// Harden every item of a dataset. Labels and order are preserved; per-item
/// errors carry the item index.
pub fn harden_dataset(
    c: &dyn DifferentiableClassifier,
    d: &LabeledDataset,
    cfg: &OptimConfig,
) -> Result<(LabeledDataset, Vec<usize>)> {
    let items: Vec<(Image, usize)> = d.iter().cloned().collect();
    let hardened: Vec<Hardened> = items
        .par_iter()
        .enumerate()
        .map(|(i, (img, label))| {
            harden_image(c, img, *label, cfg).map_err(|e| e.with_context(&format!("item {i}")))
        })
        .collect::<Result<_>>()?;
    let mut out = LabeledDataset::new(d.num_classes())?;
    let mut warnings = Vec::new();
    for (i, (h, (_, label))) in hardened.into_iter().zip(items).enumerate() {
        if h.warning {
            warnings.push(i);
        }
        out.push(h.image, label)?;
    }
    Ok((out, warnings))
}

/// Paste `patch` over `image` with its top-left corner at `location`.
/// Pixels outside the rectangle are bit-exact copies of the input.
pub fn apply_patch(image: &Image, patch: &Patch, location: (usize, usize)) -> Result<Image> {
    paste(image, &patch.pixels, location)
}

fn paste(image: &Image, raster: &Image, location: (usize, usize)) -> Result<Image> {
    let (ph, pw) = raster.shape();
    let (h, w) = image.shape();
    let (row, col) = location;
    if row + ph > h || col + pw > w {
        return Err(Error::Bounds(format!(
            "patch {ph}x{pw} at ({row},{col}) exceeds image {h}x{w}"
        )));
    }
    let mut out = image.clone();
    for r in 0..ph {
        for c in 0..pw {
            for ch in 0..3 {
                out.set(row + r, col + c, ch, raster.get(r, c, ch));
            }
        }
    }
    Ok(out)
}

/// With probability `params.erase_probability`, fill one random rectangle of
/// the image; otherwise return it unchanged.
pub fn random_erase(image: &Image, rng: &mut ChaCha8Rng, params: &EraseParams) -> Result<Image> {
    params.validate()?;
    if !(rng.gen_range(0.0..1.0) < params.erase_probability) {
        return Ok(image.clone());
    }
    let (h, w) = image.shape();
    let area = rng.gen_range(params.area_fraction.0..=params.area_fraction.1) * (h * w) as f64;
    let aspect = rng.gen_range(params.aspect.0..=params.aspect.1);
    let eh = ((area * aspect).sqrt().round() as usize).clamp(1, h);
    let ew = ((area / aspect).sqrt().round() as usize).clamp(1, w);
    let top = rng.gen_range(0..=h - eh);
    let left = rng.gen_range(0..=w - ew);
    let mut out = image.clone();
    for r in top..top + eh {
        for c in left..left + ew {
            for ch in 0..3 {
                let v = match params.fill {
                    EraseFill::Gray => 0.5,
                    EraseFill::Random => rng.gen_range(0.0..1.0),
                };
                out.set(r, c, ch, v);
            }
        }
    }
    Ok(out)
}

/// Train an assistive patch over images of the target class only, with the
/// patch location (and optionally the background) resampled every step.
///
/// Per iteration: draw a mini-batch of positives, paste the patch at a fresh
/// location per image, take the gradient of the mean cross-entropy to the
/// target with respect to the patch pixels (restricted through the paste
/// mask), and step the patch by `-lr * sign(grad)`.
pub fn train_patch_2d(
    c: &dyn DifferentiableClassifier,
    positives: &LabeledDataset,
    target_label: usize,
    cfg: &PatchTrainConfig,
    optim: &OptimConfig,
) -> Result<Patch> {
    cfg.validate()?;
    if positives.is_empty() {
        return Err(Error::Domain("no positive images".into()));
    }
    for (i, (img, label)) in positives.iter().enumerate() {
        if *label != target_label {
            return Err(Error::Precondition(format!(
                "positive item {i} has label {label}, patch targets {target_label}; \
                 assistive patches train only on the target class"
            )));
        }
        if img.shape() != c.input_shape() {
            return Err(Error::Dimension(format!(
                "positive item {i}: {:?}, classifier expects {:?}",
                img.shape(),
                c.input_shape()
            )));
        }
    }
    let (ph, pw) = cfg.patch_size;
    let (h, w) = c.input_shape();
    if ph > h || pw > w {
        return Err(Error::Bounds(format!(
            "patch {ph}x{pw} larger than image {h}x{w}"
        )));
    }

    let root = SeedTree::new(optim.seed).child_str("patch2d");
    let mut patch = match cfg.init {
        PatchInit::Gray => Image::filled(ph, pw, [0.5, 0.5, 0.5])?,
        PatchInit::Random => {
            let mut rng = root.child_str("init").rng();
            let data = (0..ph * pw * 3).map(|_| rng.gen_range(0.0..1.0)).collect();
            Image::from_vec_clipped(ph, pw, data)?
        }
    };

    let spec = LossSpec::assistive(target_label);
    for iter in 0..cfg.iterations {
        let mut rng = root.child(iter as u64).rng();
        // mini-batch of positives with per-image paste locations
        let mut batch = Vec::with_capacity(cfg.batch_size);
        let mut locations = Vec::with_capacity(cfg.batch_size);
        for _ in 0..cfg.batch_size {
            let idx = rng.gen_range(0..positives.len());
            let (img, _) = positives.get(idx).expect("index in range");
            let background = match &cfg.random_erase {
                Some(p) => random_erase(img, &mut rng, p)?,
                None => img.clone(),
            };
            let loc = if cfg.random_location {
                (rng.gen_range(0..=h - ph), rng.gen_range(0..=w - pw))
            } else {
                (0, 0)
            };
            batch.push(paste(&background, &patch, loc)?);
            locations.push(loc);
        }

        let grads = c.input_gradient(&batch, &spec)?;
        // pull the image-space gradient back through the paste mask
        let mut pgrad = vec![0.0; ph * pw * 3];
        for (g, (top, left)) in grads.iter().zip(&locations) {
            for r in 0..ph {
                for cc in 0..pw {
                    for ch in 0..3 {
                        pgrad[(r * pw + cc) * 3 + ch] += g.get(top + r, left + cc, ch);
                    }
                }
            }
        }

        let stepped: Vec<f64> = patch
            .values()
            .iter()
            .zip(&pgrad)
            .map(|(&v, &g)| {
                let step = if optim.use_sign_gradient { sign0(g) } else { g };
                v - cfg.step_size * step
            })
            .collect();
        patch = Image::from_vec_clipped(ph, pw, stepped)?;
    }

    let patch = Patch {
        pixels: patch,
        target_label,
    };
    match cfg.resize_for_eval {
        Some((rh, rw)) => patch.resized(rh, rw),
        None => Ok(patch),
    }
}

/// Mean target-class confidence over a dataset with the patch pasted at
/// seeded random locations (the patch evaluation protocol).
pub fn mean_confidence_with_patch(
    c: &dyn DifferentiableClassifier,
    d: &LabeledDataset,
    patch: Option<&Patch>,
    target_label: usize,
    seed: u64,
) -> Result<f64> {
    if d.is_empty() {
        return Err(Error::Domain("empty dataset".into()));
    }
    let (h, w) = c.input_shape();
    let mut rng = SeedTree::new(seed).child_str("patch-eval").rng();
    let mut batch = Vec::with_capacity(d.len());
    for (img, _) in d.iter() {
        match patch {
            Some(p) => {
                let (ph, pw) = p.pixels.shape();
                if ph > h || pw > w {
                    return Err(Error::Bounds(format!(
                        "patch {ph}x{pw} larger than image {h}x{w}"
                    )));
                }
                let loc = (rng.gen_range(0..=h - ph), rng.gen_range(0..=w - pw));
                batch.push(apply_patch(img, p, loc)?);
            }
            None => batch.push(img.clone()),
        }
    }
    let probs = c.predict_probs(&batch)?;
    let mut acc = 0.0;
    for p in &probs {
        acc += p.get(target_label)?;
    }
    Ok(acc / probs.len() as f64)
}

/// Mean cross-entropy to `label` over single images (attack-strength metric).
pub fn induced_loss(
    c: &dyn DifferentiableClassifier,
    image: &Image,
    label: usize,
) -> Result<f64> {
    let probs = c.predict_probs(std::slice::from_ref(image))?;
    cross_entropy(&probs[0], label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::LogisticPixel;
    use proptest::prelude::*;
    use rand::Rng;

    fn pixel(v: f64) -> Image {
        Image::filled(1, 1, [v, 0.0, 0.0]).unwrap()
    }

    fn sigma(z: f64) -> f64 {
        1.0 / (1.0 + (-z).exp())
    }

    #[test]
    fn fgsm_zero_budget_is_identity() {
        let m = LogisticPixel::new(3.0, -1.5);
        let x = pixel(0.5);
        let out = fgsm_attack(&m, &x, 1, 0.0).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn fgsm_logistic_closed_form() {
        // grad CE(1) = (p-1)w < 0, so sign = -1 and x drops to 0.4;
        // p then falls to sigma(3*0.4 - 1.5) = sigma(-0.3)
        let m = LogisticPixel::new(3.0, -1.5);
        let out = fgsm_attack(&m, &pixel(0.5), 1, 0.1).unwrap();
        assert!((out.get(0, 0, 0) - 0.4).abs() < 1e-9);
        let p = m.predict_probs(&[out]).unwrap()[0].get(1).unwrap();
        assert!((p - sigma(-0.3)).abs() < 1e-6);
        assert!((p - 0.4256).abs() < 1e-4);
    }

    #[test]
    fn fgsm_zero_gradient_is_identity() {
        // w = 0 makes the gradient exactly zero; sign(0) = 0
        let m = LogisticPixel::new(0.0, 0.3);
        let x = pixel(0.7);
        let out = fgsm_attack(&m, &x, 1, 0.25).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn pgd_zero_steps_is_identity() {
        let m = LogisticPixel::new(3.0, -1.5);
        let x = pixel(0.5);
        assert_eq!(pgd_attack(&m, &x, 1, 0.1, 0.05, 0).unwrap(), x);
    }

    #[test]
    fn pgd_converges_to_ball_boundary() {
        // 1-D monotone iteration: 0.5 -> 0.45 -> 0.40 -> stays
        let m = LogisticPixel::new(3.0, -1.5);
        let out = pgd_attack(&m, &pixel(0.5), 1, 0.1, 0.05, 40).unwrap();
        assert!((out.get(0, 0, 0) - 0.4).abs() < 1e-9);
    }

    #[test]
    fn pgd_respects_projection_invariant() {
        let m = LogisticPixel::new(3.0, -1.5);
        for steps in [1, 3, 7, 40] {
            let out = pgd_attack(&m, &pixel(0.5), 1, 0.1, 0.07, steps).unwrap();
            let v = out.get(0, 0, 0);
            assert!((0.4..=0.6).contains(&v), "step {steps} escaped ball: {v}");
        }
    }

    #[test]
    fn harden_zero_iterations_is_identity() {
        let m = LogisticPixel::new(3.0, -1.5);
        let cfg = OptimConfig {
            step_size: 0.1,
            iterations: 0,
            epsilon: None,
            use_sign_gradient: true,
            seed: 0,
        };
        let x = pixel(0.5);
        let h = harden_image(&m, &x, 1, &cfg).unwrap();
        assert_eq!(h.image, x);
        assert!(!h.warning);
    }

    #[test]
    fn harden_logistic_closed_form() {
        // one sign step of 0.1 ascends x to 0.6; p rises to sigma(0.3)
        let m = LogisticPixel::new(3.0, -1.5);
        let cfg = OptimConfig {
            step_size: 0.1,
            iterations: 1,
            epsilon: None,
            use_sign_gradient: true,
            seed: 0,
        };
        let h = harden_image(&m, &pixel(0.5), 1, &cfg).unwrap();
        assert!((h.image.get(0, 0, 0) - 0.6).abs() < 1e-9);
        assert!((h.confidence_after - sigma(0.3)).abs() < 1e-6);
        assert!((h.confidence_after - 0.5744).abs() < 1e-4);
    }

    #[test]
    fn harden_saturated_is_stationary() {
        // p(1) = sigma(1000*0.9 - 500) ~= 1 exactly in f64; raw gradient is 0
        let m = LogisticPixel::new(1000.0, -500.0);
        let cfg = OptimConfig {
            step_size: 0.001,
            iterations: 3,
            epsilon: None,
            use_sign_gradient: false,
            seed: 0,
        };
        let x = pixel(0.9);
        let h = harden_image(&m, &x, 1, &cfg).unwrap();
        assert!(h.image.linf_distance(&x).unwrap() < 1e-9);
        assert!(h.confidence_after > 0.0);
    }

    #[test]
    fn harden_raw_gradient_never_decreases_confidence() {
        // 1-D monotonicity at small alpha
        let m = LogisticPixel::new(3.0, -1.5);
        let cfg = OptimConfig {
            step_size: 1e-3,
            iterations: 50,
            epsilon: None,
            use_sign_gradient: false,
            seed: 0,
        };
        let mut rng = SeedTree::new(44).rng();
        for _ in 0..20 {
            let x = pixel(rng.gen_range(0.0..1.0));
            let h = harden_image(&m, &x, 1, &cfg).unwrap();
            assert!(h.confidence_after >= h.confidence_before - 1e-12);
            assert!(!h.warning);
        }
    }

    #[test]
    fn harden_invalid_label_errors() {
        let m = LogisticPixel::new(3.0, -1.5);
        let cfg = OptimConfig {
            step_size: 0.1,
            iterations: 1,
            epsilon: None,
            use_sign_gradient: true,
            seed: 0,
        };
        assert!(matches!(
            harden_image(&m, &pixel(0.5), 2, &cfg),
            Err(Error::Index(_))
        ));
    }

    #[test]
    fn harden_dataset_empty_and_label_preserving() {
        let m = LogisticPixel::new(3.0, -1.5);
        let cfg = OptimConfig {
            step_size: 0.05,
            iterations: 2,
            epsilon: None,
            use_sign_gradient: true,
            seed: 0,
        };
        let empty = LabeledDataset::new(2).unwrap();
        let (out, warn) = harden_dataset(&m, &empty, &cfg).unwrap();
        assert!(out.is_empty() && warn.is_empty());

        let mut ds = LabeledDataset::new(2).unwrap();
        ds.push(pixel(0.2), 0).unwrap();
        ds.push(pixel(0.8), 1).unwrap();
        ds.push(pixel(0.5), 1).unwrap();
        let (out, _) = harden_dataset(&m, &ds, &cfg).unwrap();
        let before: Vec<usize> = ds.labels().collect();
        let after: Vec<usize> = out.labels().collect();
        assert_eq!(before, after);
    }

    #[test]
    fn apply_patch_full_cover_and_empty() {
        let img = Image::filled(4, 4, [0.1, 0.2, 0.3]).unwrap();
        let full = Patch {
            pixels: Image::filled(4, 4, [0.9, 0.8, 0.7]).unwrap(),
            target_label: 0,
        };
        assert_eq!(apply_patch(&img, &full, (0, 0)).unwrap(), full.pixels);

        let empty = Patch {
            pixels: Image::zeros(0, 0),
            target_label: 0,
        };
        assert_eq!(apply_patch(&img, &empty, (0, 0)).unwrap(), img);
    }

    #[test]
    fn apply_patch_out_of_bounds() {
        let img = Image::zeros(4, 4);
        let p = Patch {
            pixels: Image::zeros(2, 2),
            target_label: 0,
        };
        assert!(matches!(
            apply_patch(&img, &p, (3, 0)),
            Err(Error::Bounds(_))
        ));
    }

    #[test]
    fn random_erase_probability_zero_is_identity() {
        let params = EraseParams {
            erase_probability: 0.0,
            area_fraction: (0.1, 0.3),
            aspect: (0.5, 1.0),
            fill: EraseFill::Gray,
        };
        let img = Image::filled(8, 8, [0.2, 0.4, 0.6]).unwrap();
        let mut rng = SeedTree::new(1).rng();
        for _ in 0..10 {
            assert_eq!(random_erase(&img, &mut rng, &params).unwrap(), img);
        }
    }

    #[test]
    fn random_erase_forced_gray_rectangle() {
        let params = EraseParams {
            erase_probability: 1.0,
            area_fraction: (0.1, 0.2),
            aspect: (1.0, 1.0),
            fill: EraseFill::Gray,
        };
        let img = Image::filled(10, 10, [0.0, 0.0, 0.0]).unwrap();
        let mut rng = SeedTree::new(2).rng();
        let out = random_erase(&img, &mut rng, &params).unwrap();
        // exactly one axis-aligned rectangle of 0.5s; every changed pixel is 0.5
        let mut rows = Vec::new();
        let mut cols = Vec::new();
        for r in 0..10 {
            for c in 0..10 {
                if out.get(r, c, 0) != 0.0 {
                    assert_eq!(out.get(r, c, 0), 0.5);
                    rows.push(r);
                    cols.push(c);
                }
            }
        }
        assert!(!rows.is_empty());
        let (rmin, rmax) = (*rows.iter().min().unwrap(), *rows.iter().max().unwrap());
        let (cmin, cmax) = (*cols.iter().min().unwrap(), *cols.iter().max().unwrap());
        assert_eq!(rows.len(), (rmax - rmin + 1) * (cmax - cmin + 1));
    }

    #[test]
    fn random_erase_is_seed_deterministic() {
        let params = EraseParams {
            erase_probability: 1.0,
            area_fraction: (0.05, 0.4),
            aspect: (0.3, 1.0),
            fill: EraseFill::Random,
        };
        let img = Image::filled(8, 8, [0.1, 0.1, 0.1]).unwrap();
        let a = random_erase(&img, &mut SeedTree::new(9).rng(), &params).unwrap();
        let b = random_erase(&img, &mut SeedTree::new(9).rng(), &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn patch_training_rejects_wrong_labels() {
        let m = LogisticPixel::new(3.0, -1.5);
        let mut ds = LabeledDataset::new(2).unwrap();
        ds.push(pixel(0.5), 0).unwrap();
        let cfg = PatchTrainConfig {
            patch_size: (1, 1),
            iterations: 1,
            step_size: 0.1,
            random_location: true,
            random_erase: None,
            resize_for_eval: None,
            batch_size: 2,
            init: PatchInit::Random,
        };
        let optim = OptimConfig {
            step_size: 0.1,
            iterations: 1,
            epsilon: None,
            use_sign_gradient: true,
            seed: 3,
        };
        assert!(matches!(
            train_patch_2d(&m, &ds, 1, &cfg, &optim),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn patch_zero_iterations_equals_seeded_init() {
        let m = LogisticPixel::new(3.0, -1.5);
        let mut ds = LabeledDataset::new(2).unwrap();
        ds.push(pixel(0.5), 1).unwrap();
        let cfg = PatchTrainConfig {
            patch_size: (1, 1),
            iterations: 0,
            step_size: 0.1,
            random_location: true,
            random_erase: None,
            resize_for_eval: None,
            batch_size: 2,
            init: PatchInit::Random,
        };
        let optim = OptimConfig {
            step_size: 0.1,
            iterations: 0,
            epsilon: None,
            use_sign_gradient: true,
            seed: 11,
        };
        let a = train_patch_2d(&m, &ds, 1, &cfg, &optim).unwrap();
        let b = train_patch_2d(&m, &ds, 1, &cfg, &optim).unwrap();
        assert_eq!(a.pixels, b.pixels);
        // matches the documented init stream
        let mut rng = SeedTree::new(11).child_str("patch2d").child_str("init").rng();
        let expected: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0)).collect();
        assert_eq!(a.pixels.values(), expected.as_slice());
    }

    #[test]
    fn patch_training_raises_logistic_confidence() {
        // the patch covers the single pixel, so a trained patch drives p -> 1
        let m = LogisticPixel::new(3.0, -1.5);
        let mut ds = LabeledDataset::new(2).unwrap();
        for v in [0.1, 0.3, 0.5] {
            ds.push(pixel(v), 1).unwrap();
        }
        let cfg = PatchTrainConfig {
            patch_size: (1, 1),
            iterations: 30,
            step_size: 0.05,
            random_location: true,
            random_erase: None,
            resize_for_eval: None,
            batch_size: 3,
            init: PatchInit::Gray,
        };
        let optim = OptimConfig {
            step_size: 0.05,
            iterations: 30,
            epsilon: None,
            use_sign_gradient: true,
            seed: 5,
        };
        let patch = train_patch_2d(&m, &ds, 1, &cfg, &optim).unwrap();
        // analytic optimum: pixel saturates at 1.0, p = sigma(3 - 1.5)
        assert!((patch.pixels.get(0, 0, 0) - 1.0).abs() < 1e-9);
        let with = mean_confidence_with_patch(&m, &ds, Some(&patch), 1, 17).unwrap();
        let without = mean_confidence_with_patch(&m, &ds, None, 1, 17).unwrap();
        assert!(with >= without, "with {with} < without {without}");
        assert!((with - sigma(1.5)).abs() < 1e-9);
    }

    #[test]
    fn patch_resize_preserves_constant_patches() {
        let p = Patch {
            pixels: Image::filled(6, 6, [0.3, 0.6, 0.9]).unwrap(),
            target_label: 0,
        };
        let r = p.resized(3, 3).unwrap();
        for row in 0..3 {
            for col in 0..3 {
                assert!((r.pixels.get(row, col, 0) - 0.3).abs() < 1e-12);
                assert!((r.pixels.get(row, col, 2) - 0.9).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pgd_dominates_fgsm_in_induced_loss() {
        use crate::classifiers::{train_reference, TrainOptions};

        // small trained model so gradients are meaningful
        let mut ds = LabeledDataset::new(2).unwrap();
        let mut rng = SeedTree::new(3).rng();
        for label in 0..2 {
            for _ in 0..20 {
                let mut img = Image::zeros(8, 8);
                for r in 0..8 {
                    for c in 0..8 {
                        let lit = if label == 0 { c < 4 } else { c >= 4 };
                        let base = if lit { 0.7 } else { 0.2 };
                        for ch in 0..3 {
                            img.set(r, c, ch, base + rng.gen_range(-0.15..0.15));
                        }
                    }
                }
                ds.push(img, label).unwrap();
            }
        }
        let opts = TrainOptions {
            epochs: 4,
            batch_size: 8,
            learning_rate: 0.05,
            seed: 5,
        };
        let (model, _) = train_reference(&ds, 8, 8, &opts, None).unwrap();

        let eps = 0.03;
        let mut dominated = 0;
        let mut total = 0;
        for (img, label) in ds.iter().take(30) {
            let f = fgsm_attack(&model, img, *label, eps).unwrap();
            let p = pgd_attack(&model, img, *label, eps, eps / 10.0, 40).unwrap();
            let lf = induced_loss(&model, &f, *label).unwrap();
            let lp = induced_loss(&model, &p, *label).unwrap();
            if lp > lf {
                dominated += 1;
            }
            total += 1;
        }
        assert!(
            dominated as f64 >= 0.9 * total as f64,
            "pgd beat fgsm on only {dominated}/{total} items"
        );
    }

    proptest! {
        #[test]
        fn attacks_stay_in_epsilon_ball(x0 in 0.0f64..1.0, eps in 0.0f64..0.3) {
            let m = LogisticPixel::new(3.0, -1.5);
            let img = pixel(x0);
            let fg = fgsm_attack(&m, &img, 1, eps).unwrap();
            prop_assert!(fg.linf_distance(&img).unwrap() <= eps + 1e-9);
            prop_assert!(fg.values().iter().all(|v| (0.0..=1.0).contains(v)));
            let pg = pgd_attack(&m, &img, 1, eps, eps / 2.0 + 1e-3, 5).unwrap();
            prop_assert!(pg.linf_distance(&img).unwrap() <= eps + 1e-9);
        }

        #[test]
        fn patch_leaves_outside_pixels_bit_exact(top in 0usize..5, left in 0usize..5) {
            let img = Image::filled(8, 8, [0.25, 0.5, 0.75]).unwrap();
            let p = Patch { pixels: Image::filled(3, 3, [0.9, 0.1, 0.4]).unwrap(), target_label: 0 };
            let out = apply_patch(&img, &p, (top, left)).unwrap();
            for r in 0..8 {
                for c in 0..8 {
                    let inside = (top..top + 3).contains(&r) && (left..left + 3).contains(&c);
                    for ch in 0..3 {
                        if inside {
                            prop_assert_eq!(out.get(r, c, ch), p.pixels.get(r - top, c - left, ch));
                        } else {
                            prop_assert!(out.get(r, c, ch).to_bits() == img.get(r, c, ch).to_bits());
                        }
                    }
                }
            }
        }
    }
}
