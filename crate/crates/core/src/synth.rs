//! Procedural datasets at desk scale: ten texture-pattern classes painted
//! either directly as labeled images or onto mesh textures rendered under
//! sampled views. Classes differ by pattern, not geometry, so an untextured
//! object is genuinely ambiguous to a classifier trained on these.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::renderer::{
    render_batch, sample_scene_params, Mesh, SceneParamRanges, TextureBinding, TextureUv,
};
use crate::rng::SeedTree;
use crate::signals3d::SceneTemplate;

/// Number of pattern classes produced by this module.
pub const NUM_PATTERN_CLASSES: usize = 10;

/// Per-sample jitter drawn once and applied across the whole pattern.
struct Jitter {
    hue: f64,
    brightness: f64,
    phase: f64,
    freq: f64,
}

impl Jitter {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        Jitter {
            hue: rng.gen_range(-0.08..0.08),
            brightness: rng.gen_range(-0.10..0.10),
            phase: rng.gen_range(0.0..1.0),
            freq: rng.gen_range(0.8..1.25),
        }
    }
}

/// Base color of a pattern class at normalized coordinates `(x, y)` in
/// `[0, 1)`, before jitter and noise.
fn pattern_rgb(class: usize, x: f64, y: f64, j: &Jitter) -> [f64; 3] {
    let stripes = |t: f64, periods: f64, a: [f64; 3], b: [f64; 3]| -> [f64; 3] {
        let s = ((t * periods * j.freq + j.phase) * std::f64::consts::TAU).sin();
        if s >= 0.0 {
            a
        } else {
            b
        }
    };
    match class {
        0 => [0.82, 0.16, 0.16],
        1 => [0.16, 0.78, 0.20],
        2 => [0.18, 0.26, 0.85],
        3 => stripes(y, 3.0, [0.85, 0.78, 0.15], [0.25, 0.22, 0.05]),
        4 => stripes(x, 3.0, [0.15, 0.75, 0.80], [0.05, 0.22, 0.25]),
        5 => {
            let f = 4.0 * j.freq;
            let cx = ((x * f + j.phase).floor() as i64) & 1;
            let cy = ((y * f + j.phase).floor() as i64) & 1;
            if cx == cy {
                [0.88, 0.88, 0.88]
            } else {
                [0.12, 0.12, 0.12]
            }
        }
        6 => stripes(x + y, 3.0, [0.80, 0.20, 0.78], [0.20, 0.05, 0.20]),
        7 => {
            // dots on a jittered grid
            let f = 4.0 * j.freq;
            let dx = (x * f + j.phase).fract() - 0.5;
            let dy = (y * f + j.phase).fract() - 0.5;
            if dx * dx + dy * dy < 0.07 {
                [0.92, 0.90, 0.25]
            } else {
                [0.15, 0.12, 0.35]
            }
        }
        8 => {
            let r = ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
            stripes(r, 4.0, [0.90, 0.45, 0.12], [0.25, 0.12, 0.04])
        }
        9 => {
            if y < 0.5 {
                [0.90, 0.55, 0.15]
            } else {
                [0.45, 0.15, 0.60]
            }
        }
        _ => [0.5, 0.5, 0.5],
    }
}

fn paint(
    class: usize,
    height: usize,
    width: usize,
    rng: &mut ChaCha8Rng,
    noise: f64,
) -> Vec<f64> {
    let j = Jitter::draw(rng);
    let mut data = Vec::with_capacity(height * width * 3);
    for r in 0..height {
        for c in 0..width {
            let x = (c as f64 + 0.5) / width as f64;
            let y = (r as f64 + 0.5) / height as f64;
            let rgb = pattern_rgb(class, x, y, &j);
            for (ch, base) in rgb.iter().enumerate() {
                let hue_shift = match ch {
                    0 => j.hue,
                    2 => -j.hue,
                    _ => 0.0,
                };
                let n = if noise > 0.0 {
                    rng.gen_range(-noise..noise)
                } else {
                    0.0
                };
                data.push((base + hue_shift + j.brightness + n).clamp(0.0, 1.0));
            }
        }
    }
    data
}

/// A labeled image set of the ten pattern classes. `noise` is the uniform
/// per-channel perturbation amplitude; `confusion` in `[0, 1)` blends each
/// sample toward a random other class's pattern by a weight drawn from
/// `[0, confusion)`, which places samples near decision boundaries and
/// controls how robust the learned margins can be.
pub fn pattern_dataset(
    per_class: usize,
    size: usize,
    noise: f64,
    confusion: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if per_class == 0 || size == 0 {
        return Err(Error::Domain("per_class and size must be positive".into()));
    }
    if !(0.0..1.0).contains(&confusion) {
        return Err(Error::Domain(format!("confusion {confusion} outside [0,1)")));
    }
    let root = SeedTree::new(seed).child_str("pattern-dataset");
    let mut ds = LabeledDataset::new(NUM_PATTERN_CLASSES)?;
    for class in 0..NUM_PATTERN_CLASSES {
        let class_root = root.child(class as u64);
        for i in 0..per_class {
            let mut rng = class_root.child(i as u64).rng();
            let mut data = paint(class, size, size, &mut rng, noise);
            if confusion > 0.0 {
                let other = {
                    let o = rng.gen_range(0..NUM_PATTERN_CLASSES - 1);
                    if o >= class {
                        o + 1
                    } else {
                        o
                    }
                };
                let lambda = rng.gen_range(0.0..confusion);
                let overlay = paint(other, size, size, &mut rng, 0.0);
                for (d, o) in data.iter_mut().zip(overlay) {
                    *d = (1.0 - lambda) * *d + lambda * o;
                }
            }
            ds.push(Image::from_vec_clipped(size, size, data)?, class)?;
        }
    }
    Ok(ds)
}

/// A jittered class texture (used both to build render datasets and as the
/// "original" texture of evaluation objects).
pub fn class_texture(class: usize, resolution: usize, noise: f64, seed: u64) -> Result<TextureUv> {
    if class >= NUM_PATTERN_CLASSES {
        return Err(Error::Index(format!(
            "class {class} of {NUM_PATTERN_CLASSES}"
        )));
    }
    let mut rng = SeedTree::new(seed).child_str("class-texture").rng();
    let data = paint(class, resolution, resolution, &mut rng, noise);
    TextureUv::from_values(resolution, data)
}

/// Settings for [`render_dataset`].
#[derive(Debug, Clone)]
pub struct RenderDatasetSpec {
    pub per_class: usize,
    pub image_size: usize,
    pub texture_resolution: usize,
    pub texture_noise: f64,
    pub ranges: SceneParamRanges,
    pub background: [f64; 3],
}

/// Render the ten pattern classes on `mesh` under sampled views, one fresh
/// jittered texture per sample. Deterministic given the seed.
pub fn render_dataset(mesh: &Mesh, spec: &RenderDatasetSpec, seed: u64) -> Result<LabeledDataset> {
    if spec.per_class == 0 {
        return Err(Error::Domain("per_class must be positive".into()));
    }
    let root = SeedTree::new(seed).child_str("render-dataset");
    let mut ds = LabeledDataset::new(NUM_PATTERN_CLASSES)?;
    for class in 0..NUM_PATTERN_CLASSES {
        let class_root = root.child(class as u64);
        for i in 0..spec.per_class {
            let node = class_root.child(i as u64);
            let mut tex_rng = node.child_str("texture").rng();
            let data = paint(
                class,
                spec.texture_resolution,
                spec.texture_resolution,
                &mut tex_rng,
                spec.texture_noise,
            );
            let texture =
                TextureBinding::Uv(TextureUv::from_values(spec.texture_resolution, data)?);
            let mut view_rng = node.child_str("view").rng();
            let views = sample_scene_params(&mut view_rng, &spec.ranges, 1)?;
            let template = SceneTemplate {
                mesh: mesh.clone(),
                texture: texture.clone(),
                ranges: spec.ranges.clone(),
                image_size: (spec.image_size, spec.image_size),
                background: spec.background,
            };
            let batch = render_batch(&template.scene_with(&texture, &views))?;
            ds.push(batch.images.into_iter().next().expect("one view"), class)?;
        }
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renderer::uv_sphere;

    #[test]
    fn dataset_is_deterministic_and_balanced() {
        let a = pattern_dataset(3, 8, 0.1, 0.4, 42).unwrap();
        let b = pattern_dataset(3, 8, 0.1, 0.4, 42).unwrap();
        assert_eq!(a.len(), 30);
        assert_eq!(a.num_classes(), 10);
        for ((ia, la), (ib, lb)) in a.iter().zip(b.iter()) {
            assert_eq!(la, lb);
            assert_eq!(ia, ib);
        }
        let c = pattern_dataset(3, 8, 0.1, 0.4, 43).unwrap();
        let any_diff = a
            .iter()
            .zip(c.iter())
            .any(|((ia, _), (ic, _))| ia != ic);
        assert!(any_diff);
    }

    #[test]
    fn classes_are_visually_distinct() {
        // mean colors of solid classes differ strongly
        let ds = pattern_dataset(2, 16, 0.0, 0.0, 7).unwrap();
        let mean = |img: &Image, ch: usize| -> f64 {
            let mut s = 0.0;
            for r in 0..16 {
                for c in 0..16 {
                    s += img.get(r, c, ch);
                }
            }
            s / 256.0
        };
        let (red_img, _) = ds.get(0).unwrap();
        let (green_img, _) = ds.get(2).unwrap();
        assert!(mean(red_img, 0) > 0.6);
        assert!(mean(green_img, 1) > 0.6);
        assert!(mean(red_img, 1) < 0.4);
    }

    #[test]
    fn render_dataset_labels_and_shapes() {
        let mesh = uv_sphere(1.0, 5, 6).unwrap();
        let spec = RenderDatasetSpec {
            per_class: 1,
            image_size: 16,
            texture_resolution: 16,
            texture_noise: 0.05,
            ranges: SceneParamRanges::default(),
            background: [0.0; 3],
        };
        let ds = render_dataset(&mesh, &spec, 3).unwrap();
        assert_eq!(ds.len(), 10);
        for (img, _) in ds.iter() {
            assert_eq!(img.shape(), (16, 16));
        }
        let labels: Vec<usize> = ds.labels().collect();
        assert_eq!(labels, (0..10).collect::<Vec<_>>());
    }
}
