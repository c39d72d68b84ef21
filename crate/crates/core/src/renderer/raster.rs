//! Batched rasterization with hard z-buffer visibility.
//!
//! Because geometry, cameras, and lights are fixed inputs, every covered
//! pixel is an exactly linear function of texture values:
//! `pixel = sum_i weight_i * texture_i` with `weight_i = shading * blend_i`.
//! The per-pixel `(index, weight)` lists are recorded during rendering and
//! [`texture_gradient`] applies their transpose, so the gradient map is exact
//! by construction rather than approximated.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{Image, PixelGrad};
use crate::renderer::camera::{Camera, Light};
use crate::renderer::mesh::Mesh;
use crate::renderer::texture::{sample_bilinear, TextureBinding};
use crate::renderer::vec3::{dot, normalize_or, sub, Vec3};

/// A mesh bound to its optimizable texture, paired camera/light views, and
/// raster settings. Each view renders under its own light.
pub struct Scene<'a> {
    pub mesh: &'a Mesh,
    pub texture: &'a TextureBinding,
    pub views: &'a [(Camera, Light)],
    /// (height, width) of each rendered image.
    pub image_size: (usize, usize),
    pub background: [f64; 3],
}

impl Scene<'_> {
    fn validate(&self) -> Result<()> {
        if self.views.is_empty() {
            return Err(Error::Domain("scene has no cameras".into()));
        }
        for (c, l) in self.views {
            c.validate()?;
            l.validate()?;
        }
        if self.image_size.0 == 0 || self.image_size.1 == 0 {
            return Err(Error::Domain("empty image size".into()));
        }
        for v in self.background {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("background {v} outside [0,1]")));
            }
        }
        self.texture.check_against(self.mesh)
    }
}

/// Sparse jacobian of one rendered view: per pixel, the texture slots it
/// reads and their weights. Background pixels have empty entries.
#[derive(Debug, Clone)]
pub struct ViewJacobian {
    entries: Vec<Vec<(usize, f64)>>,
}

impl ViewJacobian {
    pub fn pixel_entries(&self, pixel: usize) -> &[(usize, f64)] {
        &self.entries[pixel]
    }

    pub fn covered_pixels(&self) -> usize {
        self.entries.iter().filter(|e| !e.is_empty()).count()
    }
}

/// Output of [`render_batch`]: one image per camera plus the sparse linear
/// map from texture values to covered pixels.
pub struct RenderedBatch {
    pub images: Vec<Image>,
    pub jacobians: Vec<ViewJacobian>,
    param_count: usize,
}

impl RenderedBatch {
    /// Number of texture parameters (texels or vertices) behind this batch.
    pub fn param_count(&self) -> usize {
        self.param_count
    }

    /// Apply the recorded linear map to an arbitrary flat texture vector
    /// (3 values per parameter). Dual route to rasterization used by the
    /// adjoint and linearity checks.
    pub fn apply_jacobian(&self, flat_texture: &[f64]) -> Result<Vec<Vec<f64>>> {
        if flat_texture.len() != self.param_count * 3 {
            return Err(Error::Dimension(format!(
                "expected {} texture values, got {}",
                self.param_count * 3,
                flat_texture.len()
            )));
        }
        Ok(self
            .jacobians
            .iter()
            .map(|jac| {
                let mut out = vec![0.0; jac.entries.len() * 3];
                for (pix, entries) in jac.entries.iter().enumerate() {
                    for (idx, w) in entries {
                        for c in 0..3 {
                            out[pix * 3 + c] += w * flat_texture[idx * 3 + c];
                        }
                    }
                }
                out
            })
            .collect())
    }
}

/// Rasterize every camera view of the scene. Views render independently (in
/// parallel) and deterministically: the same scene renders bit-identically.
pub fn render_batch(scene: &Scene) -> Result<RenderedBatch> {
    scene.validate()?;
    let views: Vec<(Image, ViewJacobian)> = scene
        .views
        .par_iter()
        .map(|(camera, light)| render_view(scene, camera, light))
        .collect();
    let mut images = Vec::with_capacity(views.len());
    let mut jacobians = Vec::with_capacity(views.len());
    for (img, jac) in views {
        images.push(img);
        jacobians.push(jac);
    }
    Ok(RenderedBatch {
        images,
        jacobians,
        param_count: scene.texture.param_count(),
    })
}

fn render_view(scene: &Scene, camera: &Camera, light: &Light) -> (Image, ViewJacobian) {
    let (h, w) = scene.image_size;
    let eye = camera.eye();
    let (right, up, forward) = camera.basis();
    let focal = (h as f64 / 2.0) / (camera.fov_y_deg.to_radians() / 2.0).tan();
    let neg_light = [-light.direction[0], -light.direction[1], -light.direction[2]];

    let mut data = Vec::with_capacity(h * w * 3);
    for _ in 0..h * w {
        data.extend_from_slice(&scene.background);
    }
    let mut zbuf = vec![f64::INFINITY; h * w];
    let mut entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); h * w];

    let vertices = scene.mesh.vertices();
    let normals = scene.mesh.normals();

    for (fi, face) in scene.mesh.faces().iter().enumerate() {
        // project corners; depth is the distance along the view axis
        let mut px = [[0.0f64; 2]; 3];
        let mut depth = [0.0f64; 3];
        let mut behind = false;
        for (k, &vi) in face.iter().enumerate() {
            let rel = sub(vertices[vi], eye);
            let d = dot(forward, rel);
            if d <= 1e-9 {
                behind = true;
                break;
            }
            let sx = focal * dot(right, rel) / d;
            let sy = focal * dot(up, rel) / d;
            px[k] = [w as f64 / 2.0 + sx, h as f64 / 2.0 - sy];
            depth[k] = d;
        }
        if behind {
            continue;
        }

        let area = edge(px[0], px[1], px[2]);
        if area.abs() < 1e-12 {
            continue;
        }

        let min_x = px.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let max_x = px.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        let min_y = px.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let max_y = px.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
        let c0 = (min_x - 0.5).floor().max(0.0) as usize;
        let c1 = ((max_x - 0.5).ceil() as isize).min(w as isize - 1);
        let r0 = (min_y - 0.5).floor().max(0.0) as usize;
        let r1 = ((max_y - 0.5).ceil() as isize).min(h as isize - 1);
        if c1 < c0 as isize || r1 < r0 as isize {
            continue;
        }

        for r in r0..=r1 as usize {
            for c in c0..=c1 as usize {
                let q = [c as f64 + 0.5, r as f64 + 0.5];
                let l0 = edge(px[1], px[2], q) / area;
                let l1 = edge(px[2], px[0], q) / area;
                let l2 = edge(px[0], px[1], q) / area;
                if l0 < 0.0 || l1 < 0.0 || l2 < 0.0 {
                    continue;
                }
                // perspective-correct interpolation weights
                let inv_d = l0 / depth[0] + l1 / depth[1] + l2 / depth[2];
                let d_pix = 1.0 / inv_d;
                let pix = r * w + c;
                if d_pix >= zbuf[pix] {
                    continue;
                }
                zbuf[pix] = d_pix;
                let wgt = [
                    (l0 / depth[0]) * d_pix,
                    (l1 / depth[1]) * d_pix,
                    (l2 / depth[2]) * d_pix,
                ];

                let mut n: Vec3 = [0.0; 3];
                for k in 0..3 {
                    let vn = normals[face[k]];
                    for a in 0..3 {
                        n[a] += wgt[k] * vn[a];
                    }
                }
                let n = normalize_or(n, [0.0, 0.0, 1.0]);
                let shade = light.ambient + light.diffuse * dot(n, neg_light).max(0.0);

                let pixel_entries: Vec<(usize, f64)> = match scene.texture {
                    TextureBinding::Uv(tex) => {
                        let uvs = scene.mesh.uv().expect("validated: uv present")[fi];
                        let mut u = 0.0;
                        let mut v = 0.0;
                        for k in 0..3 {
                            u += wgt[k] * uvs[k][0];
                            v += wgt[k] * uvs[k][1];
                        }
                        let (_, pairs) = sample_bilinear(tex, u, v);
                        pairs.into_iter().map(|(i, bw)| (i, shade * bw)).collect()
                    }
                    TextureBinding::Vertex(_) => face
                        .iter()
                        .zip(wgt)
                        .map(|(&vi, bw)| (vi, shade * bw))
                        .collect(),
                };

                // pixel value computed through the same entry list the
                // gradient uses, so the linear relation is exact
                let flat = match scene.texture {
                    TextureBinding::Uv(tex) => tex.values(),
                    TextureBinding::Vertex(_) => &[],
                };
                let mut rgb = [0.0; 3];
                match scene.texture {
                    TextureBinding::Uv(_) => {
                        for (idx, wv) in &pixel_entries {
                            for ch in 0..3 {
                                rgb[ch] += wv * flat[idx * 3 + ch];
                            }
                        }
                    }
                    TextureBinding::Vertex(vt) => {
                        for (idx, wv) in &pixel_entries {
                            let col = vt.colors()[*idx];
                            for ch in 0..3 {
                                rgb[ch] += wv * col[ch];
                            }
                        }
                    }
                }
                for ch in 0..3 {
                    data[pix * 3 + ch] = rgb[ch];
                }
                entries[pix] = pixel_entries;
            }
        }
    }

    let image = Image::from_vec_clipped(h, w, data).expect("raster buffer has correct size");
    (image, ViewJacobian { entries })
}

#[inline]
fn edge(a: [f64; 2], b: [f64; 2], q: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0])
}

/// Transpose of the render map: scatter-add per-pixel gradients into texture
/// slots. Accumulation order is fixed (view-major, pixel-major, entry order)
/// so results are bit-stable regardless of how rendering was parallelized.
pub fn texture_gradient(batch: &RenderedBatch, pixel_grads: &[PixelGrad]) -> Result<Vec<f64>> {
    if pixel_grads.len() != batch.images.len() {
        return Err(Error::Dimension(format!(
            "{} gradient images for {} rendered views",
            pixel_grads.len(),
            batch.images.len()
        )));
    }
    for (i, (g, img)) in pixel_grads.iter().zip(&batch.images).enumerate() {
        if g.shape() != img.shape() {
            return Err(Error::Dimension(format!(
                "view {i}: gradient {:?} vs image {:?}",
                g.shape(),
                img.shape()
            )));
        }
    }
    let mut grad = vec![0.0; batch.param_count * 3];
    for (jac, pg) in batch.jacobians.iter().zip(pixel_grads) {
        for (pix, entries) in jac.entries.iter().enumerate() {
            for (idx, w) in entries {
                for ch in 0..3 {
                    grad[idx * 3 + ch] += pg.data[pix * 3 + ch] * w;
                }
            }
        }
    }
    Ok(grad)
}
