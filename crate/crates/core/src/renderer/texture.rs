//! Optimizable texture parameters: square UV rasters and per-vertex colors,
//! plus the bilinear sampler whose (texel, weight) pairs feed the renderer's
//! exact jacobian.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::renderer::mesh::Mesh;

/// A square, power-of-two RGB texture with values in `[0, 1]`.
///
/// Row 0 is the top of the raster; `v = 1` samples row 0 and `v = 0` the
/// bottom row, matching PNG orientation on load/save.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureUv {
    resolution: usize,
    data: Vec<f64>,
}

impl TextureUv {
    pub fn filled(resolution: usize, rgb: [f64; 3]) -> Result<Self> {
        check_resolution(resolution)?;
        for v in rgb {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("texture fill {v} outside [0,1]")));
            }
        }
        let mut data = Vec::with_capacity(resolution * resolution * 3);
        for _ in 0..resolution * resolution {
            data.extend_from_slice(&rgb);
        }
        Ok(TextureUv { resolution, data })
    }

    pub fn from_values(resolution: usize, data: Vec<f64>) -> Result<Self> {
        check_resolution(resolution)?;
        if data.len() != resolution * resolution * 3 {
            return Err(Error::Dimension(format!(
                "expected {} values, got {}",
                resolution * resolution * 3,
                data.len()
            )));
        }
        let data = data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(TextureUv { resolution, data })
    }

    pub fn from_image(img: &Image) -> Result<Self> {
        let (h, w) = img.shape();
        if h != w {
            return Err(Error::Format(format!("texture must be square, got {h}x{w}")));
        }
        TextureUv::from_values(h, img.values().to_vec())
    }

    pub fn to_image(&self) -> Image {
        Image::from_vec_clipped(self.resolution, self.resolution, self.data.clone())
            .expect("texture values are already in range")
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    /// Number of texels (the gradient domain size).
    pub fn texel_count(&self) -> usize {
        self.resolution * self.resolution
    }

    #[inline]
    pub fn texel(&self, index: usize) -> [f64; 3] {
        [
            self.data[index * 3],
            self.data[index * 3 + 1],
            self.data[index * 3 + 2],
        ]
    }

    #[inline]
    pub fn set_texel(&mut self, row: usize, col: usize, rgb: [f64; 3]) {
        let base = (row * self.resolution + col) * 3;
        for (i, v) in rgb.iter().enumerate() {
            self.data[base + i] = v.clamp(0.0, 1.0);
        }
    }
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < 4 || !resolution.is_power_of_two() {
        return Err(Error::Domain(format!(
            "texture resolution {resolution} must be a power of two >= 4"
        )));
    }
    Ok(())
}

/// One RGB color per mesh vertex, barycentrically interpolated at render time.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexTexture {
    colors: Vec<[f64; 3]>,
}

impl VertexTexture {
    pub fn new(colors: Vec<[f64; 3]>) -> Result<Self> {
        if colors.is_empty() {
            return Err(Error::Domain("empty vertex texture".into()));
        }
        let colors = colors
            .into_iter()
            .map(|c| [c[0].clamp(0.0, 1.0), c[1].clamp(0.0, 1.0), c[2].clamp(0.0, 1.0)])
            .collect();
        Ok(VertexTexture { colors })
    }

    /// Mid-gray initialization, one color per mesh vertex.
    pub fn gray(mesh: &Mesh) -> Self {
        VertexTexture {
            colors: vec![[0.5, 0.5, 0.5]; mesh.vertex_count()],
        }
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn colors(&self) -> &[[f64; 3]] {
        &self.colors
    }

    pub fn flat_values(&self) -> Vec<f64> {
        self.colors.iter().flatten().copied().collect()
    }

    pub fn from_flat(values: &[f64]) -> Result<Self> {
        if values.len() % 3 != 0 || values.is_empty() {
            return Err(Error::Dimension(format!(
                "vertex texture needs 3k values, got {}",
                values.len()
            )));
        }
        VertexTexture::new(
            values
                .chunks_exact(3)
                .map(|c| [c[0], c[1], c[2]])
                .collect(),
        )
    }
}

/// The optimizable parameter a scene is bound to.
#[derive(Debug, Clone, PartialEq)]
pub enum TextureBinding {
    Uv(TextureUv),
    Vertex(VertexTexture),
}

impl TextureBinding {
    /// Flattened parameter vector (3 values per texel or vertex).
    pub fn flat_values(&self) -> Vec<f64> {
        match self {
            TextureBinding::Uv(t) => t.values().to_vec(),
            TextureBinding::Vertex(v) => v.flat_values(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            TextureBinding::Uv(t) => t.texel_count(),
            TextureBinding::Vertex(v) => v.len(),
        }
    }

    pub fn with_flat_values(&self, values: Vec<f64>) -> Result<TextureBinding> {
        match self {
            TextureBinding::Uv(t) => Ok(TextureBinding::Uv(TextureUv::from_values(
                t.resolution(),
                values,
            )?)),
            TextureBinding::Vertex(_) => Ok(TextureBinding::Vertex(VertexTexture::from_flat(
                &values,
            )?)),
        }
    }

    /// Check this binding is usable with `mesh`.
    pub fn check_against(&self, mesh: &Mesh) -> Result<()> {
        match self {
            TextureBinding::Uv(_) if !mesh.has_uv() => Err(Error::Format(
                "uv texture bound to a mesh without uv coordinates".into(),
            )),
            TextureBinding::Vertex(v) if v.len() != mesh.vertex_count() => {
                Err(Error::Format(format!(
                    "vertex texture has {} colors for {} vertices",
                    v.len(),
                    mesh.vertex_count()
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Bilinear sample at `(u, v)`, clamped at borders. Returns the blended RGB
/// and the contributing `(texel index, weight)` pairs; weights are
/// non-negative and sum to 1, duplicate texels are merged and zero weights
/// dropped, so an exact texel-center hit yields a single pair of weight 1.
pub fn sample_bilinear(texture: &TextureUv, u: f64, v: f64) -> ([f64; 3], Vec<(usize, f64)>) {
    let t = texture.resolution();
    let x = u.clamp(0.0, 1.0) * t as f64 - 0.5;
    let y = (1.0 - v.clamp(0.0, 1.0)) * t as f64 - 0.5;
    let x0f = x.floor();
    let y0f = y.floor();
    let fx = x - x0f;
    let fy = y - y0f;
    let clamp_i = |i: f64| (i.max(0.0) as usize).min(t - 1);
    let (x0, x1) = (clamp_i(x0f), clamp_i(x0f + 1.0));
    let (y0, y1) = (clamp_i(y0f), clamp_i(y0f + 1.0));

    let raw = [
        (y0 * t + x0, (1.0 - fx) * (1.0 - fy)),
        (y0 * t + x1, fx * (1.0 - fy)),
        (y1 * t + x0, (1.0 - fx) * fy),
        (y1 * t + x1, fx * fy),
    ];
    let mut pairs: Vec<(usize, f64)> = Vec::with_capacity(4);
    for (idx, w) in raw {
        if w == 0.0 {
            continue;
        }
        match pairs.iter_mut().find(|(i, _)| *i == idx) {
            Some((_, acc)) => *acc += w,
            None => pairs.push((idx, w)),
        }
    }

    let mut rgb = [0.0; 3];
    for (idx, w) in &pairs {
        let texel = texture.texel(*idx);
        for c in 0..3 {
            rgb[c] += w * texel[c];
        }
    }
    (rgb, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_tone() -> TextureUv {
        // left half dark, right half bright
        let t = 4;
        let mut tex = TextureUv::filled(t, [0.2, 0.2, 0.2]).unwrap();
        for row in 0..t {
            for col in t / 2..t {
                tex.set_texel(row, col, [0.8, 0.8, 0.8]);
            }
        }
        tex
    }

    #[test]
    fn resolution_must_be_power_of_two() {
        assert!(TextureUv::filled(3, [0.0; 3]).is_err());
        assert!(TextureUv::filled(6, [0.0; 3]).is_err());
        assert!(TextureUv::filled(2, [0.0; 3]).is_err());
        assert!(TextureUv::filled(4, [0.0; 3]).is_ok());
        assert!(TextureUv::filled(64, [0.0; 3]).is_ok());
    }

    #[test]
    fn exact_texel_center_is_a_single_weight() {
        let tex = two_tone();
        // texel (row 1, col 2) center: u = 2.5/4, v = 1 - 1.5/4
        let (rgb, pairs) = sample_bilinear(&tex, 2.5 / 4.0, 1.0 - 1.5 / 4.0);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0], (4 + 2, 1.0));
        assert!((rgb[0] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn horizontal_midpoint_averages_two_texels() {
        let tex = two_tone();
        // midpoint between col 1 and col 2 on row 1
        let (rgb, pairs) = sample_bilinear(&tex, 3.0 / 4.0 - 0.25, 1.0 - 1.5 / 4.0);
        assert_eq!(pairs.len(), 2);
        for (_, w) in &pairs {
            assert!((w - 0.5).abs() < 1e-12);
        }
        assert!((rgb[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn uniform_texture_samples_constant() {
        let tex = TextureUv::filled(8, [0.3, 0.6, 0.9]).unwrap();
        for (u, v) in [(0.0, 0.0), (1.0, 1.0), (0.37, 0.81), (0.5, 0.0)] {
            let (rgb, _) = sample_bilinear(&tex, u, v);
            assert!((rgb[0] - 0.3).abs() < 1e-12);
            assert!((rgb[1] - 0.6).abs() < 1e-12);
            assert!((rgb[2] - 0.9).abs() < 1e-12);
        }
    }

    #[test]
    fn vertex_texture_gray_matches_vertex_count() {
        let mesh = crate::renderer::mesh::uv_sphere(1.0, 6, 8).unwrap();
        let vt = VertexTexture::gray(&mesh);
        assert_eq!(vt.len(), mesh.vertex_count());
        assert!(vt.colors().iter().all(|c| *c == [0.5, 0.5, 0.5]));
    }

    proptest! {
        #[test]
        fn bilinear_weights_sum_to_one(u in 0.0f64..=1.0, v in 0.0f64..=1.0) {
            let tex = two_tone();
            let (_, pairs) = sample_bilinear(&tex, u, v);
            let total: f64 = pairs.iter().map(|(_, w)| w).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(pairs.iter().all(|(_, w)| *w > 0.0));
            prop_assert!(pairs.len() <= 4);
        }
    }
}
