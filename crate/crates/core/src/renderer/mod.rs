//! Batched differentiable texture rendering.
//!
//! Rasterizes a fixed triangle mesh under sampled cameras and lights. Pixels
//! are a sparse linear function of texture values (hard z-buffer visibility,
//! Lambert + ambient shading, bilinear UV or barycentric vertex-color
//! albedo), and the exact transpose map is recorded per pixel for gradients.
//! Gradients flow to textures only; geometry, cameras, and lights are fixed.

mod camera;
mod io;
mod mesh;
mod raster;
mod sample;
mod texture;
pub(crate) mod vec3;

pub use camera::{Camera, Light};
pub use io::{load_obj, load_ply, save_ply};
pub use mesh::{box_mesh, quad, torus, uv_sphere, Mesh};
pub use raster::{render_batch, texture_gradient, RenderedBatch, Scene, ViewJacobian};
pub use sample::{sample_scene_params, SceneParamRanges};
pub use texture::{sample_bilinear, TextureBinding, TextureUv, VertexTexture};
