//! Experiment configuration: a strict TOML schema (unknown keys are
//! rejected) describing one job end to end.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classifiers::{
    load_checkpoint, ChannelMeanProbe, DifferentiableClassifier, LogisticPixel, TrainOptions,
};
use crate::error::{Error, Result};
use crate::eval::AttackSpec;
use crate::prob::OptimConfig;
use crate::renderer::{
    load_obj, load_ply, Camera, Light, Mesh, SceneParamRanges, TextureBinding, TextureUv,
};
use crate::signals2d::PatchTrainConfig;
use crate::signals3d::{PatchRegion, SceneTemplate, SignalMode};

/// Job kind; must match the CLI subcommand that runs it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JobKind {
    TrainRef,
    Harden,
    AttackEval,
    Patch2d,
    Texture3d,
    Patch3d,
    Sweep,
    Transfer,
    Render,
}

impl JobKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            JobKind::TrainRef => "train-ref",
            JobKind::Harden => "harden",
            JobKind::AttackEval => "attack-eval",
            JobKind::Patch2d => "patch2d",
            JobKind::Texture3d => "texture3d",
            JobKind::Patch3d => "patch3d",
            JobKind::Sweep => "sweep",
            JobKind::Transfer => "transfer",
            JobKind::Render => "render",
        }
    }
}

/// Top-level experiment description. Sections are optional; each job kind
/// validates that the sections it needs are present.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: JobKind,
    pub seed: u64,
    #[serde(default)]
    pub dataset: Option<DatasetConfig>,
    /// For attack-eval: the original (unhardened) counterpart; its presence
    /// switches the robustness table to paired `hardened/original` cells.
    #[serde(default)]
    pub paired_dataset: Option<DatasetConfig>,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    /// For transfer jobs: one model per row.
    #[serde(default)]
    pub models: Option<Vec<ModelConfig>>,
    #[serde(default)]
    pub scene: Option<SceneConfig>,
    #[serde(default)]
    pub train: Option<TrainSection>,
    #[serde(default)]
    pub optim: Option<OptimConfig>,
    #[serde(default)]
    pub patch2d: Option<Patch2dSection>,
    #[serde(default)]
    pub signal: Option<SignalSection>,
    #[serde(default)]
    pub patch_region: Option<PatchRegion>,
    #[serde(default)]
    pub attacks: Option<Vec<AttackSpec>>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub views: Option<Vec<ViewConfig>>,
}

impl ExperimentConfig {
    /// Parse strict TOML; unknown keys anywhere are a config error.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    fn missing(section: &str, kind: JobKind) -> Error {
        Error::Config(format!(
            "{section}: section required for kind '{}'",
            kind.as_str()
        ))
    }

    pub fn require_dataset(&self) -> Result<&DatasetConfig> {
        self.dataset
            .as_ref()
            .ok_or_else(|| Self::missing("dataset", self.kind))
    }

    pub fn require_model(&self) -> Result<&ModelConfig> {
        self.model
            .as_ref()
            .ok_or_else(|| Self::missing("model", self.kind))
    }

    pub fn require_scene(&self) -> Result<&SceneConfig> {
        self.scene
            .as_ref()
            .ok_or_else(|| Self::missing("scene", self.kind))
    }

    pub fn require_optim(&self) -> Result<&OptimConfig> {
        self.optim
            .as_ref()
            .ok_or_else(|| Self::missing("optim", self.kind))
    }

    pub fn require_signal(&self) -> Result<&SignalSection> {
        self.signal
            .as_ref()
            .ok_or_else(|| Self::missing("signal", self.kind))
    }
}

/// Either a directory of class subdirectories of PNGs, or a synthetic
/// pattern set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<SyntheticDataset>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticDataset {
    pub per_class: usize,
    pub size: usize,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub confusion: f64,
    /// Defaults to the job seed when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl DatasetConfig {
    pub fn load(&self, job_seed: u64) -> Result<crate::dataset::LabeledDataset> {
        match (&self.dir, &self.synthetic) {
            (Some(dir), None) => crate::dataset::LabeledDataset::load_dir(dir),
            (None, Some(synth)) => crate::synth::pattern_dataset(
                synth.per_class,
                synth.size,
                synth.noise,
                synth.confusion,
                synth.seed.unwrap_or(job_seed),
            ),
            _ => Err(Error::Config(
                "dataset: set exactly one of 'dir' or 'synthetic'".into(),
            )),
        }
    }
}

/// A classifier source: checkpoint file or analytic probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub probe: Option<ProbeConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeConfig {
    /// `p(class 1)` = mean of one channel over the image.
    ChannelMean { channel: usize },
    /// Two-class logistic over one pixel.
    LogisticPixel { weight: f64, bias: f64 },
}

impl ModelConfig {
    /// `input_shape` is needed by probes that work at image scale.
    pub fn load(&self, input_shape: (usize, usize)) -> Result<Arc<dyn DifferentiableClassifier>> {
        match (&self.checkpoint, &self.probe) {
            (Some(path), None) => Ok(Arc::new(load_checkpoint(path)?)),
            (None, Some(ProbeConfig::ChannelMean { channel })) => {
                Ok(Arc::new(ChannelMeanProbe::new(*channel, input_shape)?))
            }
            (None, Some(ProbeConfig::LogisticPixel { weight, bias })) => {
                Ok(Arc::new(LogisticPixel::new(*weight, *bias)))
            }
            _ => Err(Error::Config(
                "model: set exactly one of 'checkpoint' or 'probe'".into(),
            )),
        }
    }
}

/// Training hyperparameters plus raster size for `train-ref`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub image_size: usize,
    /// Held-out fraction of each class for the test metric, in [0, 0.9].
    #[serde(default)]
    pub test_fraction: f64,
}

impl TrainSection {
    pub fn options(&self, seed: u64) -> TrainOptions {
        TrainOptions {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            seed,
        }
    }
}

/// Mesh + texture + view distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub mesh: MeshConfig,
    #[serde(default)]
    pub texture: Option<TextureConfig>,
    pub image_size: (usize, usize),
    #[serde(default = "default_background")]
    pub background: [f64; 3],
    #[serde(default)]
    pub ranges: SceneParamRanges,
}

fn default_background() -> [f64; 3] {
    [0.0, 0.0, 0.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshConfig {
    Obj { path: PathBuf },
    Ply { path: PathBuf },
    UvSphere { radius: f64, lat_bands: usize, lon_bands: usize },
    Box { half_extents: [f64; 3] },
    Torus { major_radius: f64, minor_radius: f64, major_segs: usize, minor_segs: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum TextureConfig {
    /// A PNG loaded as a square power-of-two UV texture.
    Png { path: PathBuf },
    /// Uniform mid-gray UV texture.
    Gray { resolution: usize },
    /// Mid-gray per-vertex colors.
    VertexGray,
    /// One of the synthetic pattern classes, painted at texture scale.
    ClassPattern { class: usize, resolution: usize, noise: f64, seed: u64 },
    /// Use whatever texture the mesh file carried (OBJ map_Kd or PLY colors).
    FromMesh,
}

impl SceneConfig {
    pub fn build(&self) -> Result<SceneTemplate> {
        let (mesh, mesh_texture): (Mesh, Option<TextureBinding>) = match &self.mesh {
            MeshConfig::Obj { path } => {
                let (m, t) = load_obj(path)?;
                (m, t.map(TextureBinding::Uv))
            }
            MeshConfig::Ply { path } => {
                let (m, colors) = load_ply(path)?;
                (m, Some(TextureBinding::Vertex(colors)))
            }
            MeshConfig::UvSphere {
                radius,
                lat_bands,
                lon_bands,
            } => (crate::renderer::uv_sphere(*radius, *lat_bands, *lon_bands)?, None),
            MeshConfig::Box { half_extents } => {
                (crate::renderer::box_mesh(*half_extents)?, None)
            }
            MeshConfig::Torus {
                major_radius,
                minor_radius,
                major_segs,
                minor_segs,
            } => (
                crate::renderer::torus(*major_radius, *minor_radius, *major_segs, *minor_segs)?,
                None,
            ),
        };
        let texture = match &self.texture {
            None | Some(TextureConfig::FromMesh) => mesh_texture.ok_or_else(|| {
                Error::Config("scene.texture: mesh carries no texture; specify one".into())
            })?,
            Some(TextureConfig::Png { path }) => {
                TextureBinding::Uv(TextureUv::from_image(&crate::image::Image::load_png(path)?)?)
            }
            Some(TextureConfig::Gray { resolution }) => {
                TextureBinding::Uv(TextureUv::filled(*resolution, [0.5; 3])?)
            }
            Some(TextureConfig::VertexGray) => {
                TextureBinding::Vertex(crate::renderer::VertexTexture::gray(&mesh))
            }
            Some(TextureConfig::ClassPattern {
                class,
                resolution,
                noise,
                seed,
            }) => TextureBinding::Uv(crate::synth::class_texture(*class, *resolution, *noise, *seed)?),
        };
        let template = SceneTemplate {
            mesh,
            texture,
            ranges: self.ranges.clone(),
            image_size: self.image_size,
            background: self.background,
        };
        template.validate()?;
        Ok(template)
    }
}

/// 3D signal settings shared by texture3d / patch3d / transfer jobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    pub mode: SignalMode,
    #[serde(default = "default_views_per_step")]
    pub views_per_step: usize,
    /// When present, optimize against this fixed view set instead of fresh
    /// samples each iteration.
    #[serde(default)]
    pub fixed_views: Option<Vec<ViewConfig>>,
    /// Held-out views rendered for the post-run report.
    #[serde(default = "default_eval_views")]
    pub eval_views: usize,
    /// Optional PNG mask (white = optimizable) for masked-texture jobs.
    #[serde(default)]
    pub mask_png: Option<PathBuf>,
}

fn default_views_per_step() -> usize {
    15
}

fn default_eval_views() -> usize {
    15
}

/// One explicit camera/light pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewConfig {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub distance: f64,
    #[serde(default = "default_fov")]
    pub fov_y_deg: f64,
    pub light_azimuth_deg: f64,
    pub light_elevation_deg: f64,
    pub ambient: f64,
    pub diffuse: f64,
}

fn default_fov() -> f64 {
    45.0
}

impl ViewConfig {
    pub fn build(&self) -> Result<(Camera, Light)> {
        let cam = Camera {
            distance: self.distance,
            azimuth_deg: self.azimuth_deg,
            elevation_deg: self.elevation_deg,
            fov_y_deg: self.fov_y_deg,
        };
        cam.validate()?;
        let light = Light::from_angles(
            self.light_azimuth_deg,
            self.light_elevation_deg,
            self.ambient,
            self.diffuse,
        )?;
        Ok((cam, light))
    }
}

/// 2D patch training settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Patch2dSection {
    pub target_label: usize,
    #[serde(flatten)]
    pub train: PatchTrainConfig,
}

/// Pose/light grid for sweep jobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub azimuths_deg: Vec<f64>,
    pub elevations_deg: Vec<f64>,
    pub distances: Vec<f64>,
    pub lights: Vec<SweepLight>,
    pub true_label: usize,
    #[serde(default = "default_cell_cap")]
    pub cell_cap: usize,
    #[serde(default = "default_fov")]
    pub fov_y_deg: f64,
}

fn default_cell_cap() -> usize {
    10_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepLight {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub ambient: f64,
    pub diffuse: f64,
}

impl SweepLight {
    pub fn build(&self) -> Result<Light> {
        Light::from_angles(self.azimuth_deg, self.elevation_deg, self.ambient, self.diffuse)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"
kind = "train-ref"
seed = 1
typo_field = 3
"#;
        match ExperimentConfig::from_toml(text) {
            Err(Error::Config(msg)) => assert!(msg.contains("typo_field"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn nested_unknown_keys_are_rejected() {
        let text = r#"
kind = "texture3d"
seed = 1
[scene]
mesh = { source = "uv_sphere", radius = 1.0, lat_bands = 6, lon_bands = 8 }
image_size = [16, 16]
wrong = true
"#;
        assert!(matches!(
            ExperimentConfig::from_toml(text),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn minimal_texture3d_config_parses() {
        let text = r#"
kind = "texture3d"
seed = 7

[scene]
mesh = { source = "uv_sphere", radius = 1.0, lat_bands = 6, lon_bands = 8 }
texture = { source = "gray", resolution = 16 }
image_size = [16, 16]

[model]
probe = { kind = "channel_mean", channel = 0 }

[optim]
step_size = 0.05
iterations = 3
seed = 7

[signal]
mode = { kind = "assistive", target = 1 }
views_per_step = 2
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.kind, JobKind::Texture3d);
        let tmpl = cfg.require_scene().unwrap().build().unwrap();
        assert_eq!(tmpl.image_size, (16, 16));
        let model = cfg.require_model().unwrap().load((16, 16)).unwrap();
        assert_eq!(model.num_classes(), 2);
    }

    #[test]
    fn missing_section_names_the_field() {
        let text = "kind = \"texture3d\"\nseed = 1\n";
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        match cfg.require_scene() {
            Err(Error::Config(msg)) => assert!(msg.contains("scene"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }
}
