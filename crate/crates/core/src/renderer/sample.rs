//! Expectation-over-transformation sampling: draw camera/light pairs from
//! configured parameter ranges so signals train under many poses and
//! illumination conditions at once.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::renderer::camera::{Camera, Light};

/// Uniform, independent ranges for every sampled scene parameter. A
/// degenerate range (lo == hi) pins that parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneParamRanges {
    pub azimuth_deg: (f64, f64),
    pub elevation_deg: (f64, f64),
    pub distance: (f64, f64),
    pub light_azimuth_deg: (f64, f64),
    pub light_elevation_deg: (f64, f64),
    pub ambient: (f64, f64),
    pub diffuse: (f64, f64),
    #[serde(default = "default_fov")]
    pub fov_y_deg: f64,
}

fn default_fov() -> f64 {
    45.0
}

impl Default for SceneParamRanges {
    fn default() -> Self {
        SceneParamRanges {
            azimuth_deg: (0.0, 360.0),
            elevation_deg: (0.0, 40.0),
            distance: (2.2, 3.0),
            light_azimuth_deg: (0.0, 360.0),
            light_elevation_deg: (20.0, 70.0),
            ambient: (0.3, 0.6),
            diffuse: (0.2, 0.4),
            fov_y_deg: default_fov(),
        }
    }
}

impl SceneParamRanges {
    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("azimuth_deg", self.azimuth_deg),
            ("elevation_deg", self.elevation_deg),
            ("distance", self.distance),
            ("light_azimuth_deg", self.light_azimuth_deg),
            ("light_elevation_deg", self.light_elevation_deg),
            ("ambient", self.ambient),
            ("diffuse", self.diffuse),
        ];
        for (name, (lo, hi)) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Domain(format!("{name} range ({lo}, {hi}) is empty")));
            }
        }
        if !(self.distance.0 > 0.0) {
            return Err(Error::Domain("distance range must be positive".into()));
        }
        if self.elevation_deg.0 < -89.0 || self.elevation_deg.1 > 89.0 {
            return Err(Error::Domain(
                "camera elevation must stay within [-89, 89] degrees".into(),
            ));
        }
        if self.ambient.0 < 0.0 || self.diffuse.0 < 0.0 {
            return Err(Error::Domain("light coefficients must be >= 0".into()));
        }
        if self.ambient.1 + self.diffuse.1 > 1.0 {
            return Err(Error::Domain(format!(
                "ambient max {} + diffuse max {} exceeds 1",
                self.ambient.1, self.diffuse.1
            )));
        }
        if !(self.fov_y_deg > 0.0 && self.fov_y_deg < 180.0) {
            return Err(Error::Domain(format!(
                "fov_y {} must be in (0, 180)",
                self.fov_y_deg
            )));
        }
        Ok(())
    }

    /// Fit the distance range to a mesh: multiples of its bounding radius.
    pub fn scaled_to_radius(mut self, radius: f64) -> Self {
        self.distance = (self.distance.0 * radius, self.distance.1 * radius);
        self
    }
}

#[inline]
fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    // half-open: lo + u * (hi - lo) with u in [0, 1)
    lo + rng.gen::<f64>() * (hi - lo)
}

/// Draw `count` camera/light pairs. Deterministic given the generator state;
/// parameters are sampled in a fixed order per pair.
pub fn sample_scene_params(
    rng: &mut ChaCha8Rng,
    ranges: &SceneParamRanges,
    count: usize,
) -> Result<Vec<(Camera, Light)>> {
    if count == 0 {
        return Err(Error::Domain("sample count must be >= 1".into()));
    }
    ranges.validate()?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let camera = Camera {
            azimuth_deg: draw(rng, ranges.azimuth_deg),
            elevation_deg: draw(rng, ranges.elevation_deg),
            distance: draw(rng, ranges.distance),
            fov_y_deg: ranges.fov_y_deg,
        };
        let light_az = draw(rng, ranges.light_azimuth_deg);
        let light_el = draw(rng, ranges.light_elevation_deg);
        let ka = draw(rng, ranges.ambient);
        let kd = draw(rng, ranges.diffuse);
        out.push((camera, Light::from_angles(light_az, light_el, ka, kd)?));
    }
    Ok(out)
}
