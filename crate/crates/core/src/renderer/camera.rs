//! Cameras orbiting the origin and directional lights with Lambert + ambient
//! shading coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::renderer::vec3::{cross, norm, normalize_or, scale, Vec3};

/// A perspective camera on a sphere around the origin, looking at the origin
/// with +Y up. Right-handed frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Camera {
    /// Distance from the origin, in object units.
    pub distance: f64,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    /// Vertical field of view in degrees, in (0, 180).
    pub fov_y_deg: f64,
}

impl Camera {
    pub fn validate(&self) -> Result<()> {
        if !(self.distance > 0.0) {
            return Err(Error::Domain(format!(
                "camera distance {} must be > 0",
                self.distance
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

    pub fn eye(&self) -> Vec3 {
        let az = self.azimuth_deg.to_radians();
        let el = self.elevation_deg.to_radians();
        [
            self.distance * el.cos() * az.sin(),
            self.distance * el.sin(),
            self.distance * el.cos() * az.cos(),
        ]
    }

    /// Orthonormal (right, up, forward) view basis; forward points from the
    /// eye toward the origin.
    pub fn basis(&self) -> (Vec3, Vec3, Vec3) {
        let eye = self.eye();
        let forward = normalize_or(scale(eye, -1.0), [0.0, 0.0, -1.0]);
        // near the poles fall back to +Z as the up hint
        let up_hint = if forward[0].abs() < 1e-9 && forward[2].abs() < 1e-9 {
            [0.0, 0.0, 1.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        let right = normalize_or(cross(forward, up_hint), [1.0, 0.0, 0.0]);
        let up = cross(right, forward);
        (right, up, forward)
    }
}

/// A directional light: `direction` is the unit propagation direction
/// (pointing from the light toward the scene), `ambient`/`diffuse` are the
/// Lambert coefficients with `ambient + diffuse <= 1` so shaded pixels stay
/// inside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Light {
    pub direction: Vec3,
    pub ambient: f64,
    pub diffuse: f64,
}

impl Light {
    pub fn new(direction: Vec3, ambient: f64, diffuse: f64) -> Result<Self> {
        let light = Light {
            direction,
            ambient,
            diffuse,
        };
        light.validate()?;
        Ok(light)
    }

    /// Light positioned at the given angles, shining toward the origin.
    pub fn from_angles(azimuth_deg: f64, elevation_deg: f64, ambient: f64, diffuse: f64) -> Result<Self> {
        let az = azimuth_deg.to_radians();
        let el = elevation_deg.to_radians();
        let toward_light = [el.cos() * az.sin(), el.sin(), el.cos() * az.cos()];
        Light::new(scale(toward_light, -1.0), ambient, diffuse)
    }

    /// Ambient-only illumination: shading scalar is exactly 1 everywhere.
    pub fn ambient_only() -> Self {
        Light {
            direction: [0.0, -1.0, 0.0],
            ambient: 1.0,
            diffuse: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if (norm(self.direction) - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "light direction {:?} is not unit length",
                self.direction
            )));
        }
        if self.ambient < 0.0 || self.diffuse < 0.0 || self.ambient + self.diffuse > 1.0 {
            return Err(Error::Domain(format!(
                "light coefficients ka={} kd={} must be >= 0 with ka + kd <= 1",
                self.ambient, self.diffuse
            )));
        }
        Ok(())
    }
}
