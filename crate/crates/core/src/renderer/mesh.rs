//! Triangle meshes with derived per-vertex normals, plus the procedural
//! primitives used by synthetic render datasets. Geometry is fixed — only
//! textures are ever optimized.

use crate::error::{Error, Result};
use crate::renderer::vec3::{add, cross, norm, normalize_or, sub, Vec3};

/// A validated triangle mesh. UVs, when present, are per-face-corner (OBJ
/// semantics: no shared-vertex UV constraint, so seams are free).
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    uv: Option<Vec<[[f64; 2]; 3]>>,
    normals: Vec<Vec3>,
}

impl Mesh {
    pub fn new(
        vertices: Vec<Vec3>,
        faces: Vec<[usize; 3]>,
        uv: Option<Vec<[[f64; 2]; 3]>>,
    ) -> Result<Self> {
        if vertices.is_empty() || faces.is_empty() {
            return Err(Error::Geometry("mesh needs vertices and faces".into()));
        }
        for (fi, face) in faces.iter().enumerate() {
            for &vi in face {
                if vi >= vertices.len() {
                    return Err(Error::Geometry(format!(
                        "face {fi} references vertex {vi} of {}",
                        vertices.len()
                    )));
                }
            }
            let area = face_area(&vertices, *face);
            if area <= 1e-12 {
                return Err(Error::Geometry(format!(
                    "face {fi} is degenerate (area {area:.3e})"
                )));
            }
        }
        if let Some(uvs) = &uv {
            if uvs.len() != faces.len() {
                return Err(Error::Geometry(format!(
                    "{} uv triples for {} faces",
                    uvs.len(),
                    faces.len()
                )));
            }
            for (fi, tri) in uvs.iter().enumerate() {
                for corner in tri {
                    for &c in corner {
                        if !(0.0..=1.0).contains(&c) {
                            return Err(Error::Geometry(format!(
                                "face {fi} uv component {c} outside [0,1]"
                            )));
                        }
                    }
                }
            }
        }
        let normals = vertex_normals(&vertices, &faces);
        Ok(Mesh {
            vertices,
            faces,
            uv,
            normals,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn uv(&self) -> Option<&[[[f64; 2]; 3]]> {
        self.uv.as_deref()
    }

    pub fn has_uv(&self) -> bool {
        self.uv.is_some()
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Radius of the bounding sphere around the origin; camera distance
    /// ranges are usually expressed in multiples of this.
    pub fn bounding_radius(&self) -> f64 {
        self.vertices.iter().map(|v| norm(*v)).fold(0.0, f64::max)
    }
}

fn face_area(vertices: &[Vec3], face: [usize; 3]) -> f64 {
    let e1 = sub(vertices[face[1]], vertices[face[0]]);
    let e2 = sub(vertices[face[2]], vertices[face[0]]);
    0.5 * norm(cross(e1, e2))
}

/// Area-weighted face-normal averages, normalized. Deterministic: faces
/// accumulate in index order.
fn vertex_normals(vertices: &[Vec3], faces: &[[usize; 3]]) -> Vec<Vec3> {
    let mut acc = vec![[0.0; 3]; vertices.len()];
    for face in faces {
        let e1 = sub(vertices[face[1]], vertices[face[0]]);
        let e2 = sub(vertices[face[2]], vertices[face[0]]);
        // cross has twice the face area as magnitude, which is the weighting
        let fnorm = cross(e1, e2);
        for &vi in face {
            acc[vi] = add(acc[vi], fnorm);
        }
    }
    acc.into_iter()
        .map(|n| normalize_or(n, [0.0, 0.0, 1.0]))
        .collect()
}

/// Latitude/longitude sphere with seam-free per-face-corner UVs
/// (u = longitude fraction with the seam column at u = 1, v = 1 at the
/// north pole).
pub fn uv_sphere(radius: f64, lat_bands: usize, lon_bands: usize) -> Result<Mesh> {
    if lat_bands < 3 || lon_bands < 3 {
        return Err(Error::Geometry("sphere needs >= 3 bands each way".into()));
    }
    let mut vertices = Vec::new();
    // index helpers: 0 = north pole, rings 1..lat_bands-1, last = south pole
    vertices.push([0.0, radius, 0.0]);
    for i in 1..lat_bands {
        let theta = std::f64::consts::PI * (0.5 - i as f64 / lat_bands as f64);
        for j in 0..lon_bands {
            let phi = std::f64::consts::TAU * j as f64 / lon_bands as f64;
            vertices.push([
                radius * theta.cos() * phi.cos(),
                radius * theta.sin(),
                radius * theta.cos() * phi.sin(),
            ]);
        }
    }
    vertices.push([0.0, -radius, 0.0]);
    let south = vertices.len() - 1;
    let ring = |i: usize, j: usize| 1 + (i - 1) * lon_bands + (j % lon_bands);

    let u_of = |j: usize| j as f64 / lon_bands as f64; // j may equal lon_bands at the seam
    let v_of = |i: usize| 1.0 - i as f64 / lat_bands as f64;

    let mut faces = Vec::new();
    let mut uvs = Vec::new();
    for j in 0..lon_bands {
        // top cap
        faces.push([0, ring(1, j + 1), ring(1, j)]);
        uvs.push([
            [(u_of(j) + u_of(j + 1)) / 2.0, 1.0],
            [u_of(j + 1), v_of(1)],
            [u_of(j), v_of(1)],
        ]);
        // bottom cap
        faces.push([south, ring(lat_bands - 1, j), ring(lat_bands - 1, j + 1)]);
        uvs.push([
            [(u_of(j) + u_of(j + 1)) / 2.0, 0.0],
            [u_of(j), v_of(lat_bands - 1)],
            [u_of(j + 1), v_of(lat_bands - 1)],
        ]);
    }
    for i in 1..lat_bands - 1 {
        for j in 0..lon_bands {
            let (a, b) = (ring(i, j), ring(i, j + 1));
            let (c, d) = (ring(i + 1, j), ring(i + 1, j + 1));
            faces.push([a, b, d]);
            uvs.push([
                [u_of(j), v_of(i)],
                [u_of(j + 1), v_of(i)],
                [u_of(j + 1), v_of(i + 1)],
            ]);
            faces.push([a, d, c]);
            uvs.push([
                [u_of(j), v_of(i)],
                [u_of(j + 1), v_of(i + 1)],
                [u_of(j), v_of(i + 1)],
            ]);
        }
    }
    Mesh::new(vertices, faces, Some(uvs))
}

/// Axis-aligned box; every face maps to the full texture square.
pub fn box_mesh(half_extents: Vec3) -> Result<Mesh> {
    let [hx, hy, hz] = half_extents;
    let corners: Vec<Vec3> = (0..8)
        .map(|i| {
            [
                if i & 1 == 0 { -hx } else { hx },
                if i & 2 == 0 { -hy } else { hy },
                if i & 4 == 0 { -hz } else { hz },
            ]
        })
        .collect();
    // quads as corner indices, outward winding
    let quads: [[usize; 4]; 6] = [
        [1, 3, 7, 5], // +x
        [0, 4, 6, 2], // -x
        [2, 6, 7, 3], // +y
        [0, 1, 5, 4], // -y
        [4, 5, 7, 6], // +z
        [0, 2, 3, 1], // -z
    ];
    let quad_uv = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let mut faces = Vec::new();
    let mut uvs = Vec::new();
    for q in quads {
        faces.push([q[0], q[1], q[2]]);
        uvs.push([quad_uv[0], quad_uv[1], quad_uv[2]]);
        faces.push([q[0], q[2], q[3]]);
        uvs.push([quad_uv[0], quad_uv[2], quad_uv[3]]);
    }
    Mesh::new(corners, faces, Some(uvs))
}

/// Torus around the Y axis; u runs along the major circle, v around the tube.
pub fn torus(major_radius: f64, minor_radius: f64, major_segs: usize, minor_segs: usize) -> Result<Mesh> {
    if major_segs < 3 || minor_segs < 3 {
        return Err(Error::Geometry("torus needs >= 3 segments each way".into()));
    }
    let mut vertices = Vec::new();
    for i in 0..major_segs {
        let a = std::f64::consts::TAU * i as f64 / major_segs as f64;
        for j in 0..minor_segs {
            let b = std::f64::consts::TAU * j as f64 / minor_segs as f64;
            let r = major_radius + minor_radius * b.cos();
            vertices.push([r * a.cos(), minor_radius * b.sin(), r * a.sin()]);
        }
    }
    let at = |i: usize, j: usize| (i % major_segs) * minor_segs + (j % minor_segs);
    let u_of = |i: usize| i as f64 / major_segs as f64;
    let v_of = |j: usize| j as f64 / minor_segs as f64;
    let mut faces = Vec::new();
    let mut uvs = Vec::new();
    for i in 0..major_segs {
        for j in 0..minor_segs {
            let (a, b) = (at(i, j), at(i + 1, j));
            let (c, d) = (at(i + 1, j + 1), at(i, j + 1));
            faces.push([a, b, c]);
            uvs.push([
                [u_of(i), v_of(j)],
                [u_of(i + 1), v_of(j)],
                [u_of(i + 1), v_of(j + 1)],
            ]);
            faces.push([a, c, d]);
            uvs.push([
                [u_of(i), v_of(j)],
                [u_of(i + 1), v_of(j + 1)],
                [u_of(i), v_of(j + 1)],
            ]);
        }
    }
    Mesh::new(vertices, faces, Some(uvs))
}

/// A single quad in the XY plane facing +z, spanning `[-half, half]` in x
/// and y, with the full texture mapped onto it. The head-on oracle target.
pub fn quad(half: f64) -> Result<Mesh> {
    let vertices = vec![
        [-half, -half, 0.0],
        [half, -half, 0.0],
        [half, half, 0.0],
        [-half, half, 0.0],
    ];
    let faces = vec![[0, 1, 2], [0, 2, 3]];
    let uvs = vec![
        [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]],
        [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
    ];
    Mesh::new(vertices, faces, Some(uvs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renderer::vec3::dot;

    #[test]
    fn rejects_bad_indices_and_degenerate_faces() {
        let verts = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        assert!(Mesh::new(verts.clone(), vec![[0, 1, 3]], None).is_err());
        let collinear = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        assert!(matches!(
            Mesh::new(collinear, vec![[0, 1, 2]], None),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn sphere_normals_point_outward() {
        let m = uv_sphere(1.0, 8, 12).unwrap();
        for (v, n) in m.vertices().iter().zip(m.normals()) {
            // for a sphere around the origin the normal is the radial direction
            assert!(dot(*v, *n) > 0.9, "normal {n:?} at {v:?}");
            assert!((norm(*n) - 1.0).abs() < 1e-9);
        }
        assert!((m.bounding_radius() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_uvs_stay_in_unit_square() {
        let m = uv_sphere(0.5, 6, 8).unwrap();
        for tri in m.uv().unwrap() {
            for corner in tri {
                assert!((0.0..=1.0).contains(&corner[0]));
                assert!((0.0..=1.0).contains(&corner[1]));
            }
        }
    }

    #[test]
    fn primitives_are_valid() {
        assert!(box_mesh([0.5, 0.5, 0.5]).is_ok());
        assert!(torus(0.7, 0.3, 12, 8).is_ok());
        assert!(quad(1.0).is_ok());
    }

    #[test]
    fn quad_normals_face_plus_z() {
        let m = quad(1.0).unwrap();
        for n in m.normals() {
            assert!((n[2] - 1.0).abs() < 1e-12);
        }
    }
}
