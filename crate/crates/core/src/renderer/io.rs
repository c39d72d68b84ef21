//! Mesh file formats: Wavefront OBJ (v/vt/f, with or without vt indices,
//! optional MTL diffuse map) and ASCII PLY with per-vertex RGB colors.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::renderer::mesh::Mesh;
use crate::renderer::texture::{TextureUv, VertexTexture};

/// Load an OBJ mesh. Polygon faces are fan-triangulated. If the file
/// references an MTL with a `map_Kd` PNG, the diffuse map is loaded too.
pub fn load_obj(path: &Path) -> Result<(Mesh, Option<TextureUv>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));

    let mut positions: Vec<[f64; 3]> = Vec::new();
    let mut texcoords: Vec<[f64; 2]> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let mut face_uvs: Vec<[[f64; 2]; 3]> = Vec::new();
    let mut any_vt_face = false;
    let mut any_plain_face = false;
    let mut mtl_file: Option<String> = None;

    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        let mut tokens = line.split_whitespace();
        let ctx = |msg: String| Error::Format(format!("{}:{}: {msg}", path.display(), ln + 1));
        match tokens.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    *slot = tokens
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| ctx("bad vertex".into()))?;
                }
                positions.push(c);
            }
            Some("vt") => {
                let u: f64 = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| ctx("bad texcoord".into()))?;
                let v: f64 = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .unwrap_or(0.0);
                texcoords.push([u.clamp(0.0, 1.0), v.clamp(0.0, 1.0)]);
            }
            Some("f") => {
                let mut verts: Vec<(usize, Option<usize>)> = Vec::new();
                for tok in tokens {
                    let mut parts = tok.split('/');
                    let vi: isize = parts
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| ctx(format!("bad face token '{tok}'")))?;
                    if vi <= 0 {
                        return Err(ctx(format!("unsupported vertex index {vi}")));
                    }
                    let vt = match parts.next() {
                        Some("") | None => None,
                        Some(t) => {
                            let ti: isize =
                                t.parse().map_err(|_| ctx(format!("bad vt index '{t}'")))?;
                            if ti <= 0 {
                                return Err(ctx(format!("unsupported vt index {ti}")));
                            }
                            Some(ti as usize - 1)
                        }
                    };
                    verts.push((vi as usize - 1, vt));
                }
                if verts.len() < 3 {
                    return Err(ctx("face needs >= 3 vertices".into()));
                }
                for k in 1..verts.len() - 1 {
                    let tri = [verts[0], verts[k], verts[k + 1]];
                    faces.push([tri[0].0, tri[1].0, tri[2].0]);
                    if tri.iter().all(|(_, vt)| vt.is_some()) {
                        any_vt_face = true;
                        let mut uv = [[0.0; 2]; 3];
                        for (slot, (_, vt)) in uv.iter_mut().zip(tri) {
                            let ti = vt.expect("checked");
                            *slot = *texcoords.get(ti).ok_or_else(|| {
                                ctx(format!("vt index {} of {}", ti + 1, texcoords.len()))
                            })?;
                        }
                        face_uvs.push(uv);
                    } else {
                        any_plain_face = true;
                    }
                }
            }
            Some("mtllib") => {
                mtl_file = tokens.next().map(|s| s.to_string());
            }
            _ => {}
        }
    }

    if any_vt_face && any_plain_face {
        return Err(Error::Format(format!(
            "{}: mixed faces with and without texture coordinates",
            path.display()
        )));
    }
    let uv = if any_vt_face { Some(face_uvs) } else { None };
    let mesh = Mesh::new(positions, faces, uv)?;

    let texture = match mtl_file {
        Some(name) => load_mtl_diffuse(&dir.join(name))?,
        None => None,
    };
    Ok((mesh, texture))
}

fn load_mtl_diffuse(path: &Path) -> Result<Option<TextureUv>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    for line in text.lines() {
        let mut tokens = line.trim().split_whitespace();
        if tokens.next() == Some("map_Kd") {
            if let Some(file) = tokens.next() {
                let img = Image::load_png(&dir.join(file))?;
                return Ok(Some(TextureUv::from_image(&img)?));
            }
        }
    }
    Ok(None)
}

/// Save mesh + per-vertex colors as ASCII PLY.
pub fn save_ply(mesh: &Mesh, colors: &VertexTexture, path: &Path) -> Result<()> {
    if colors.len() != mesh.vertex_count() {
        return Err(Error::Format(format!(
            "{} colors for {} vertices",
            colors.len(),
            mesh.vertex_count()
        )));
    }
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    out.push_str(&format!("element vertex {}\n", mesh.vertex_count()));
    out.push_str("property float x\nproperty float y\nproperty float z\n");
    out.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    out.push_str(&format!("element face {}\n", mesh.face_count()));
    out.push_str("property list uchar int vertex_indices\nend_header\n");
    for (v, c) in mesh.vertices().iter().zip(colors.colors()) {
        let q = |x: f64| (x * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8;
        out.push_str(&format!(
            "{} {} {} {} {} {}\n",
            v[0],
            v[1],
            v[2],
            q(c[0]),
            q(c[1]),
            q(c[2])
        ));
    }
    for f in mesh.faces() {
        out.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Load an ASCII PLY with per-vertex RGB into a mesh and vertex texture.
pub fn load_ply(path: &Path) -> Result<(Mesh, VertexTexture)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let fail = |msg: &str| Error::Format(format!("{}: {msg}", path.display()));

    if lines.next().map(str::trim) != Some("ply") {
        return Err(fail("missing ply magic"));
    }
    let mut vertex_count = None;
    let mut face_count = None;
    let mut vertex_props: Vec<String> = Vec::new();
    let mut in_vertex_element = false;
    for line in lines.by_ref() {
        let line = line.trim();
        if line == "end_header" {
            break;
        }
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                if tok.next() != Some("ascii") {
                    return Err(fail("only ascii PLY is supported"));
                }
            }
            Some("element") => match tok.next() {
                Some("vertex") => {
                    vertex_count = tok.next().and_then(|t| t.parse::<usize>().ok());
                    in_vertex_element = true;
                }
                Some("face") => {
                    face_count = tok.next().and_then(|t| t.parse::<usize>().ok());
                    in_vertex_element = false;
                }
                _ => in_vertex_element = false,
            },
            Some("property") => {
                if in_vertex_element {
                    let _dtype = tok.next();
                    if let Some(name) = tok.next() {
                        vertex_props.push(name.to_string());
                    }
                }
            }
            _ => {}
        }
    }
    let vertex_count = vertex_count.ok_or_else(|| fail("missing vertex element"))?;
    let face_count = face_count.ok_or_else(|| fail("missing face element"))?;
    let prop_index = |name: &str| -> Result<usize> {
        vertex_props
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| fail(&format!("missing vertex property '{name}'")))
    };
    let (ix, iy, iz) = (prop_index("x")?, prop_index("y")?, prop_index("z")?);
    let (ir, ig, ib) = (prop_index("red")?, prop_index("green")?, prop_index("blue")?);

    let mut vertices = Vec::with_capacity(vertex_count);
    let mut colors = Vec::with_capacity(vertex_count);
    for _ in 0..vertex_count {
        let line = lines.next().ok_or_else(|| fail("truncated vertex list"))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| fail("bad vertex value")))
            .collect::<Result<_>>()?;
        if vals.len() < vertex_props.len() {
            return Err(fail("short vertex row"));
        }
        vertices.push([vals[ix], vals[iy], vals[iz]]);
        colors.push([vals[ir] / 255.0, vals[ig] / 255.0, vals[ib] / 255.0]);
    }
    let mut faces = Vec::with_capacity(face_count);
    for _ in 0..face_count {
        let line = lines.next().ok_or_else(|| fail("truncated face list"))?;
        let vals: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| fail("bad face index")))
            .collect::<Result<_>>()?;
        let n = *vals.first().ok_or_else(|| fail("empty face row"))?;
        if vals.len() != n + 1 || n < 3 {
            return Err(fail("malformed face row"));
        }
        for k in 2..n {
            faces.push([vals[1], vals[k], vals[k + 1]]);
        }
    }
    let mesh = Mesh::new(vertices, faces, None)?;
    let colors = VertexTexture::new(colors)?;
    Ok((mesh, colors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renderer::mesh::uv_sphere;

    #[test]
    fn obj_with_and_without_uvs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tri.obj");
        std::fs::write(
            &path,
            "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/2 3/3\n",
        )
        .unwrap();
        let (mesh, tex) = load_obj(&path).unwrap();
        assert_eq!(mesh.face_count(), 1);
        assert!(mesh.has_uv());
        assert!(tex.is_none());

        let plain = dir.path().join("plain.obj");
        std::fs::write(&plain, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        let (mesh, _) = load_obj(&plain).unwrap();
        assert!(!mesh.has_uv());
    }

    #[test]
    fn obj_quad_fan_triangulates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("quad.obj");
        std::fs::write(
            &path,
            "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n",
        )
        .unwrap();
        let (mesh, _) = load_obj(&path).unwrap();
        assert_eq!(mesh.face_count(), 2);
    }

    #[test]
    fn obj_mixed_uv_faces_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mixed.obj");
        std::fs::write(
            &path,
            "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/2 3/3\nf 2 4 3\n",
        )
        .unwrap();
        assert!(matches!(load_obj(&path), Err(Error::Format(_))));
    }

    #[test]
    fn obj_with_mtl_diffuse_map() {
        let dir = tempfile::tempdir().unwrap();
        let tex_img = TextureUv::filled(8, [0.2, 0.4, 0.6]).unwrap().to_image();
        tex_img.save_png(&dir.path().join("diffuse.png")).unwrap();
        std::fs::write(
            dir.path().join("mat.mtl"),
            "newmtl m\nmap_Kd diffuse.png\n",
        )
        .unwrap();
        std::fs::write(
            dir.path().join("tex.obj"),
            "mtllib mat.mtl\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/2 3/3\n",
        )
        .unwrap();
        let (_, tex) = load_obj(&dir.path().join("tex.obj")).unwrap();
        let tex = tex.expect("diffuse map loaded");
        assert_eq!(tex.resolution(), 8);
    }

    #[test]
    fn ply_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mesh.ply");
        let mesh = uv_sphere(1.0, 5, 6).unwrap();
        let colors = VertexTexture::gray(&mesh);
        save_ply(&mesh, &colors, &path).unwrap();
        let (back_mesh, back_colors) = load_ply(&path).unwrap();
        assert_eq!(back_mesh.vertex_count(), mesh.vertex_count());
        assert_eq!(back_mesh.face_count(), mesh.face_count());
        assert_eq!(back_colors.len(), colors.len());
        for c in back_colors.colors() {
            // 0.5 quantizes to 128/255
            assert!((c[0] - 128.0 / 255.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ply_missing_color_property_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ply");
        std::fs::write(
            &path,
            "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n",
        )
        .unwrap();
        assert!(matches!(load_ply(&path), Err(Error::Format(_))));
    }
}
