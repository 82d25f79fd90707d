//! Triangle meshes: OBJ subset ingestion, CPU displacement and export.
//!
//! Only `v` and `f` records are read. Face entries may carry `/`-separated
//! attributes, of which the first field (the position index) is used.
//! Polygons are fan-triangulated.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::expression::{displace_unchecked, ExpressionTree, TimeParam, Vertex};
use crate::fixed::format_fixed;
use crate::space::ChannelMask;

pub const OBJ_DIGITS: u32 = 6;

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Mesh {
    vertices: Vec<Vertex>,
    faces: Vec<[u32; 3]>,
}

impl Mesh {
    pub fn new(vertices: Vec<Vertex>, faces: Vec<[u32; 3]>) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::MalformedMesh(format!("vertex {i} is not finite")));
        }
        let n = vertices.len();
        if let Some(face) = faces.iter().find(|f| f.iter().any(|&i| i as usize >= n)) {
            return Err(Error::MalformedMesh(format!(
                "face {face:?} references a vertex beyond {n}"
            )));
        }
        Ok(Self { vertices, faces })
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() && self.faces.is_empty()
    }
}

pub fn load_obj(text: &str) -> Result<Mesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("v") => {
                let coords: Vec<f64> = fields
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::ObjParse {
                        line: line_no,
                        message: format!("bad vertex coordinate: {e}"),
                    })?;
                if coords.len() != 3 {
                    return Err(Error::ObjParse {
                        line: line_no,
                        message: "vertex needs three coordinates".into(),
                    });
                }
                if coords.iter().any(|c| !c.is_finite()) {
                    return Err(Error::ObjParse {
                        line: line_no,
                        message: "vertex coordinate is not finite".into(),
                    });
                }
                vertices.push(Vertex::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let indices = fields
                    .map(|entry| resolve_index(entry, vertices.len(), line_no))
                    .collect::<Result<Vec<u32>>>()?;
                if indices.len() < 3 {
                    return Err(Error::MalformedMesh(format!(
                        "face on line {line_no} has fewer than 3 vertices"
                    )));
                }
                for k in 1..indices.len() - 1 {
                    faces.push([indices[0], indices[k], indices[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Mesh::new(vertices, faces)
}

/// Converts a 1-based (or negative, relative) OBJ index to 0-based.
fn resolve_index(entry: &str, vertex_count: usize, line: usize) -> Result<u32> {
    let first = entry.split('/').next().unwrap_or_default();
    let raw: i64 = first.parse().map_err(|_| Error::ObjParse {
        line,
        message: format!("bad face index '{entry}'"),
    })?;
    let n = vertex_count as i64;
    let index = match raw {
        r if r > 0 => r - 1,
        r if r < 0 => n + r,
        _ => -1,
    };
    if index < 0 || index >= n {
        return Err(Error::MalformedMesh(format!(
            "face index {raw} on line {line} out of range for {vertex_count} vertices"
        )));
    }
    Ok(index as u32)
}

pub fn export_obj(mesh: &Mesh) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(
            out,
            "v {} {} {}",
            format_fixed(v.x, OBJ_DIGITS),
            format_fixed(v.y, OBJ_DIGITS),
            format_fixed(v.z, OBJ_DIGITS)
        );
    }
    for f in &mesh.faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

/// Displaces every vertex independently; faces are carried over unchanged.
pub fn displace_mesh(
    mesh: &Mesh,
    tree: &ExpressionTree,
    channels: ChannelMask,
    t: TimeParam,
) -> Result<Mesh> {
    if channels.is_empty() {
        return Err(Error::InvalidMask);
    }
    let vertices = mesh
        .vertices
        .iter()
        .map(|v| displace_unchecked(tree, channels, v, t))
        .collect();
    Ok(Mesh {
        vertices,
        faces: mesh.faces.clone(),
    })
}

pub const BUILTIN_MESHES: [&str; 3] = ["sphere", "cube", "cylinder"];

/// Test meshes bundled with the crate, parsed from `fixtures/*.obj`.
pub fn builtin(name: &str) -> Option<Mesh> {
    let text = match name {
        "sphere" => include_str!("../fixtures/sphere.obj"),
        "cube" => include_str!("../fixtures/cube.obj"),
        "cylinder" => include_str!("../fixtures/cylinder.obj"),
        _ => return None,
    };
    Some(load_obj(text).expect("bundled fixture is valid"))
}

/// Procedural generators for the bundled meshes.
pub mod shapes {
    use super::*;

    /// Unit UV sphere with poles on the y axis.
    pub fn uv_sphere(segments: u32, rings: u32) -> Mesh {
        let mut vertices = vec![Vertex::new(0.0, 1.0, 0.0)];
        for r in 1..rings {
            let phi = PI * f64::from(r) / f64::from(rings);
            for s in 0..segments {
                let theta = TAU * f64::from(s) / f64::from(segments);
                vertices.push(Vertex::new(
                    phi.sin() * theta.cos(),
                    phi.cos(),
                    phi.sin() * theta.sin(),
                ));
            }
        }
        vertices.push(Vertex::new(0.0, -1.0, 0.0));
        let bottom = vertices.len() as u32 - 1;
        let ring = |r: u32, s: u32| 1 + (r - 1) * segments + s % segments;
        let mut faces = Vec::new();
        for s in 0..segments {
            faces.push([0, ring(1, s + 1), ring(1, s)]);
        }
        for r in 1..rings - 1 {
            for s in 0..segments {
                let (a, b) = (ring(r, s), ring(r, s + 1));
                let (c, d) = (ring(r + 1, s), ring(r + 1, s + 1));
                faces.push([a, b, d]);
                faces.push([a, d, c]);
            }
        }
        for s in 0..segments {
            faces.push([bottom, ring(rings - 1, s), ring(rings - 1, s + 1)]);
        }
        Mesh::new(vertices, faces).expect("generated sphere is valid")
    }

    /// Axis-aligned cube spanning [-1, 1] on every axis.
    pub fn cube() -> Mesh {
        let mut vertices = Vec::with_capacity(8);
        for i in 0..8u32 {
            let c = |bit: u32| if i & bit != 0 { 1.0 } else { -1.0 };
            vertices.push(Vertex::new(c(1), c(2), c(4)));
        }
        let quads = [
            [0, 2, 3, 1],
            [4, 5, 7, 6],
            [0, 1, 5, 4],
            [2, 6, 7, 3],
            [0, 4, 6, 2],
            [1, 3, 7, 5],
        ];
        let faces = quads
            .iter()
            .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
            .collect();
        Mesh::new(vertices, faces).expect("generated cube is valid")
    }

    /// Unit-radius capped cylinder along y, height 2.
    pub fn cylinder(segments: u32) -> Mesh {
        let mut vertices = Vec::new();
        for y in [1.0, -1.0] {
            for s in 0..segments {
                let theta = TAU * f64::from(s) / f64::from(segments);
                vertices.push(Vertex::new(theta.cos(), y, theta.sin()));
            }
        }
        vertices.push(Vertex::new(0.0, 1.0, 0.0));
        vertices.push(Vertex::new(0.0, -1.0, 0.0));
        let (top, bottom) = (2 * segments, 2 * segments + 1);
        let mut faces = Vec::new();
        for s in 0..segments {
            let n = (s + 1) % segments;
            faces.push([s, n, segments + n]);
            faces.push([s, segments + n, segments + s]);
            faces.push([top, n, s]);
            faces.push([bottom, segments + s, segments + n]);
        }
        Mesh::new(vertices, faces).expect("generated cylinder is valid")
    }

    pub fn by_name(name: &str) -> Option<Mesh> {
        match name {
            "sphere" => Some(uv_sphere(12, 8)),
            "cube" => Some(cube()),
            "cylinder" => Some(cylinder(16)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expression::Shape;
    use crate::space::{Channel, Variable};

    #[test]
    fn single_triangle() {
        let m = load_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3").unwrap();
        assert_eq!(m.vertices().len(), 3);
        assert_eq!(m.faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn fan_triangulation() {
        let m = load_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn attribute_fields_ignored() {
        let m =
            load_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nvt 0 0\nf 1/1/1 2/2/2 3/3/3\n").unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2]]);
        let m = load_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1//1 -2 -1\n").unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn malformed_input() {
        assert!(matches!(
            load_obj("v 0 0 0\nf 1 2 3"),
            Err(Error::MalformedMesh(_))
        ));
        assert!(matches!(
            load_obj("v 0 0 0\nf 0 1 1"),
            Err(Error::MalformedMesh(_))
        ));
        assert!(matches!(
            load_obj("v 0 a 0"),
            Err(Error::ObjParse { line: 1, .. })
        ));
        assert!(matches!(load_obj("v 0 0"), Err(Error::ObjParse { .. })));
        assert!(matches!(
            load_obj("v 0 0 0\nv 0 0 inf"),
            Err(Error::ObjParse { line: 2, .. })
        ));
        assert!(Mesh::new(vec![Vertex::default()], vec![[0, 0, 1]]).is_err());
    }

    #[test]
    fn export_format() {
        assert_eq!(export_obj(&Mesh::default()), "");
        let m = Mesh::new(vec![Vertex::new(0.1234567, -1.0, 0.0)], vec![]).unwrap();
        assert_eq!(export_obj(&m), "v 0.123457 -1.000000 0.000000\n");
        let tri = load_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3").unwrap();
        assert_eq!(export_obj(&tri), "v 0.000000 0.000000 0.000000\nv 1.000000 0.000000 0.000000\nv 0.000000 1.000000 0.000000\nf 1 2 3\n");
        assert_eq!(load_obj(&export_obj(&tri)).unwrap(), tri);
    }

    #[test]
    fn zero_tree_leaves_mesh_unchanged() {
        let mesh = builtin("cube").unwrap();
        let zero = ExpressionTree::from_shape(&Shape::constant(0.0)).unwrap();
        let out = displace_mesh(&mesh, &zero, ChannelMask::FULL, TimeParam::new(1.0)).unwrap();
        assert_eq!(out, mesh);
    }

    #[test]
    fn displacement_keeps_topology() {
        let mesh = builtin("sphere").unwrap();
        let tree = ExpressionTree::from_shape(&Shape::var(Variable::Y)).unwrap();
        let out = displace_mesh(
            &mesh,
            &tree,
            ChannelMask::of(&[Channel::X]),
            TimeParam::new(0.0),
        )
        .unwrap();
        assert_eq!(out.faces(), mesh.faces());
        assert_eq!(out.vertices().len(), mesh.vertices().len());
        for (a, b) in mesh.vertices().iter().zip(out.vertices()) {
            assert_eq!(b.x, a.x + a.y);
            assert_eq!((b.y, b.z), (a.y, a.z));
        }
    }

    #[test]
    fn fixtures_match_generators() {
        for name in BUILTIN_MESHES {
            let generated = shapes::by_name(name).unwrap();
            let fixture = std::fs::read_to_string(format!(
                "{}/fixtures/{name}.obj",
                env!("CARGO_MANIFEST_DIR")
            ))
            .unwrap();
            assert_eq!(fixture, export_obj(&generated), "fixture {name} is stale");
            assert_eq!(builtin(name).unwrap().faces(), generated.faces());
        }
    }

    #[test]
    #[ignore = "rewrites fixtures/*.obj from the generators"]
    fn regenerate_fixtures() {
        for name in BUILTIN_MESHES {
            let path = format!("{}/fixtures/{name}.obj", env!("CARGO_MANIFEST_DIR"));
            std::fs::write(path, export_obj(&shapes::by_name(name).unwrap())).unwrap();
        }
    }
}
