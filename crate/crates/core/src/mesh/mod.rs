//! Indexed triangle meshes, normalization into the unit working domain, and
//! combinatorial validation.

mod io;
pub mod primitives;
mod validate;

pub use io::{
    load_mesh, load_obj, load_ply, read_obj, read_ply, save_mesh, write_obj, write_ply, write_ply_points, MeshFormat,
};
pub use validate::{boundary_loop_count, validate, ValidationReport};

use crate::error::{Error, Result};
use crate::geom::{triangle_area, triangle_normal, Aabb, Point, Vec3};
use serde::{Deserialize, Serialize};

/// Indexed triangle soup. Faces are counter-clockwise seen from outside
/// where an outside exists.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point>,
    pub faces: Vec<[u32; 3]>,
}

impl TriangleMesh {
    /// Builds a mesh and checks index bounds, finiteness and
    /// non-degenerate index triples.
    pub fn new(vertices: Vec<Point>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let mesh = Self { vertices, faces };
        mesh.check()?;
        Ok(mesh)
    }

    pub fn check(&self) -> Result<()> {
        if let Some(i) = self
            .vertices
            .iter()
            .position(|v| !v.iter().all(|c| c.is_finite()))
        {
            return Err(Error::InvalidMesh(format!("vertex {i} is not finite")));
        }
        let n = self.vertices.len() as u32;
        for (fi, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&i| i >= n) {
                return Err(Error::InvalidMesh(format!("face {fi} index out of range")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("face {fi} repeats a vertex")));
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    #[inline]
    pub fn triangle(&self, f: usize) -> [&Point; 3] {
        let [a, b, c] = self.faces[f];
        [
            &self.vertices[a as usize],
            &self.vertices[b as usize],
            &self.vertices[c as usize],
        ]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.triangle(f);
        triangle_area(a, b, c)
    }

    /// Unit normal of face `f`, or zero for a degenerate face.
    pub fn face_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.triangle(f);
        let n = triangle_normal(a, b, c);
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            Vec3::zeros()
        }
    }

    pub fn area(&self) -> f64 {
        mesh_area(self)
    }

    pub fn bounding_box(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }

    /// Signed enclosed volume by the divergence theorem.
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let a = self.vertices[f[0] as usize].coords;
                let b = self.vertices[f[1] as usize].coords;
                let c = self.vertices[f[2] as usize].coords;
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    pub fn map_vertices(&self, f: impl Fn(&Point) -> Point) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(f).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Reverses every face's winding.
    pub fn flipped(&self) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.clone(),
            faces: self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect(),
        }
    }

    /// Concatenates meshes without merging anything.
    pub fn merge(parts: &[TriangleMesh]) -> TriangleMesh {
        let mut out = TriangleMesh::default();
        for p in parts {
            let off = out.vertices.len() as u32;
            out.vertices.extend_from_slice(&p.vertices);
            out.faces
                .extend(p.faces.iter().map(|f| [f[0] + off, f[1] + off, f[2] + off]));
        }
        out
    }

    /// Keeps only faces where `keep` is true and drops unreferenced vertices.
    /// Retained vertices keep their coordinates bit for bit.
    pub fn filter_faces(&self, keep: impl Fn(usize) -> bool) -> TriangleMesh {
        let faces: Vec<[u32; 3]> = (0..self.faces.len())
            .filter(|&f| keep(f))
            .map(|f| self.faces[f])
            .collect();
        TriangleMesh {
            vertices: self.vertices.clone(),
            faces,
        }
        .compacted()
    }

    /// Drops unreferenced vertices, preserving the order of the rest.
    pub fn compacted(&self) -> TriangleMesh {
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        for f in &self.faces {
            for &v in f {
                if remap[v as usize] == u32::MAX {
                    remap[v as usize] = 0;
                }
            }
        }
        for (i, r) in remap.iter_mut().enumerate() {
            if *r == 0 {
                *r = vertices.len() as u32;
                vertices.push(self.vertices[i]);
            }
        }
        let faces = self
            .faces
            .iter()
            .map(|f| f.map(|v| remap[v as usize]))
            .collect();
        TriangleMesh { vertices, faces }
    }
}

/// Total surface area: half the cross-product magnitude summed over faces.
pub fn mesh_area(mesh: &TriangleMesh) -> f64 {
    (0..mesh.faces.len()).map(|f| mesh.face_area(f)).sum()
}

/// Uniform scale plus translation mapping normalized coordinates back to the
/// original frame: `original = normalized * scale + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationTransform {
    pub scale: f64,
    pub translation: [f64; 3],
}

impl NormalizationTransform {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            translation: [0.0; 3],
        }
    }

    /// Normalized -> original.
    #[inline]
    pub fn apply(&self, p: &Point) -> Point {
        Point::new(
            p.x * self.scale + self.translation[0],
            p.y * self.scale + self.translation[1],
            p.z * self.scale + self.translation[2],
        )
    }

    /// Original -> normalized.
    #[inline]
    pub fn invert(&self, p: &Point) -> Point {
        Point::new(
            (p.x - self.translation[0]) / self.scale,
            (p.y - self.translation[1]) / self.scale,
            (p.z - self.translation[2]) / self.scale,
        )
    }

    pub fn denormalize(&self, mesh: &TriangleMesh) -> TriangleMesh {
        mesh.map_vertices(|p| self.apply(p))
    }
}

/// Centers the bounding box at the origin and scales uniformly so the longest
/// axis spans `1 - 2 * margin`.
pub fn normalize_to_unit(
    mesh: &TriangleMesh,
    margin: f64,
) -> Result<(TriangleMesh, NormalizationTransform)> {
    if !(margin > 0.0 && margin < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "margin {margin} outside (0, 0.5)"
        )));
    }
    if mesh.vertices.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let bb = mesh.bounding_box();
    let ext = bb.extent();
    let longest = ext.x.max(ext.y).max(ext.z);
    if !(longest > 0.0) || !longest.is_finite() {
        return Err(Error::Degenerate("zero-extent bounding box".into()));
    }
    let center = bb.center();
    let scale = longest / (1.0 - 2.0 * margin);
    let transform = NormalizationTransform {
        scale,
        translation: [center.x, center.y, center.z],
    };
    Ok((mesh.map_vertices(|p| transform.invert(p)), transform))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn cube_area_is_six() {
        let cube = primitives::unit_cube();
        assert_relative_eq!(mesh_area(&cube), 6.0, epsilon = 1e-12);
    }

    #[test]
    fn right_triangle_area() {
        let m = TriangleMesh::new(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert_relative_eq!(mesh_area(&m), 0.5);
    }

    #[test]
    fn icosphere_area_close_to_analytic() {
        let s = primitives::icosphere(0.5, 3);
        let exact = 4.0 * std::f64::consts::PI * 0.25;
        assert!((mesh_area(&s) - exact).abs() / exact < 0.01);
    }

    #[test]
    fn normalize_big_cube() {
        let cube = primitives::unit_cube().map_vertices(|p| Point::from(p.coords * 10.0));
        let (n, t) = normalize_to_unit(&cube, 0.05).unwrap();
        let bb = n.bounding_box();
        for k in 0..3 {
            assert_relative_eq!(bb.min[k], -0.45, epsilon = 1e-12);
            assert_relative_eq!(bb.max[k], 0.45, epsilon = 1e-12);
        }
        assert_relative_eq!(t.scale, 10.0 / 0.9, epsilon = 1e-12);
    }

    #[test]
    fn normalize_is_idempotent_on_normalized_input() {
        let cube = primitives::unit_cube()
            .map_vertices(|p| Point::from((p.coords - Vec3::repeat(0.5)) * 0.9));
        let (n, t) = normalize_to_unit(&cube, 0.05).unwrap();
        assert_relative_eq!(t.scale, 1.0, epsilon = 1e-12);
        for (a, b) in n.vertices.iter().zip(&cube.vertices) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn normalize_rejects_point_mesh() {
        let m = TriangleMesh {
            vertices: vec![Point::new(1.0, 1.0, 1.0); 3],
            faces: vec![],
        };
        assert!(normalize_to_unit(&m, 0.05).is_err());
    }

    #[test]
    fn new_rejects_bad_indices() {
        let v = vec![Point::origin(); 3];
        assert!(TriangleMesh::new(v.clone(), vec![[0, 1, 3]]).is_err());
        assert!(TriangleMesh::new(v, vec![[0, 1, 1]]).is_err());
    }

    proptest! {
        #[test]
        fn normalization_round_trip(coords in proptest::collection::vec(-1e3f64..1e3, 9..60)) {
            let verts: Vec<Point> = coords.chunks_exact(3).map(|c| Point::new(c[0], c[1], c[2])).collect();
            let mesh = TriangleMesh { faces: vec![[0, 1, 2]], vertices: verts };
            prop_assume!(mesh.bounding_box().extent().max() > 1e-6);
            let (n, t) = normalize_to_unit(&mesh, 0.05).unwrap();
            for (a, b) in n.vertices.iter().zip(&mesh.vertices) {
                let back = t.apply(a);
                prop_assert!((back - b).norm() < 1e-9);
            }
        }
    }
}
