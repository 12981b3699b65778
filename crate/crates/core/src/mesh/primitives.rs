//! Closed, outward-oriented test solids.

use super::TriangleMesh;
use crate::geom::{Point, Vec3};
use std::collections::HashMap;
use std::f64::consts::PI;

/// Axis-aligned unit cube spanning `[0, 1]^3`: 8 vertices, 12 faces.
pub fn unit_cube() -> TriangleMesh {
    cuboid(Point::origin(), Point::new(1.0, 1.0, 1.0))
}

/// Axis-aligned box with corners `min` and `max`.
pub fn cuboid(min: Point, max: Point) -> TriangleMesh {
    let v = |x: bool, y: bool, z: bool| {
        Point::new(
            if x { max.x } else { min.x },
            if y { max.y } else { min.y },
            if z { max.z } else { min.z },
        )
    };
    let vertices = vec![
        v(false, false, false),
        v(true, false, false),
        v(true, true, false),
        v(false, true, false),
        v(false, false, true),
        v(true, false, true),
        v(true, true, true),
        v(false, true, true),
    ];
    let faces = vec![
        [0, 3, 2],
        [0, 2, 1],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [3, 7, 6],
        [3, 6, 2],
        [0, 4, 7],
        [0, 7, 3],
        [1, 2, 6],
        [1, 6, 5],
    ];
    TriangleMesh { vertices, faces }
}

/// Box subdivided into `n x n` quads per side, so that defects can remove
/// parts of a face.
pub fn subdivided_box(min: Point, max: Point, n: usize) -> TriangleMesh {
    let n = n.max(1);
    let mut mesh = TriangleMesh::default();
    let mut index: HashMap<[i64; 3], u32> = HashMap::new();
    let ext = max - min;
    let mut vid = |mesh: &mut TriangleMesh, g: [i64; 3]| -> u32 {
        *index.entry(g).or_insert_with(|| {
            mesh.vertices.push(Point::new(
                min.x + ext.x * g[0] as f64 / n as f64,
                min.y + ext.y * g[1] as f64 / n as f64,
                min.z + ext.z * g[2] as f64 / n as f64,
            ));
            mesh.vertices.len() as u32 - 1
        })
    };
    let n = n as i64;
    for axis in 0..3 {
        let (u, w) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, n] {
            for i in 0..n {
                for j in 0..n {
                    let mut q = [[0i64; 3]; 4];
                    for (k, (di, dj)) in [(0, 0), (1, 0), (1, 1), (0, 1)].into_iter().enumerate() {
                        q[k][axis] = side;
                        q[k][u] = i + di;
                        q[k][w] = j + dj;
                    }
                    let ids = q.map(|g| vid(&mut mesh, g));
                    // (u, w, axis) is right-handed, so the quad winds toward +axis.
                    if side == n {
                        mesh.faces.push([ids[0], ids[1], ids[2]]);
                        mesh.faces.push([ids[0], ids[2], ids[3]]);
                    } else {
                        mesh.faces.push([ids[0], ids[2], ids[1]]);
                        mesh.faces.push([ids[0], ids[3], ids[2]]);
                    }
                }
            }
        }
    }
    mesh
}

/// Subdivided icosahedron projected onto a sphere of radius `r` about the origin.
pub fn icosphere(r: f64, level: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<Vec3>| -> u32 {
            let key = if a < b { (a, b) } else { (b, a) };
            *mid.entry(key).or_insert_with(|| {
                verts.push((verts[a as usize] + verts[b as usize]).normalize());
                verts.len() as u32 - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriangleMesh {
        vertices: verts.into_iter().map(|v| Point::from(v * r)).collect(),
        faces,
    }
}

/// Torus around the z axis with major radius `major`, tube radius `minor`.
pub fn torus(major: f64, minor: f64, segments: usize, sides: usize) -> TriangleMesh {
    let mut vertices = Vec::with_capacity(segments * sides);
    for i in 0..segments {
        let u = 2.0 * PI * i as f64 / segments as f64;
        for j in 0..sides {
            let v = 2.0 * PI * j as f64 / sides as f64;
            let rr = major + minor * v.cos();
            vertices.push(Point::new(rr * u.cos(), rr * u.sin(), minor * v.sin()));
        }
    }
    let id = |i: usize, j: usize| ((i % segments) * sides + (j % sides)) as u32;
    let mut faces = Vec::with_capacity(segments * sides * 2);
    for i in 0..segments {
        for j in 0..sides {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriangleMesh { vertices, faces }
}

pub fn translated(mesh: &TriangleMesh, t: Vec3) -> TriangleMesh {
    mesh.map_vertices(|p| p + t)
}
