use super::TriangleMesh;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

/// Combinatorial robustness counts for a triangle mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub boundary_edge_count: usize,
    pub nonmanifold_edge_count: usize,
    pub nonmanifold_vertex_count: usize,
    pub inverted_triangle_count: usize,
    pub connected_components: usize,
    pub euler_characteristic: i64,
}

impl ValidationReport {
    /// No boundary, no non-manifold edges or vertices, no inversions.
    pub fn is_watertight(&self) -> bool {
        self.boundary_edge_count == 0
            && self.nonmanifold_edge_count == 0
            && self.nonmanifold_vertex_count == 0
            && self.inverted_triangle_count == 0
    }

    /// Sum of genera of the components, assuming every component is a
    /// closed orientable surface.
    pub fn genus(&self) -> i64 {
        (2 * self.connected_components as i64 - self.euler_characteristic) / 2
    }

    pub fn to_key_value(&self) -> String {
        format!(
            "boundary_edges={}\nnonmanifold_edges={}\nnonmanifold_vertices={}\ninverted_triangles={}\nconnected_components={}\neuler_characteristic={}\nwatertight={}\n",
            self.boundary_edge_count,
            self.nonmanifold_edge_count,
            self.nonmanifold_vertex_count,
            self.inverted_triangle_count,
            self.connected_components,
            self.euler_characteristic,
            self.is_watertight()
        )
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_key_value())
    }
}

#[derive(Default, Clone, Copy)]
struct EdgeUse {
    count: u32,
    /// Number of faces traversing the edge low->high minus high->low.
    forward: i32,
}

#[inline]
fn edge_key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Counts boundary edges, non-manifold edges and vertices, orientation
/// mismatches across shared edges, components and the Euler characteristic.
/// Edges are identified by unordered vertex index pairs; coincident but
/// distinct vertices are never merged.
pub fn validate(mesh: &TriangleMesh) -> ValidationReport {
    let mut edges: HashMap<(u32, u32), EdgeUse> = HashMap::with_capacity(mesh.faces.len() * 2);
    for f in &mesh.faces {
        for i in 0..3 {
            let (a, b) = (f[i], f[(i + 1) % 3]);
            let e = edges.entry(edge_key(a, b)).or_default();
            e.count += 1;
            e.forward += if a < b { 1 } else { -1 };
        }
    }
    let mut boundary = 0;
    let mut nonmanifold_edges = 0;
    let mut inverted = 0;
    for e in edges.values() {
        match e.count {
            1 => boundary += 1,
            2 => {
                if e.forward != 0 {
                    inverted += 1;
                }
            }
            _ => nonmanifold_edges += 1,
        }
    }

    // Vertex -> incident faces.
    let nv = mesh.vertices.len();
    let mut offsets = vec![0u32; nv + 1];
    for f in &mesh.faces {
        for &v in f {
            offsets[v as usize + 1] += 1;
        }
    }
    for i in 0..nv {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut incident = vec![0u32; offsets[nv] as usize];
    for (fi, f) in mesh.faces.iter().enumerate() {
        for &v in f {
            incident[fill[v as usize] as usize] = fi as u32;
            fill[v as usize] += 1;
        }
    }

    let mut nonmanifold_vertices = 0;
    let mut referenced = 0usize;
    let mut link: HashMap<u32, Vec<u32>> = HashMap::new();
    for v in 0..nv {
        let fan = &incident[offsets[v] as usize..offsets[v + 1] as usize];
        if fan.is_empty() {
            continue;
        }
        referenced += 1;
        // Link graph: each incident face contributes the edge opposite `v`.
        link.clear();
        for &fi in fan {
            let f = mesh.faces[fi as usize];
            let others: Vec<u32> = f.iter().copied().filter(|&x| x != v as u32).collect();
            let (a, b) = (others[0], others[1]);
            link.entry(a).or_default().push(b);
            link.entry(b).or_default().push(a);
        }
        let max_degree = link.values().map(Vec::len).max().unwrap_or(0);
        // Components of the link graph equal edge-connected clusters of the fan.
        let mut seen: HashMap<u32, bool> = link.keys().map(|&k| (k, false)).collect();
        let mut clusters = 0;
        let mut stack = Vec::new();
        let mut keys: Vec<u32> = link.keys().copied().collect();
        keys.sort_unstable();
        for k in keys {
            if seen[&k] {
                continue;
            }
            clusters += 1;
            stack.push(k);
            seen.insert(k, true);
            while let Some(x) = stack.pop() {
                for &y in &link[&x] {
                    if !seen[&y] {
                        seen.insert(y, true);
                        stack.push(y);
                    }
                }
            }
        }
        if clusters > 1 || max_degree > 2 {
            nonmanifold_vertices += 1;
        }
    }

    ValidationReport {
        boundary_edge_count: boundary,
        nonmanifold_edge_count: nonmanifold_edges,
        nonmanifold_vertex_count: nonmanifold_vertices,
        inverted_triangle_count: inverted,
        connected_components: connected_components(mesh),
        euler_characteristic: referenced as i64 - edges.len() as i64 + mesh.faces.len() as i64,
    }
}

/// Number of closed loops formed by boundary edges (edges used by exactly
/// one face), counted as connected components of the boundary-edge graph.
pub fn boundary_loop_count(mesh: &TriangleMesh) -> usize {
    let mut uses: HashMap<(u32, u32), u32> = HashMap::new();
    for f in &mesh.faces {
        for i in 0..3 {
            *uses.entry(edge_key(f[i], f[(i + 1) % 3])).or_default() += 1;
        }
    }
    let mut parent: HashMap<u32, u32> = HashMap::new();
    fn find(p: &mut HashMap<u32, u32>, x: u32) -> u32 {
        let mut r = x;
        while p[&r] != r {
            r = p[&r];
        }
        let mut y = x;
        while p[&y] != r {
            let next = p[&y];
            p.insert(y, r);
            y = next;
        }
        r
    }
    let mut boundary: Vec<(u32, u32)> = uses.iter().filter(|(_, &c)| c == 1).map(|(&e, _)| e).collect();
    boundary.sort_unstable();
    for &(a, b) in &boundary {
        parent.entry(a).or_insert(a);
        parent.entry(b).or_insert(b);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent.insert(ra.max(rb), ra.min(rb));
        }
    }
    let keys: Vec<u32> = parent.keys().copied().collect();
    keys.into_iter().filter(|&k| find(&mut parent, k) == k).count()
}

/// Components of the face set, joined through shared vertices.
pub(crate) fn connected_components(mesh: &TriangleMesh) -> usize {
    let labels = component_labels(mesh);
    labels
        .iter()
        .filter_map(|&l| l)
        .max()
        .map_or(0, |m| m as usize + 1)
}

/// Per-vertex component label (None for unreferenced vertices), numbered in
/// order of first appearance.
pub(crate) fn component_labels(mesh: &TriangleMesh) -> Vec<Option<u32>> {
    let n = mesh.vertices.len();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    fn find(p: &mut [u32], mut x: u32) -> u32 {
        while p[x as usize] != x {
            p[x as usize] = p[p[x as usize] as usize];
            x = p[x as usize];
        }
        x
    }
    let mut used = vec![false; n];
    for f in &mesh.faces {
        for &v in f {
            used[v as usize] = true;
        }
        for i in 1..3 {
            let a = find(&mut parent, f[0]);
            let b = find(&mut parent, f[i]);
            if a != b {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                parent[hi as usize] = lo;
            }
        }
    }
    let mut ids: HashMap<u32, u32> = HashMap::new();
    (0..n)
        .map(|v| {
            if !used[v] {
                return None;
            }
            let r = find(&mut parent, v as u32);
            let next = ids.len() as u32;
            Some(*ids.entry(r).or_insert(next))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use crate::mesh::primitives;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn tetra(offset: f64, shared: Option<Point>) -> TriangleMesh {
        let mut v = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
        ];
        for p in &mut v {
            p.x += offset;
        }
        if let Some(s) = shared {
            v[0] = s;
        }
        TriangleMesh {
            vertices: v,
            faces: vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
        }
    }

    #[test]
    fn closed_cube_is_watertight() {
        let r = validate(&primitives::unit_cube());
        assert!(r.is_watertight());
        assert_eq!(r.euler_characteristic, 2);
        assert_eq!(r.connected_components, 1);
    }

    #[test]
    fn single_triangle_has_three_boundary_edges() {
        let m = TriangleMesh {
            vertices: vec![
                Point::origin(),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
            ],
            faces: vec![[0, 1, 2]],
        };
        let r = validate(&m);
        assert_eq!(r.boundary_edge_count, 3);
        assert_eq!(r.nonmanifold_edge_count, 0);
        assert_eq!(r.nonmanifold_vertex_count, 0);
    }

    #[test]
    fn tetrahedra_sharing_one_vertex() {
        // Second tetra reuses vertex 0 of the first: an 8-face bowtie.
        let a = tetra(0.0, None);
        let b = tetra(-1.0, None);
        let mut m = TriangleMesh::merge(&[a, b]);
        for f in m.faces.iter_mut().skip(4) {
            for v in f.iter_mut() {
                if *v == 5 {
                    *v = 0;
                }
            }
        }
        let m = m.compacted();
        assert_eq!(m.num_faces(), 8);
        let r = validate(&m);
        assert_eq!(r.nonmanifold_vertex_count, 1);
        assert_eq!(r.nonmanifold_edge_count, 0);
        assert_eq!(r.boundary_edge_count, 0);
    }

    #[test]
    fn flipped_face_counts_inversions() {
        let mut m = primitives::unit_cube();
        let f = m.faces[0];
        m.faces[0] = [f[0], f[2], f[1]];
        let r = validate(&m);
        assert_eq!(r.inverted_triangle_count, 3);
        assert_eq!(r.boundary_edge_count, 0);
    }

    #[test]
    fn boundary_loops() {
        assert_eq!(boundary_loop_count(&primitives::unit_cube()), 0);
        let mut m = primitives::icosphere(1.0, 2);
        // Two faces far apart: two separate triangular holes.
        let far = (0..m.num_faces())
            .max_by(|&a, &b| {
                let d = |f: usize| (m.face_normal(f) - m.face_normal(0)).norm();
                d(a).total_cmp(&d(b))
            })
            .unwrap();
        m.faces = m.faces.iter().enumerate().filter(|(i, _)| *i != 0 && *i != far).map(|(_, f)| *f).collect();
        assert_eq!(boundary_loop_count(&m), 2);
        assert_eq!(validate(&m).boundary_edge_count, 6);
    }

    #[test]
    fn three_faces_on_one_edge() {
        let m = TriangleMesh {
            vertices: vec![
                Point::origin(),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
                Point::new(0.0, -1.0, 0.0),
                Point::new(0.0, 0.0, 1.0),
            ],
            faces: vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]],
        };
        assert_eq!(validate(&m).nonmanifold_edge_count, 1);
    }

    #[test]
    fn torus_and_sphere_euler() {
        let t = validate(&primitives::torus(0.3, 0.1, 24, 12));
        assert!(t.is_watertight());
        assert_eq!(t.euler_characteristic, 0);
        assert_eq!(t.genus(), 1);
        let s = validate(&primitives::icosphere(0.4, 2));
        assert!(s.is_watertight());
        assert_eq!(s.euler_characteristic, 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn invariant_under_permutation(seed in 0u64..1000) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut m = TriangleMesh::merge(&[primitives::torus(0.3, 0.1, 10, 6), tetra(2.0, None)]);
            // Punch a couple of faces out so the counts are not all zero.
            m.faces.truncate(m.faces.len() - 3);
            let before = validate(&m);
            let mut perm: Vec<u32> = (0..m.vertices.len() as u32).collect();
            perm.shuffle(&mut rng);
            let mut verts = vec![Point::origin(); m.vertices.len()];
            for (old, &new) in perm.iter().enumerate() {
                verts[new as usize] = m.vertices[old];
            }
            let mut faces: Vec<[u32; 3]> = m.faces.iter().map(|f| f.map(|v| perm[v as usize])).collect();
            faces.shuffle(&mut rng);
            let after = validate(&TriangleMesh { vertices: verts, faces });
            prop_assert_eq!(before, after);
        }
    }
}
