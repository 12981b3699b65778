//! Marching cubes over a [`ScalarGrid`].
//!
//! The case table is generated rather than transcribed. On every cube face
//! the crossing points are paired so that, on ambiguous faces, the diagonal
//! through the face's minimum corner is the one cut off. The rule looks only
//! at the face itself, so neighbouring cubes agree on the shared segments,
//! and it ignores which sign is which, so complementary cases produce the
//! same surface with reversed winding. Segments are chained into loops and
//! each loop is triangulated without diagonals that lie in a cube face.

use crate::field::ScalarGrid;
use crate::geom::Point;
use crate::mesh::TriangleMesh;
use std::collections::HashMap;
use std::sync::OnceLock;

/// Corner `c` sits at `(c & 1, (c >> 1) & 1, (c >> 2) & 1)`.
#[inline]
fn corner_coords(c: usize) -> [usize; 3] {
    [c & 1, (c >> 1) & 1, (c >> 2) & 1]
}

#[inline]
fn corner_index(x: [usize; 3]) -> usize {
    x[0] | (x[1] << 1) | (x[2] << 2)
}

/// Edge `axis * 4 + (o1 + 2 * o2)` runs along `axis`, with `o1`, `o2` the
/// coordinates on the next two axes in cyclic order.
fn edge_of(a: usize, b: usize) -> usize {
    let (ca, cb) = (corner_coords(a), corner_coords(b));
    let axis = (0..3).find(|&k| ca[k] != cb[k]).unwrap();
    let (u, w) = ((axis + 1) % 3, (axis + 2) % 3);
    axis * 4 + ca[u] + 2 * ca[w]
}

/// The two corners of edge `e`, lower coordinate first.
pub fn edge_corners(e: usize) -> (usize, usize) {
    let axis = e / 4;
    let (u, w) = ((axis + 1) % 3, (axis + 2) % 3);
    let mut x = [0usize; 3];
    x[u] = e & 1;
    x[w] = (e >> 1) & 1;
    let a = corner_index(x);
    x[axis] = 1;
    (a, corner_index(x))
}

/// Faces containing edge `e`, as `axis * 2 + side`.
fn edge_faces(e: usize) -> [usize; 2] {
    let axis = e / 4;
    let (u, w) = ((axis + 1) % 3, (axis + 2) % 3);
    [u * 2 + (e & 1), w * 2 + ((e >> 1) & 1)]
}

/// Corners of face `axis * 2 + side`, counter-clockwise seen from outside,
/// starting at the face's minimum corner.
fn face_corners(face: usize) -> [usize; 4] {
    let (axis, side) = (face / 2, face % 2);
    let (u, w) = ((axis + 1) % 3, (axis + 2) % 3);
    let at = |cu: usize, cw: usize| {
        let mut x = [0usize; 3];
        x[axis] = side;
        x[u] = cu;
        x[w] = cw;
        corner_index(x)
    };
    if side == 1 {
        [at(0, 0), at(1, 0), at(1, 1), at(0, 1)]
    } else {
        [at(0, 0), at(0, 1), at(1, 1), at(1, 0)]
    }
}

/// Directed crossing segments on one face for a cube configuration
/// (`case` bit `c` set when corner `c` is positive). Each segment keeps the
/// positive side on its left, seen from outside the cube.
fn face_segments(case: usize, face: usize) -> Vec<(usize, usize)> {
    let fc = face_corners(face);
    let pos = |i: usize| case >> fc[i % 4] & 1 == 1;
    // Crossing on side i (between fc[i] and fc[i+1]): leaving when i is
    // positive and i+1 negative, entering otherwise.
    let mut leaving = Vec::new();
    let mut entering = Vec::new();
    for i in 0..4 {
        if pos(i) != pos(i + 1) {
            if pos(i) {
                leaving.push(i);
            } else {
                entering.push(i);
            }
        }
    }
    let edge = |i: usize| edge_of(fc[i], fc[(i + 1) % 4]);
    match leaving.len() {
        0 => Vec::new(),
        1 => vec![(edge(leaving[0]), edge(entering[0]))],
        _ => {
            // Alternating face. Cut off the diagonal through fc[0]: if fc[0]
            // is positive each positive corner is isolated (a leaving side
            // pairs with the entering side just before it), otherwise the
            // positive corners are joined (pair with the entering side after).
            let isolate_positive = pos(0);
            leaving
                .iter()
                .map(|&l| {
                    let partner = if isolate_positive {
                        (l + 3) % 4
                    } else {
                        (l + 1) % 4
                    };
                    debug_assert!(entering.contains(&partner));
                    (edge(l), edge(partner))
                })
                .collect()
        }
    }
}

fn shares_face(a: usize, b: usize) -> bool {
    let (fa, fb) = (edge_faces(a), edge_faces(b));
    fa.iter().any(|f| fb.contains(f))
}

/// All triangulations of the convex polygon `0..n`, as triangle index lists.
fn triangulations(
    lo: usize,
    hi: usize,
    memo: &mut HashMap<(usize, usize), Vec<Vec<[usize; 3]>>>,
) -> Vec<Vec<[usize; 3]>> {
    if hi - lo < 2 {
        return vec![Vec::new()];
    }
    if let Some(v) = memo.get(&(lo, hi)) {
        return v.clone();
    }
    let mut out = Vec::new();
    for m in lo + 1..hi {
        let left = triangulations(lo, m, memo);
        let right = triangulations(m, hi, memo);
        for l in &left {
            for r in &right {
                let mut t = l.clone();
                t.extend_from_slice(r);
                t.push([lo, m, hi]);
                out.push(t);
            }
        }
    }
    memo.insert((lo, hi), out.clone());
    out
}

/// Triangulates a directed loop of cube edges. Prefers triangulations with
/// no diagonal joining two edges of a common face; among those, the one whose
/// sorted diagonal set is smallest, which is independent of where the loop
/// starts and which way it runs.
fn triangulate_loop(lp: &[usize]) -> Vec<[usize; 3]> {
    let n = lp.len();
    let mut memo = HashMap::new();
    let mut best: Option<((usize, Vec<(usize, usize)>), Vec<[usize; 3]>)> = None;
    for tri in triangulations(0, n - 1, &mut memo) {
        let mut diags: Vec<(usize, usize)> = Vec::new();
        for t in &tri {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[0], t[2])] {
                let adjacent = b == a + 1 || (a == 0 && b == n - 1);
                if !adjacent {
                    let (x, y) = (lp[a].min(lp[b]), lp[a].max(lp[b]));
                    if !diags.contains(&(x, y)) {
                        diags.push((x, y));
                    }
                }
            }
        }
        diags.sort_unstable();
        let penalty = diags.iter().filter(|&&(x, y)| shares_face(x, y)).count();
        let key = (penalty, diags);
        if best.as_ref().is_none_or(|(k, _)| key < *k) {
            let tris = tri.iter().map(|t| [lp[t[0]], lp[t[1]], lp[t[2]]]).collect();
            best = Some((key, tris));
        }
    }
    best.map(|(_, t)| t).unwrap_or_default()
}

/// Triangles for one configuration, as cube-edge triples wound so the
/// normal points toward the positive corners.
fn build_case(case: usize) -> Vec<[u8; 3]> {
    let mut next: HashMap<usize, usize> = HashMap::new();
    for face in 0..6 {
        for (a, b) in face_segments(case, face) {
            let prev = next.insert(a, b);
            debug_assert!(prev.is_none());
        }
    }
    let mut starts: Vec<usize> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut used = [false; 12];
    let mut tris = Vec::new();
    for s in starts {
        if used[s] {
            continue;
        }
        let mut lp = Vec::new();
        let mut e = s;
        while !used[e] {
            used[e] = true;
            lp.push(e);
            e = next[&e];
        }
        for t in triangulate_loop(&lp) {
            tris.push([t[0] as u8, t[1] as u8, t[2] as u8]);
        }
    }
    tris
}

/// Case table: for each of the 256 sign configurations (bit `c` set when
/// corner `c` is positive), triangles as triples of cube-edge indices.
pub fn case_table() -> &'static [Vec<[u8; 3]>] {
    static TABLE: OnceLock<Vec<Vec<[u8; 3]>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table: Vec<Vec<[u8; 3]>> = vec![Vec::new(); 256];
        for c in 0..128 {
            let tris = build_case(c);
            table[255 - c] = tris.iter().map(|&[a, b, c]| [a, c, b]).collect();
            table[c] = tris;
        }
        table
    })
}

/// Applies the exact-iso nudge: values equal to `iso` count as positive.
#[inline]
fn nudged(v: f64, iso: f64, spacing: f64) -> f64 {
    if v == iso {
        iso + 1e-12 * spacing
    } else {
        v
    }
}

/// Extracts the `iso` level set, welded by grid edge. Normals point toward
/// larger field values.
pub fn marching_cubes(grid: &ScalarGrid, iso: f64) -> TriangleMesh {
    let table = case_table();
    let [nx, ny, nz] = grid.dims;
    let h = grid.spacing;
    let vals: Vec<f64> = grid.values.iter().map(|&v| nudged(v, iso, h)).collect();
    let mut mesh = TriangleMesh::default();
    // Vertex id per (node, axis) of the edge starting at that node.
    let mut edge_vertex: HashMap<(usize, u8), u32> = HashMap::new();
    let node = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);
    let offset = |c: usize| corner_coords(c);
    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let mut case = 0usize;
                for c in 0..8 {
                    let [dx, dy, dz] = offset(c);
                    if vals[node(i + dx, j + dy, k + dz)] > iso {
                        case |= 1 << c;
                    }
                }
                if case == 0 || case == 255 {
                    continue;
                }
                // Create vertices in edge order so numbering does not depend
                // on the winding stored in the table.
                let mut local = [u32::MAX; 12];
                let mut used = [false; 12];
                for tri in &table[case] {
                    for &e in tri {
                        used[e as usize] = true;
                    }
                }
                for e in 0..12 {
                    if used[e] {
                        let (ca, cb) = edge_corners(e);
                        let [ax, ay, az] = offset(ca);
                        let [bx, by, bz] = offset(cb);
                        let (pa, pb) = ((i + ax, j + ay, k + az), (i + bx, j + by, k + bz));
                        let key = (node(pa.0, pa.1, pa.2), (e / 4) as u8);
                        local[e] = *edge_vertex.entry(key).or_insert_with(|| {
                            let va = vals[key.0];
                            let vb = vals[node(pb.0, pb.1, pb.2)];
                            let t = (iso - va) / (vb - va);
                            let a = grid.node_position(pa.0, pa.1, pa.2);
                            let mut p = a;
                            p[e / 4] += t * h;
                            mesh.vertices.push(p);
                            mesh.vertices.len() as u32 - 1
                        });
                    }
                }
                for tri in &table[case] {
                    mesh.faces.push(tri.map(|e| local[e as usize]));
                }
            }
        }
    }
    mesh
}

/// Unwelded marching cubes: every triangle owns its three vertices.
pub fn marching_cubes_soup(grid: &ScalarGrid, iso: f64) -> TriangleMesh {
    let welded = marching_cubes(grid, iso);
    let mut soup = TriangleMesh::default();
    for f in &welded.faces {
        let b = soup.vertices.len() as u32;
        for &v in f {
            soup.vertices.push(welded.vertices[v as usize]);
        }
        soup.faces.push([b, b + 1, b + 2]);
    }
    soup
}

/// Merges vertices closer than `tolerance` (exact coordinate equality when
/// zero), remaps faces and drops faces that collapse. The lowest index in a
/// cluster survives.
pub fn vertex_weld(mesh: &TriangleMesh, tolerance: f64) -> TriangleMesh {
    let n = mesh.vertices.len();
    let mut rep: Vec<u32> = (0..n as u32).collect();
    if tolerance <= 0.0 {
        let mut seen: HashMap<[u64; 3], u32> = HashMap::new();
        for (i, p) in mesh.vertices.iter().enumerate() {
            // Normalize -0.0 so it keys like 0.0.
            let key = [p.x + 0.0, p.y + 0.0, p.z + 0.0].map(f64::to_bits);
            rep[i] = *seen.entry(key).or_insert(i as u32);
        }
    } else {
        let cell = |p: &Point| [p.x, p.y, p.z].map(|c| (c / tolerance).floor() as i64);
        let mut buckets: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        let t2 = tolerance * tolerance;
        for (i, p) in mesh.vertices.iter().enumerate() {
            let c = cell(p);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(list) = buckets.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                            for &q in list {
                                if (mesh.vertices[q as usize] - p).norm_squared() <= t2
                                    && found.is_none_or(|f| q < f)
                                {
                                    found = Some(q);
                                    if q == 0 {
                                        break 'search;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            match found {
                Some(q) => rep[i] = q,
                None => buckets.entry(c).or_default().push(i as u32),
            }
        }
    }
    let faces = mesh
        .faces
        .iter()
        .map(|f| f.map(|v| rep[v as usize]))
        .filter(|f| f[0] != f[1] && f[1] != f[2] && f[0] != f[2])
        .collect();
    TriangleMesh {
        vertices: mesh.vertices.clone(),
        faces,
    }
    .compacted()
}
