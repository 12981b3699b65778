//! Quadric-error edge-collapse simplification (Garland and Heckbert) for
//! closed manifold meshes.

use crate::error::{Error, Result};
use crate::geom::{Point, Vec3};
use crate::mesh::{validate, TriangleMesh};
use nalgebra::{Matrix3, Matrix4, Vector4};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Sum of squared distances to a set of planes, as a symmetric 4x4 matrix
/// acting on homogeneous points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadric(pub Matrix4<f64>);

impl Quadric {
    pub fn zero() -> Self {
        Quadric(Matrix4::zeros())
    }

    /// Quadric of the plane through `p` with unit normal `n`.
    pub fn plane(n: &Vec3, p: &Point) -> Self {
        let v = Vector4::new(n.x, n.y, n.z, -n.dot(&p.coords));
        Quadric(v * v.transpose())
    }

    pub fn error(&self, p: &Point) -> f64 {
        let v = Vector4::new(p.x, p.y, p.z, 1.0);
        (v.transpose() * self.0 * v)[0]
    }

    /// Minimizer of the error, or `None` when the 3x3 block is singular.
    pub fn optimum(&self) -> Option<Point> {
        let q = &self.0;
        let a = Matrix3::new(q[(0, 0)], q[(0, 1)], q[(0, 2)], q[(1, 0)], q[(1, 1)], q[(1, 2)], q[(2, 0)], q[(2, 1)], q[(2, 2)]);
        if a.determinant().abs() < 1e-12 {
            return None;
        }
        let b = Vec3::new(-q[(0, 3)], -q[(1, 3)], -q[(2, 3)]);
        a.lu().solve(&b).map(Point::from)
    }
}

impl std::ops::Add for Quadric {
    type Output = Quadric;
    fn add(self, o: Quadric) -> Quadric {
        Quadric(self.0 + o.0)
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    cost: f64,
    u: u32,
    v: u32,
    stamp_u: u32,
    stamp_v: u32,
    target: Point,
}

impl PartialEq for Candidate {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Candidate {
    // Reversed so the max-heap pops the cheapest collapse, smaller edge first.
    fn cmp(&self, o: &Self) -> Ordering {
        o.cost
            .total_cmp(&self.cost)
            .then_with(|| (o.u, o.v).cmp(&(self.u, self.v)))
    }
}

/// Squared edge length added to the quadric cost. Flat regions have zero
/// quadric error; without this they collapse into high-valence fans.
const LENGTH_WEIGHT: f64 = 1e-2;

struct State {
    pos: Vec<Point>,
    quadric: Vec<Quadric>,
    faces: Vec<[u32; 3]>,
    alive: Vec<bool>,
    vert_faces: Vec<Vec<u32>>,
    stamp: Vec<u32>,
}

impl State {
    fn neighbors(&self, v: u32) -> Vec<u32> {
        let mut n: Vec<u32> = self.vert_faces[v as usize]
            .iter()
            .flat_map(|&f| self.faces[f as usize])
            .filter(|&x| x != v)
            .collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    fn candidate(&self, u: u32, v: u32) -> Candidate {
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        let q = self.quadric[u as usize] + self.quadric[v as usize];
        let (pu, pv) = (self.pos[u as usize], self.pos[v as usize]);
        let mid = nalgebra::center(&pu, &pv);
        let len = (pu - pv).norm();
        let target = match q.optimum() {
            // Far-flung optima come from near-singular systems.
            Some(p) if (p - mid).norm() <= 2.0 * len => p,
            _ => mid,
        };
        Candidate {
            cost: q.error(&target).max(0.0) + LENGTH_WEIGHT * len * len,
            u,
            v,
            stamp_u: self.stamp[u as usize],
            stamp_v: self.stamp[v as usize],
            target,
        }
    }

    /// Faces around edge `uv` and their apex vertices.
    fn edge_faces(&self, u: u32, v: u32) -> Vec<(u32, u32)> {
        self.vert_faces[u as usize]
            .iter()
            .filter_map(|&f| {
                let t = self.faces[f as usize];
                t.contains(&v).then(|| (f, t.into_iter().find(|&x| x != u && x != v).unwrap()))
            })
            .collect()
    }

    /// Link condition, no valence-3 apex and no face flips.
    fn can_collapse(&self, c: &Candidate) -> bool {
        let (u, v) = (c.u, c.v);
        let around = self.edge_faces(u, v);
        if around.len() != 2 {
            return false;
        }
        let mut apexes: Vec<u32> = around.iter().map(|&(_, a)| a).collect();
        apexes.sort_unstable();
        if apexes[0] == apexes[1] {
            return false;
        }
        let nu = self.neighbors(u);
        let nv = self.neighbors(v);
        let common: Vec<u32> = nu.iter().copied().filter(|x| nv.binary_search(x).is_ok()).collect();
        if common != apexes {
            return false;
        }
        if apexes.iter().any(|&a| self.vert_faces[a as usize].len() <= 3) {
            return false;
        }
        for w in [u, v] {
            for &f in &self.vert_faces[w as usize] {
                let t = self.faces[f as usize];
                if t.contains(&u) && t.contains(&v) {
                    continue;
                }
                let p = t.map(|x| self.pos[x as usize]);
                let before = (p[1] - p[0]).cross(&(p[2] - p[0]));
                let q = t.map(|x| if x == w { c.target } else { self.pos[x as usize] });
                let after = (q[1] - q[0]).cross(&(q[2] - q[0]));
                if after.dot(&before) <= 0.0 || after.norm_squared() <= 1e-12 * before.norm_squared() {
                    return false;
                }
            }
        }
        true
    }

    fn collapse(&mut self, c: &Candidate) {
        let (u, v) = (c.u, c.v);
        for (f, _) in self.edge_faces(u, v) {
            self.alive[f as usize] = false;
            for x in self.faces[f as usize] {
                self.vert_faces[x as usize].retain(|&g| g != f);
            }
        }
        let moved = std::mem::take(&mut self.vert_faces[v as usize]);
        for &f in &moved {
            for x in self.faces[f as usize].iter_mut() {
                if *x == v {
                    *x = u;
                }
            }
        }
        self.vert_faces[u as usize].extend(moved);
        self.vert_faces[u as usize].sort_unstable();
        self.pos[u as usize] = c.target;
        self.quadric[u as usize] = self.quadric[u as usize] + self.quadric[v as usize];
        self.stamp[u as usize] += 1;
        self.stamp[v as usize] += 1;
    }
}

/// Greedy minimum-error edge collapses until at most
/// `ceil((1 - removal_ratio) * faces)` faces remain or no legal collapse is
/// left. The input must be closed and manifold; topology is preserved.
pub fn decimate(mesh: &TriangleMesh, removal_ratio: f64) -> Result<TriangleMesh> {
    if !(0.0..1.0).contains(&removal_ratio) {
        return Err(Error::InvalidParameter(format!(
            "removal ratio {removal_ratio} outside [0, 1)"
        )));
    }
    let report = validate(mesh);
    if !report.is_watertight() {
        return Err(Error::InvalidMesh(format!(
            "decimation needs a closed manifold mesh ({} boundary, {} non-manifold edges, {} non-manifold vertices)",
            report.boundary_edge_count, report.nonmanifold_edge_count, report.nonmanifold_vertex_count
        )));
    }
    let target = ((1.0 - removal_ratio) * mesh.num_faces() as f64).ceil() as usize;
    if target >= mesh.num_faces() {
        return Ok(mesh.clone());
    }

    let nv = mesh.num_vertices();
    let mut state = State {
        pos: mesh.vertices.clone(),
        quadric: vec![Quadric::zero(); nv],
        faces: mesh.faces.clone(),
        alive: vec![true; mesh.num_faces()],
        vert_faces: vec![Vec::new(); nv],
        stamp: vec![0; nv],
    };
    for (fi, f) in mesh.faces.iter().enumerate() {
        let n = mesh.face_normal(fi);
        let q = Quadric::plane(&n, &mesh.vertices[f[0] as usize]);
        for &v in f {
            state.quadric[v as usize] = state.quadric[v as usize] + q;
            state.vert_faces[v as usize].push(fi as u32);
        }
    }

    let mut heap = BinaryHeap::new();
    for f in &mesh.faces {
        for i in 0..3 {
            let (a, b) = (f[i], f[(i + 1) % 3]);
            // Each interior edge appears twice; keep one direction.
            if a < b {
                heap.push(state.candidate(a, b));
            }
        }
    }
    let mut live = mesh.num_faces();
    while live > target {
        let Some(c) = heap.pop() else { break };
        if c.stamp_u != state.stamp[c.u as usize] || c.stamp_v != state.stamp[c.v as usize] {
            continue;
        }
        if !state.can_collapse(&c) {
            continue;
        }
        state.collapse(&c);
        live -= 2;
        for w in state.neighbors(c.u) {
            heap.push(state.candidate(c.u, w));
        }
    }

    let out = TriangleMesh {
        vertices: state.pos,
        faces: (0..state.faces.len())
            .filter(|&f| state.alive[f])
            .map(|f| state.faces[f])
            .collect(),
    }
    .compacted();
    Ok(out)
}
