//! Incremental Bowyer-Watson insertion with ghost cells outside the hull.
//!
//! Ghost cells carry `GHOST` in slot 3 and a finite face `(a, b, c)` with
//! `orient3d(a, b, c, x) > 0` for points `x` beyond the hull. Replacing any
//! vertex of a cell by a point on the same side of the opposite face keeps
//! this convention, for finite and ghost cells alike.

use super::predicates::{insphere_perturbed, orient3d};
use crate::error::{Error, Result};
use crate::geom::Point;
use std::collections::HashMap;

pub(crate) const GHOST: u32 = u32::MAX;
const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Cell {
    v: [u32; 4],
    /// `n[i]` is the cell across the face opposite `v[i]`.
    n: [u32; 4],
}

impl Cell {
    fn is_ghost(&self) -> bool {
        self.v[3] == GHOST
    }
}

pub(crate) struct Triangulation<'a> {
    pts: &'a [Point],
    cells: Vec<Cell>,
    alive: Vec<bool>,
    /// Scratch marks, compared against the current insertion stamp.
    in_cavity: Vec<u32>,
    rejected: Vec<u32>,
    stamp: u32,
    last: u32,
    rng: u64,
}

/// Finite cells of the Delaunay tetrahedralization, positively oriented,
/// plus per-cell neighbours (`None` across hull faces). Points listed in
/// `skip` are left out.
pub(crate) struct RawComplex {
    pub tets: Vec<[u32; 4]>,
    pub neighbors: Vec<[Option<u32>; 4]>,
}

impl<'a> Triangulation<'a> {
    fn conflicts(&self, t: u32, p: u32) -> bool {
        let c = &self.cells[t as usize];
        if c.is_ghost() {
            let [a, b, cc, _] = c.v.map(|i| if i == GHOST { 0 } else { i as usize });
            let o = orient3d(&self.pts[a], &self.pts[b], &self.pts[cc], &self.pts[p as usize]);
            if o != 0.0 {
                return o > 0.0;
            }
            // On the hull plane: in conflict exactly when the finite cell
            // behind the face is.
            let inner = c.n[3];
            insphere_perturbed(self.pts, self.cells[inner as usize].v, p) > 0
        } else {
            insphere_perturbed(self.pts, c.v, p) > 0
        }
    }

    fn next_random(&mut self) -> u64 {
        // xorshift64*, fixed seed: deterministic walks.
        self.rng ^= self.rng >> 12;
        self.rng ^= self.rng << 25;
        self.rng ^= self.rng >> 27;
        self.rng.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Visibility walk to a cell in conflict with point `p`.
    fn locate(&mut self, p: u32) -> u32 {
        let pp = self.pts[p as usize];
        let mut t = self.last;
        if !self.alive[t as usize] {
            t = self.alive.iter().position(|&a| a).unwrap() as u32;
        }
        let mut steps = 0usize;
        'walk: loop {
            steps += 1;
            if steps > 4 * self.cells.len() + 64 {
                break;
            }
            let c = self.cells[t as usize];
            if c.is_ghost() {
                if self.conflicts(t, p) {
                    return t;
                }
                t = c.n[3];
                continue;
            }
            let start = (self.next_random() % 4) as usize;
            for k in 0..4 {
                let i = (start + k) % 4;
                let mut q = c.v.map(|v| &self.pts[v as usize]);
                q[i] = &pp;
                if orient3d(q[0], q[1], q[2], q[3]) < 0.0 {
                    t = c.n[i];
                    continue 'walk;
                }
            }
            return t;
        }
        // Fallback for pathological walks: exhaustive search.
        (0..self.cells.len() as u32)
            .find(|&t| self.alive[t as usize] && self.conflicts(t, p))
            .expect("no cell in conflict")
    }

    fn insert(&mut self, p: u32) {
        self.stamp += 1;
        let stamp = self.stamp;
        let start = self.locate(p);
        let mut cavity = vec![start];
        self.in_cavity[start as usize] = stamp;
        let mut boundary: Vec<(u32, usize)> = Vec::new();
        let mut k = 0;
        while k < cavity.len() {
            let t = cavity[k];
            k += 1;
            for i in 0..4 {
                let n = self.cells[t as usize].n[i];
                if self.in_cavity[n as usize] == stamp {
                    continue;
                }
                if self.rejected[n as usize] != stamp && self.conflicts(n, p) {
                    self.in_cavity[n as usize] = stamp;
                    cavity.push(n);
                } else {
                    self.rejected[n as usize] = stamp;
                    boundary.push((t, i));
                }
            }
        }

        let mut pending: HashMap<(u32, u32), (u32, usize)> = HashMap::with_capacity(boundary.len() * 2);
        let mut created = Vec::with_capacity(boundary.len());
        for &(t, i) in &boundary {
            let old = self.cells[t as usize];
            let outer = old.n[i];
            let mut v = old.v;
            v[i] = p;
            let mut n = [NONE; 4];
            n[i] = outer;
            let nt = self.push_cell(Cell { v, n });
            created.push(nt);
            let back = self.cells[outer as usize].n.iter().position(|&x| x == t).unwrap();
            self.cells[outer as usize].n[back] = nt;
            // The three faces through `p` pair up with other new cells; key
            // each by the boundary edge it contains.
            for j in 0..4 {
                if j == i {
                    continue;
                }
                let others: Vec<u32> = (0..4).filter(|&x| x != i && x != j).map(|x| v[x]).collect();
                let key = (others[0].min(others[1]), others[0].max(others[1]));
                match pending.remove(&key) {
                    Some((mt, mj)) => {
                        self.cells[nt as usize].n[j] = mt;
                        self.cells[mt as usize].n[mj] = nt;
                    }
                    None => {
                        pending.insert(key, (nt, j));
                    }
                }
            }
        }
        debug_assert!(pending.is_empty());
        for &t in &cavity {
            self.alive[t as usize] = false;
        }
        self.last = created[0];
    }

    fn push_cell(&mut self, c: Cell) -> u32 {
        self.cells.push(c);
        self.alive.push(true);
        self.in_cavity.push(0);
        self.rejected.push(0);
        (self.cells.len() - 1) as u32
    }
}

/// Four affinely independent points, earliest in `order` first.
fn initial_simplex(pts: &[Point], order: &[u32]) -> Option<[u32; 4]> {
    let p0 = *order.first()?;
    let p1 = *order.iter().find(|&&i| pts[i as usize] != pts[p0 as usize])?;
    let (a, b) = (pts[p0 as usize], pts[p1 as usize]);
    let collinear = |c: &Point| {
        let pr = |x: &Point, u: usize, w: usize| robust::Coord { x: x[u], y: x[w] };
        [(0, 1), (1, 2), (2, 0)]
            .iter()
            .all(|&(u, w)| robust::orient2d(pr(&a, u, w), pr(&b, u, w), pr(c, u, w)) == 0.0)
    };
    for &p2 in order {
        if collinear(&pts[p2 as usize]) {
            continue;
        }
        let c = pts[p2 as usize];
        if let Some(&p3) = order.iter().find(|&&i| orient3d(&a, &b, &c, &pts[i as usize]) != 0.0) {
            return Some([p0, p1, p2, p3]);
        }
        // Everything is coplanar with this triangle.
        return None;
    }
    None
}

/// Delaunay tetrahedralization of `pts`, inserting in `order`. Points not in
/// `order` are ignored.
pub(crate) fn tetrahedralize(pts: &[Point], order: &[u32]) -> Result<RawComplex> {
    let mut s = initial_simplex(pts, order).ok_or(Error::DegeneratePointSet)?;
    if orient3d(&pts[s[0] as usize], &pts[s[1] as usize], &pts[s[2] as usize], &pts[s[3] as usize]) < 0.0 {
        s.swap(0, 1);
    }
    let mut tri = Triangulation {
        pts,
        cells: Vec::with_capacity(order.len() * 8),
        alive: Vec::new(),
        in_cavity: Vec::new(),
        rejected: Vec::new(),
        stamp: 0,
        last: 0,
        rng: 0x9E37_79B9_7F4A_7C15,
    };
    let root = tri.push_cell(Cell { v: s, n: [NONE; 4] });
    const FACES: [[usize; 3]; 4] = [[1, 3, 2], [0, 2, 3], [0, 3, 1], [0, 1, 2]];
    let mut ghosts = [0u32; 4];
    for i in 0..4 {
        // The outward face of the root, reversed, so that beyond-the-hull
        // points are on the positive side.
        let f = FACES[i].map(|k| s[k]);
        let g = tri.push_cell(Cell {
            v: [f[0], f[2], f[1], GHOST],
            n: [NONE, NONE, NONE, root],
        });
        tri.cells[root as usize].n[i] = g;
        ghosts[i] = g;
    }
    let mut pending: HashMap<(u32, u32), (u32, usize)> = HashMap::new();
    for &g in &ghosts {
        let v = tri.cells[g as usize].v;
        for j in 0..3 {
            let others: Vec<u32> = (0..3).filter(|&x| x != j).map(|x| v[x]).collect();
            let key = (others[0].min(others[1]), others[0].max(others[1]));
            match pending.remove(&key) {
                Some((m, mj)) => {
                    tri.cells[g as usize].n[j] = m;
                    tri.cells[m as usize].n[mj] = g;
                }
                None => {
                    pending.insert(key, (g, j));
                }
            }
        }
    }
    tri.last = root;
    for &p in order {
        if s.contains(&p) {
            continue;
        }
        tri.insert(p);
    }

    let mut remap = vec![NONE; tri.cells.len()];
    let mut tets = Vec::new();
    for (t, c) in tri.cells.iter().enumerate() {
        if tri.alive[t] && !c.is_ghost() {
            remap[t] = tets.len() as u32;
            tets.push(c.v);
        }
    }
    let neighbors = tri
        .cells
        .iter()
        .enumerate()
        .filter(|(t, c)| tri.alive[*t] && !c.is_ghost())
        .map(|(_, c)| c.n.map(|n| (remap[n as usize] != NONE).then(|| remap[n as usize])))
        .collect();
    Ok(RawComplex { tets, neighbors })
}
