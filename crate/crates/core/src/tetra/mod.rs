//! Delaunay tetrahedral complex over the proxy vertices and the exterior
//! anchor corners.

mod delaunay;
pub mod predicates;

use crate::error::{Error, Result};
use crate::geom::{triangle_area, Aabb, Point, Vec3};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{BufRead, Write};

/// Outward-facing vertex slots of the face opposite slot `i` of a
/// positively oriented tet.
pub const TET_FACES: [[usize; 3]; 4] = [[1, 3, 2], [0, 2, 3], [0, 3, 1], [0, 1, 2]];

/// A face shared by two cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteriorFace {
    /// Vertices sorted ascending.
    pub key: [u32; 3],
    pub cells: [u32; 2],
    /// Slot of the opposite vertex in each cell.
    pub slots: [u8; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullFace {
    pub key: [u32; 3],
    pub cell: u32,
    pub slot: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceRef {
    Interior(usize),
    Hull(usize),
}

#[derive(Debug, Clone)]
pub struct TetComplex {
    pub points: Vec<Point>,
    /// Positively oriented cells.
    pub tets: Vec<[u32; 4]>,
    /// `neighbors[t][i]` lies across the face opposite `tets[t][i]`.
    pub neighbors: Vec<[Option<u32>; 4]>,
    pub interior_faces: Vec<InteriorFace>,
    pub hull_faces: Vec<HullFace>,
    pub anchor_flags: Vec<bool>,
    face_index: HashMap<[u32; 3], FaceRef>,
}

fn sorted3(mut k: [u32; 3]) -> [u32; 3] {
    k.sort_unstable();
    k
}

/// 63-bit Morton code of `p` inside `bb`.
fn morton(p: &Point, bb: &Aabb) -> u64 {
    let ext = bb.extent();
    let mut code = 0u64;
    let q: [u64; 3] = std::array::from_fn(|k| {
        let t = if ext[k] > 0.0 { (p[k] - bb.min[k]) / ext[k] } else { 0.0 };
        (t.clamp(0.0, 1.0) * ((1u64 << 21) - 1) as f64) as u64
    });
    for bit in (0..21).rev() {
        for (k, qk) in q.iter().enumerate() {
            code |= ((qk >> bit) & 1) << (3 * bit + 2 - k as u64);
        }
    }
    code
}

/// Appends the 8 corners of the bounding box of `points`, scaled by
/// `expansion` about its center. Axes thinner than 0.1 are widened to 0.1
/// first. Returns the extended list and per-point anchor flags.
pub fn add_exterior_anchors(points: &[Point], expansion: f64) -> Result<(Vec<Point>, Vec<bool>)> {
    if points.is_empty() {
        return Err(Error::EmptyMesh);
    }
    if !(expansion > 1.0 && expansion.is_finite()) {
        return Err(Error::InvalidParameter(format!("anchor expansion {expansion} must exceed 1")));
    }
    let bb = Aabb::from_points(points.iter());
    let center = bb.center();
    let half: Vec3 = bb.extent().map(|e| e.max(0.1) * 0.5 * expansion);
    let mut out = points.to_vec();
    for c in 0..8 {
        let s = |bit: usize| if c >> bit & 1 == 1 { 1.0 } else { -1.0 };
        out.push(Point::new(center.x + s(0) * half.x, center.y + s(1) * half.y, center.z + s(2) * half.z));
    }
    let mut flags = vec![false; points.len()];
    flags.extend([true; 8]);
    Ok((out, flags))
}

/// Delaunay tetrahedralization of `points`. Exact duplicates (within 1e-12
/// per coordinate of their predecessor in sorted order) are left out of every
/// tet. Non-anchor points are inserted in Morton order, anchors last.
pub fn delaunay_tetrahedralize(points: &[Point], anchor_flags: Option<&[bool]>) -> Result<TetComplex> {
    if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(Error::InvalidParameter("non-finite point".into()));
    }
    let flags: Vec<bool> = match anchor_flags {
        Some(f) if f.len() == points.len() => f.to_vec(),
        Some(_) => return Err(Error::InvalidParameter("anchor flag count mismatch".into())),
        None => vec![false; points.len()],
    };
    let mut lex: Vec<u32> = (0..points.len() as u32).collect();
    lex.sort_by(|&a, &b| {
        let (p, q) = (&points[a as usize], &points[b as usize]);
        p.x.total_cmp(&q.x)
            .then(p.y.total_cmp(&q.y))
            .then(p.z.total_cmp(&q.z))
            .then(a.cmp(&b))
    });
    let mut duplicate = vec![false; points.len()];
    for w in lex.windows(2) {
        let (p, q) = (&points[w[0] as usize], &points[w[1] as usize]);
        if (p - q).amax() <= 1e-12 {
            // Keep anchors over ordinary points, then the earlier index.
            let (keep, drop) = if flags[w[1] as usize] && !flags[w[0] as usize] { (w[1], w[0]) } else { (w[0], w[1]) };
            if !duplicate[keep as usize] {
                duplicate[drop as usize] = true;
            }
        }
    }
    let bb = Aabb::from_points(points.iter());
    let mut order: Vec<u32> = (0..points.len() as u32)
        .filter(|&i| !duplicate[i as usize] && !flags[i as usize])
        .collect();
    order.sort_by_cached_key(|&i| (morton(&points[i as usize], &bb), i));
    order.extend((0..points.len() as u32).filter(|&i| !duplicate[i as usize] && flags[i as usize]));

    let raw = delaunay::tetrahedralize(points, &order)?;
    Ok(TetComplex::from_cells(points.to_vec(), raw.tets, raw.neighbors, flags))
}

impl TetComplex {
    fn from_cells(points: Vec<Point>, tets: Vec<[u32; 4]>, neighbors: Vec<[Option<u32>; 4]>, anchor_flags: Vec<bool>) -> Self {
        let mut interior_faces = Vec::new();
        let mut hull_faces = Vec::new();
        let mut face_index = HashMap::with_capacity(tets.len() * 2 + 8);
        for (t, tet) in tets.iter().enumerate() {
            for i in 0..4 {
                let key = sorted3(TET_FACES[i].map(|k| tet[k]));
                match neighbors[t][i] {
                    None => {
                        face_index.insert(key, FaceRef::Hull(hull_faces.len()));
                        hull_faces.push(HullFace {
                            key,
                            cell: t as u32,
                            slot: i as u8,
                        });
                    }
                    Some(n) if (n as usize) > t => {
                        let j = tets[n as usize].iter().position(|v| !tet.contains(v)).unwrap();
                        face_index.insert(key, FaceRef::Interior(interior_faces.len()));
                        interior_faces.push(InteriorFace {
                            key,
                            cells: [t as u32, n],
                            slots: [i as u8, j as u8],
                        });
                    }
                    Some(_) => {}
                }
            }
        }
        Self {
            points,
            tets,
            neighbors,
            interior_faces,
            hull_faces,
            anchor_flags,
            face_index,
        }
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    #[inline]
    pub fn tet_points(&self, t: usize) -> [&Point; 4] {
        self.tets[t].map(|v| &self.points[v as usize])
    }

    /// Vertices of the face opposite slot `slot` of cell `t`, wound so the
    /// normal points out of `t`.
    #[inline]
    pub fn outward_face(&self, t: usize, slot: usize) -> [u32; 3] {
        TET_FACES[slot].map(|k| self.tets[t][k])
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.tet_points(t);
        // orient3d(a, b, c, d) = det[a - d; b - d; c - d] = 6 * volume.
        (a - d).dot(&(b - d).cross(&(c - d))) / 6.0
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.tets.len()).map(|t| self.tet_volume(t)).sum()
    }

    /// Whether cell `t` has an anchor corner among its vertices.
    pub fn touches_anchor(&self, t: usize) -> bool {
        self.tets[t].iter().any(|&v| self.anchor_flags[v as usize])
    }

    pub fn face(&self, key: [u32; 3]) -> Option<FaceRef> {
        self.face_index.get(&sorted3(key)).copied()
    }

    /// Signed volume enclosed by the hull faces; equals the convex hull
    /// volume when the hull faces bound the complex.
    pub fn hull_volume(&self) -> f64 {
        self.hull_faces
            .iter()
            .map(|h| {
                let [a, b, c] = self.outward_face(h.cell as usize, h.slot as usize).map(|v| self.points[v as usize].coords);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Debug dump: `p x y z` lines, then `t a b c d` lines.
    pub fn write_debug(&self, w: &mut impl Write) -> std::io::Result<()> {
        for (i, p) in self.points.iter().enumerate() {
            writeln!(w, "p {:e} {:e} {:e} {}", p.x, p.y, p.z, u8::from(self.anchor_flags[i]))?;
        }
        for t in &self.tets {
            writeln!(w, "t {} {} {} {}", t[0], t[1], t[2], t[3])?;
        }
        Ok(())
    }

    /// Reads [`TetComplex::write_debug`] output, rebuilding adjacency.
    pub fn read_debug(r: impl BufRead) -> Result<Self> {
        let mut points = Vec::new();
        let mut flags = Vec::new();
        let mut tets = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let bad = |m: &str| Error::Parse {
                location: format!("line {}", n + 1),
                message: m.to_string(),
            };
            let line = line.map_err(|e| bad(&e.to_string()))?;
            let tok: Vec<&str> = line.split_whitespace().collect();
            match tok.first() {
                Some(&"p") if tok.len() == 5 => {
                    let c: Vec<f64> = tok[1..4].iter().map(|s| s.parse().map_err(|_| bad("bad coordinate"))).collect::<Result<_>>()?;
                    points.push(Point::new(c[0], c[1], c[2]));
                    flags.push(tok[4] == "1");
                }
                Some(&"t") if tok.len() == 5 => {
                    let v: Vec<u32> = tok[1..].iter().map(|s| s.parse().map_err(|_| bad("bad index"))).collect::<Result<_>>()?;
                    if v.iter().any(|&i| i as usize >= points.len()) {
                        return Err(bad("index out of range"));
                    }
                    tets.push([v[0], v[1], v[2], v[3]]);
                }
                None => {}
                _ => return Err(bad("unrecognized record")),
            }
        }
        let mut owner: HashMap<[u32; 3], (u32, usize)> = HashMap::new();
        let mut neighbors = vec![[None; 4]; tets.len()];
        for (t, tet) in tets.iter().enumerate() {
            for i in 0..4 {
                let key = sorted3(TET_FACES[i].map(|k| tet[k]));
                if let Some((o, j)) = owner.remove(&key) {
                    neighbors[t][i] = Some(o);
                    neighbors[o as usize][j] = Some(t as u32);
                } else {
                    owner.insert(key, (t as u32, i));
                }
            }
        }
        Ok(Self::from_cells(points, tets, neighbors, flags))
    }
}

/// Arithmetic mean of the four vertices of cell `t`.
pub fn cell_centroid(complex: &TetComplex, t: usize) -> Point {
    let [a, b, c, d] = complex.tet_points(t);
    Point::from((a.coords + b.coords + c.coords + d.coords) / 4.0)
}

/// Area of the triangular face with vertex set `key`.
pub fn face_area(complex: &TetComplex, key: [u32; 3]) -> Result<f64> {
    complex.face(key).ok_or(Error::UnknownFace(key))?;
    let [a, b, c] = key.map(|v| &complex.points[v as usize]);
    Ok(triangle_area(a, b, c))
}
