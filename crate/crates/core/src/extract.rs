//! Interface faces of a labeled complex, the refined signed distance field
//! built from them, and the final marching-cubes surface.

use crate::bvh::TriangleBvh;
use crate::error::{Error, Result};
use crate::field::{fill_distances, ScalarGrid};
use crate::geom::{Aabb, Point};
use crate::isosurface::marching_cubes;
use crate::mesh::TriangleMesh;
use crate::partition::CellLabeling;
use crate::tetra::predicates::orient3d;
use crate::tetra::{TetComplex, TET_FACES};

/// Triangles separating interior from exterior cells, wound so their normals
/// point toward the exterior. Vertices index the complex's points.
#[derive(Debug, Clone)]
pub struct InterfaceSet {
    pub mesh: TriangleMesh,
}

impl InterfaceSet {
    pub fn is_empty(&self) -> bool {
        self.mesh.faces.is_empty()
    }

    pub fn len(&self) -> usize {
        self.mesh.faces.len()
    }

    pub fn area(&self) -> f64 {
        self.mesh.area()
    }
}

/// Opposite-label interior faces plus hull faces of interior cells.
pub fn extract_interface(complex: &TetComplex, labeling: &CellLabeling) -> InterfaceSet {
    let mut faces = Vec::new();
    for f in &complex.interior_faces {
        let [ci, cj] = f.cells.map(|c| c as usize);
        if labeling.labels[ci] == labeling.labels[cj] {
            continue;
        }
        let k = if labeling.is_interior(ci) { 0 } else { 1 };
        faces.push(complex.outward_face(f.cells[k] as usize, f.slots[k] as usize));
    }
    for h in &complex.hull_faces {
        if labeling.is_interior(h.cell as usize) {
            faces.push(complex.outward_face(h.cell as usize, h.slot as usize));
        }
    }
    InterfaceSet {
        mesh: TriangleMesh {
            vertices: complex.points.clone(),
            faces,
        },
    }
}

/// Connected regions of interior cells joined through shared faces: cell
/// count and bounding box of each.
pub fn interior_components(complex: &TetComplex, labeling: &CellLabeling) -> Vec<(usize, Aabb)> {
    let n = complex.num_tets();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for s in 0..n {
        if seen[s] || !labeling.is_interior(s) {
            continue;
        }
        seen[s] = true;
        stack.push(s);
        let (mut count, mut bb) = (0, Aabb::empty());
        while let Some(t) = stack.pop() {
            count += 1;
            for p in complex.tet_points(t) {
                bb.grow(p);
            }
            for nb in complex.neighbors[t].iter().flatten() {
                let nb = *nb as usize;
                if !seen[nb] && labeling.is_interior(nb) {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
        out.push((count, bb));
    }
    out
}

/// Inclusive containment of `p` in positively oriented tet `t`.
#[inline]
fn tet_contains(complex: &TetComplex, t: usize, p: &Point) -> bool {
    let tet = complex.tets[t];
    TET_FACES.iter().all(|f| {
        let [a, b, c] = f.map(|k| &complex.points[tet[k] as usize]);
        orient3d(a, b, c, p) >= 0.0
    })
}

/// Marks every grid node lying in some interior-labeled cell.
fn interior_nodes(grid: &ScalarGrid, complex: &TetComplex, labeling: &CellLabeling) -> Vec<bool> {
    let mut inside = vec![false; grid.len()];
    let h = grid.spacing;
    for t in 0..complex.num_tets() {
        if !labeling.is_interior(t) {
            continue;
        }
        let bb = Aabb::from_points(complex.tet_points(t));
        let mut range = [(0usize, 0usize); 3];
        let mut empty = false;
        for a in 0..3 {
            let lo = ((bb.min[a] - grid.origin[a]) / h).ceil().max(0.0);
            let hi = ((bb.max[a] - grid.origin[a]) / h).floor().min((grid.dims[a] - 1) as f64);
            if lo > hi {
                empty = true;
                break;
            }
            // Widen by one node against rounding in the division; the exact
            // containment test decides.
            range[a] = ((lo as usize).saturating_sub(1), (hi as usize + 1).min(grid.dims[a] - 1));
        }
        if empty {
            continue;
        }
        for k in range[2].0..=range[2].1 {
            for j in range[1].0..=range[1].1 {
                for i in range[0].0..=range[0].1 {
                    let idx = grid.index(i, j, k);
                    if !inside[idx] && tet_contains(complex, t, &grid.node_position(i, j, k)) {
                        inside[idx] = true;
                    }
                }
            }
        }
    }
    inside
}

/// Signed distance to the interface over the `resolution`-cell domain grid:
/// magnitude from the interface triangles, negative at nodes inside an
/// interior-labeled cell.
pub fn refine_sdf(complex: &TetComplex, labeling: &CellLabeling, interface: &InterfaceSet, resolution: usize) -> Result<ScalarGrid> {
    if interface.is_empty() {
        return Err(Error::NoInteriorRegion);
    }
    if resolution < 8 {
        return Err(Error::InvalidParameter(format!("resolution {resolution} below 8")));
    }
    let mut grid = ScalarGrid::domain(resolution, 0.0);
    for (count, bb) in interior_components(complex, labeling) {
        let ext = bb.extent();
        if ext.max() < 2.0 * grid.spacing {
            log::warn!("interior component of {count} cells is smaller than two grid cells and may vanish");
        }
    }
    let bvh = TriangleBvh::new(&interface.mesh);
    fill_distances(&mut grid, &bvh);
    let inside = interior_nodes(&grid, complex, labeling);
    for (v, &inn) in grid.values.iter_mut().zip(&inside) {
        if inn {
            *v = -*v;
        }
    }
    Ok(grid)
}

/// Zero level set of `sdf`, normals pointing toward positive values.
pub fn extract_final_surface(sdf: &ScalarGrid) -> Result<TriangleMesh> {
    if sdf.min_value() >= 0.0 {
        return Err(Error::EmptySolid);
    }
    if !sdf.boundary_positive() {
        return Err(Error::Degenerate("signed distance field is not positive on the domain boundary".into()));
    }
    let mesh = marching_cubes(sdf, 0.0);
    if mesh.is_empty() {
        return Err(Error::EmptySolid);
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::point_triangle_distance_squared;
    use crate::mesh::validate;
    use crate::partition::{EXTERIOR, INTERIOR};
    use crate::tetra::{add_exterior_anchors, delaunay_tetrahedralize};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn random_complex(n: usize, seed: u64) -> TetComplex {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Point> = (0..n)
            .map(|_| Point::new(rng.gen_range(-0.35..0.35), rng.gen_range(-0.35..0.35), rng.gen_range(-0.35..0.35)))
            .collect();
        let (all, flags) = add_exterior_anchors(&pts, 1.2).unwrap();
        delaunay_tetrahedralize(&all, Some(&flags)).unwrap()
    }

    fn directed_edge_balance(mesh: &TriangleMesh) -> HashMap<(u32, u32), i32> {
        let mut bal: HashMap<(u32, u32), i32> = HashMap::new();
        for f in &mesh.faces {
            for i in 0..3 {
                let (a, b) = (f[i], f[(i + 1) % 3]);
                *bal.entry((a.min(b), a.max(b))).or_default() += if a < b { 1 } else { -1 };
            }
        }
        bal
    }

    #[test]
    fn single_interior_cell() {
        let c = random_complex(30, 1);
        let t = (0..c.num_tets()).find(|&t| !c.touches_anchor(t)).unwrap();
        let mut l = CellLabeling::uniform(c.num_tets(), EXTERIOR);
        l.labels[t] = INTERIOR;
        let s = extract_interface(&c, &l);
        assert_eq!(s.len(), 4);
        let m = s.mesh.compacted();
        assert!(validate(&m).is_watertight());
        assert!((m.signed_volume() - c.tet_volume(t)).abs() < 1e-15);
    }

    #[test]
    fn all_exterior_is_empty() {
        let c = random_complex(20, 2);
        let l = CellLabeling::uniform(c.num_tets(), EXTERIOR);
        let s = extract_interface(&c, &l);
        assert!(s.is_empty());
        assert!(matches!(refine_sdf(&c, &l, &s, 16), Err(Error::NoInteriorRegion)));
    }

    #[test]
    fn random_labelings_give_closed_oriented_interfaces() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..20 {
            let c = random_complex(60, 10 + seed);
            let p = rng.gen_range(0.1..0.9);
            let l = CellLabeling {
                labels: (0..c.num_tets()).map(|_| if rng.gen_bool(p) { INTERIOR } else { EXTERIOR }).collect(),
            };
            let s = extract_interface(&c, &l);
            // Every edge is traversed equally often in both directions.
            assert!(directed_edge_balance(&s.mesh).values().all(|&b| b == 0));
            // Divergence theorem: enclosed volume equals interior cell volume.
            let vol: f64 = (0..c.num_tets()).filter(|&t| l.is_interior(t)).map(|t| c.tet_volume(t)).sum();
            assert!((s.mesh.signed_volume() - vol).abs() <= 1e-12 * vol.max(1e-3));
            // Each face is an opposite-label face or a hull face of an interior cell.
            for f in &s.mesh.faces {
                match c.face(*f).unwrap() {
                    crate::tetra::FaceRef::Interior(k) => {
                        let [a, b] = c.interior_faces[k].cells;
                        assert_ne!(l.labels[a as usize], l.labels[b as usize]);
                    }
                    crate::tetra::FaceRef::Hull(k) => assert!(l.is_interior(c.hull_faces[k].cell as usize)),
                }
            }
        }
    }

    #[test]
    fn sdf_matches_dual_oracle() {
        let c = random_complex(80, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let l = CellLabeling {
            labels: (0..c.num_tets())
                .map(|t| if !c.touches_anchor(t) && rng.gen_bool(0.6) { INTERIOR } else { EXTERIOR })
                .collect(),
        };
        let s = extract_interface(&c, &l);
        let sdf = refine_sdf(&c, &l, &s, 32).unwrap();
        let n = sdf.dims[0];
        for _ in 0..100 {
            let (i, j, k) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
            let p = sdf.node_position(i, j, k);
            let v = sdf.get(i, j, k);
            let brute = s
                .mesh
                .faces
                .iter()
                .map(|f| {
                    let [a, b, cc] = f.map(|x| &s.mesh.vertices[x as usize]);
                    point_triangle_distance_squared(&p, a, b, cc)
                })
                .fold(f64::INFINITY, f64::min)
                .sqrt();
            assert!((v.abs() - brute).abs() <= 1e-7);
            // Barycentric containment over every cell.
            let in_interior = (0..c.num_tets()).any(|t| {
                if !l.is_interior(t) {
                    return false;
                }
                let [a, b, cc, d] = c.tet_points(t);
                let m = nalgebra::Matrix3::from_columns(&[b - a, cc - a, d - a]);
                let w = m.try_inverse().unwrap() * (p - a);
                let tol = -1e-12;
                w.x >= tol && w.y >= tol && w.z >= tol && 1.0 - w.sum() >= tol
            });
            if brute > 1e-9 {
                assert_eq!(v < 0.0, in_interior, "node {i} {j} {k}");
            }
        }
    }

    #[test]
    fn nodes_outside_the_hull_are_positive() {
        let c = random_complex(40, 6);
        let l = CellLabeling {
            labels: (0..c.num_tets()).map(|t| if c.touches_anchor(t) { EXTERIOR } else { INTERIOR }).collect(),
        };
        let s = extract_interface(&c, &l);
        let sdf = refine_sdf(&c, &l, &s, 16).unwrap();
        // Anchor box spans about 0.84; the domain corner is well outside it.
        assert!(sdf.get(0, 0, 0) > 0.0);
        assert!(sdf.boundary_positive());
    }

    #[test]
    fn final_surface_is_watertight() {
        let c = random_complex(200, 7);
        // Interior: cells whose centroid lies in a ball.
        let l = CellLabeling {
            labels: (0..c.num_tets())
                .map(|t| {
                    let m = crate::tetra::cell_centroid(&c, t);
                    if !c.touches_anchor(t) && m.coords.norm() < 0.25 {
                        INTERIOR
                    } else {
                        EXTERIOR
                    }
                })
                .collect(),
        };
        let s = extract_interface(&c, &l);
        let sdf = refine_sdf(&c, &l, &s, 48).unwrap();
        let m = extract_final_surface(&sdf).unwrap();
        let r = validate(&m);
        assert!(r.is_watertight(), "{r}");
        let vol: f64 = (0..c.num_tets()).filter(|&t| l.is_interior(t)).map(|t| c.tet_volume(t)).sum();
        assert!((m.signed_volume() - vol).abs() < 0.1 * vol);
        assert!(r.connected_components >= 1);
    }

    #[test]
    fn positive_field_is_empty_solid() {
        let g = ScalarGrid::domain(8, 1.0);
        assert!(matches!(extract_final_surface(&g), Err(Error::EmptySolid)));
    }
}
