//! Binary interior/exterior labeling of tetrahedral cells by an exact s-t
//! minimum cut.
//!
//! Cells supported by the thickened proxy (negative field at the centroid)
//! are pinned to the interior; cells touching an exterior anchor corner are
//! pinned to the exterior. A face costs its area when the initial labels
//! already differ across it and `lambda_fill` times its area otherwise.

mod maxflow;

pub use maxflow::MaxFlow;

use crate::error::{Error, Result};
use crate::field::{sample_trilinear, ScalarGrid};
use crate::tetra::{cell_centroid, TetComplex};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

pub const INTERIOR: u8 = 0;
pub const EXTERIOR: u8 = 1;

pub const LAMBDA_MIN: f64 = 1.0;
pub const LAMBDA_MAX: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellLabeling {
    pub labels: Vec<u8>,
}

impl CellLabeling {
    pub fn uniform(n: usize, label: u8) -> Self {
        Self { labels: vec![label; n] }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn is_interior(&self, t: usize) -> bool {
        self.labels[t] == INTERIOR
    }

    pub fn interior_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == INTERIOR).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutGraph {
    pub source: Vec<bool>,
    pub sink: Vec<bool>,
    /// One undirected edge per interior face, in face order.
    pub edges: Vec<(u32, u32, f64)>,
    /// Stands in for an infinite terminal capacity.
    pub infinity: f64,
}

impl CutGraph {
    pub fn num_nodes(&self) -> usize {
        self.source.len()
    }

    /// Checks anchor disjointness and capacity sanity and sets the sentinel.
    pub fn new(source: Vec<bool>, sink: Vec<bool>, edges: Vec<(u32, u32, f64)>) -> Result<Self> {
        if source.len() != sink.len() {
            return Err(Error::InvalidParameter("anchor set sizes differ".into()));
        }
        let overlap = source.iter().zip(&sink).filter(|(s, t)| **s && **t).count();
        if overlap > 0 {
            return Err(Error::AnchorOverlap(overlap));
        }
        let n = source.len() as u32;
        if let Some(e) = edges.iter().find(|e| !(e.2 > 0.0 && e.2.is_finite()) || e.0 >= n || e.1 >= n) {
            return Err(Error::InvalidParameter(format!("bad pairwise edge {e:?}")));
        }
        let infinity = edges.iter().map(|e| e.2).sum::<f64>() + 1.0;
        Ok(Self {
            source,
            sink,
            edges,
            infinity,
        })
    }

    /// Sum of capacities of edges whose endpoints end up with different
    /// labels; `None` if an anchored node violates its anchor.
    pub fn cut_value(&self, labeling: &CellLabeling) -> Option<f64> {
        for v in 0..self.num_nodes() {
            let l = labeling.labels[v];
            if (self.source[v] && l != INTERIOR) || (self.sink[v] && l != EXTERIOR) {
                return None;
            }
        }
        Some(
            self.edges
                .iter()
                .filter(|e| labeling.labels[e.0 as usize] != labeling.labels[e.1 as usize])
                .map(|e| e.2)
                .sum(),
        )
    }
}

/// Label 0 where the field at the cell centroid is negative, 1 otherwise.
/// Anchor-incident cells are forced to 1 with a warning.
pub fn initial_labels(complex: &TetComplex, phi: &ScalarGrid) -> Result<CellLabeling> {
    let mut labels: Vec<u8> = (0..complex.num_tets())
        .into_par_iter()
        .map(|t| {
            if sample_trilinear(phi, &cell_centroid(complex, t)) < 0.0 {
                INTERIOR
            } else {
                EXTERIOR
            }
        })
        .collect();
    let mut forced = 0;
    for (t, l) in labels.iter_mut().enumerate() {
        if *l == INTERIOR && complex.touches_anchor(t) {
            *l = EXTERIOR;
            forced += 1;
        }
    }
    if forced > 0 {
        log::warn!("interior support reaches exterior anchor: {forced} cells forced to exterior");
    }
    Ok(CellLabeling { labels })
}

fn check_lambda(lambda_fill: f64) -> Result<()> {
    if !(LAMBDA_MIN..=LAMBDA_MAX).contains(&lambda_fill) {
        return Err(Error::InvalidParameter(format!(
            "lambda_fill {lambda_fill} outside [{LAMBDA_MIN}, {LAMBDA_MAX}]"
        )));
    }
    Ok(())
}

fn pairwise_edges(complex: &TetComplex, initial: &CellLabeling, lambda_fill: f64) -> Vec<(u32, u32, f64)> {
    complex
        .interior_faces
        .par_iter()
        .map(|f| {
            let [a, b, c] = f.key.map(|v| &complex.points[v as usize]);
            let area = crate::geom::triangle_area(a, b, c);
            let [ci, cj] = f.cells;
            let w = if initial.labels[ci as usize] != initial.labels[cj as usize] {
                1.0
            } else {
                lambda_fill
            };
            (ci, cj, w * area)
        })
        .collect()
}

fn check_consistent(complex: &TetComplex, labeling: &CellLabeling) -> Result<()> {
    if labeling.len() != complex.num_tets() {
        return Err(Error::InvalidParameter(format!(
            "labeling has {} cells, complex has {}",
            labeling.len(),
            complex.num_tets()
        )));
    }
    Ok(())
}

/// Source anchors are the initially interior cells, sink anchors the cells
/// touching an anchor corner.
pub fn build_cut_graph(complex: &TetComplex, initial: &CellLabeling, lambda_fill: f64) -> Result<CutGraph> {
    check_lambda(lambda_fill)?;
    check_consistent(complex, initial)?;
    let source = initial.labels.iter().map(|&l| l == INTERIOR).collect();
    let sink = (0..complex.num_tets()).map(|t| complex.touches_anchor(t)).collect();
    CutGraph::new(source, sink, pairwise_edges(complex, initial, lambda_fill))
}

/// Same pairwise terms as [`build_cut_graph`] but with no interior anchors.
pub fn build_cut_graph_without_unary(complex: &TetComplex, initial: &CellLabeling, lambda_fill: f64) -> Result<CutGraph> {
    check_lambda(lambda_fill)?;
    check_consistent(complex, initial)?;
    let source = vec![false; complex.num_tets()];
    let sink = (0..complex.num_tets()).map(|t| complex.touches_anchor(t)).collect();
    CutGraph::new(source, sink, pairwise_edges(complex, initial, lambda_fill))
}

/// Exact minimum cut. Source side is interior (0).
pub fn solve_max_flow(graph: &CutGraph) -> Result<CellLabeling> {
    let n = graph.num_nodes();
    let mut mf = MaxFlow::new(n);
    for v in 0..n {
        if graph.source[v] {
            mf.add_terminal(v as u32, graph.infinity, 0.0);
        } else if graph.sink[v] {
            mf.add_terminal(v as u32, 0.0, graph.infinity);
        }
    }
    for &(u, v, c) in &graph.edges {
        mf.add_edge(u, v, c);
    }
    let flow = mf.solve();
    if flow >= graph.infinity {
        return Err(Error::Infeasible);
    }
    let labels: Vec<u8> = (0..n as u32)
        .map(|v| if mf.on_source_side(v) { INTERIOR } else { EXTERIOR })
        .collect();
    let violations = (0..n)
        .filter(|&v| (graph.source[v] && labels[v] != INTERIOR) || (graph.sink[v] && labels[v] != EXTERIOR))
        .count();
    if violations > 0 {
        return Err(Error::Infeasible);
    }
    Ok(CellLabeling { labels })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionEnergy {
    pub supported_interface_area: f64,
    pub unsupported_interface_area: f64,
    pub total_energy: f64,
    /// False when the labeling violates an anchor; the total is then
    /// infinite and the areas are still reported.
    pub feasible: bool,
}

/// Whether `labeling` keeps every initially interior cell interior and every
/// anchor-incident cell exterior.
pub fn is_feasible(complex: &TetComplex, initial: &CellLabeling, labeling: &CellLabeling) -> bool {
    (0..complex.num_tets()).all(|t| {
        !(initial.labels[t] == INTERIOR && labeling.labels[t] != INTERIOR)
            && !(complex.touches_anchor(t) && labeling.labels[t] != EXTERIOR)
    })
}

pub fn energy_of(complex: &TetComplex, initial: &CellLabeling, labeling: &CellLabeling, lambda_fill: f64) -> PartitionEnergy {
    let mut supported = 0.0;
    let mut unsupported = 0.0;
    for f in &complex.interior_faces {
        let [ci, cj] = f.cells.map(|c| c as usize);
        if labeling.labels[ci] == labeling.labels[cj] {
            continue;
        }
        let [a, b, c] = f.key.map(|v| &complex.points[v as usize]);
        let area = crate::geom::triangle_area(a, b, c);
        if initial.labels[ci] != initial.labels[cj] {
            supported += area;
        } else {
            unsupported += area;
        }
    }
    let feasible = is_feasible(complex, initial, labeling);
    PartitionEnergy {
        supported_interface_area: supported,
        unsupported_interface_area: unsupported,
        total_energy: if feasible { supported + lambda_fill * unsupported } else { f64::INFINITY },
        feasible,
    }
}

pub const BRUTE_FORCE_MAX_FREE: usize = 22;

/// Exhaustive minimum over all feasible labelings. Ties go to the
/// lexicographically smallest label vector.
pub fn brute_force_optimum(complex: &TetComplex, initial: &CellLabeling, lambda_fill: f64) -> Result<(CellLabeling, PartitionEnergy)> {
    check_consistent(complex, initial)?;
    let n = complex.num_tets();
    let mut base = CellLabeling::uniform(n, EXTERIOR);
    let mut free = Vec::new();
    for t in 0..n {
        let anchor = complex.touches_anchor(t);
        if initial.labels[t] == INTERIOR {
            if anchor {
                return Err(Error::AnchorOverlap(1));
            }
            base.labels[t] = INTERIOR;
        } else if !anchor {
            free.push(t);
        }
    }
    if free.len() > BRUTE_FORCE_MAX_FREE {
        return Err(Error::TooManyFreeCells(free.len()));
    }
    // Only faces touching a free cell change with the mask.
    let mut slot = vec![usize::MAX; n];
    for (k, &t) in free.iter().enumerate() {
        slot[t] = k;
    }
    let weight = |ci: usize, cj: usize, area: f64| {
        if initial.labels[ci] != initial.labels[cj] {
            area
        } else {
            lambda_fill * area
        }
    };
    let mut fixed_cost = 0.0;
    let mut varying: Vec<(usize, usize, f64)> = Vec::new();
    for f in &complex.interior_faces {
        let [ci, cj] = f.cells.map(|c| c as usize);
        let [a, b, c] = f.key.map(|v| &complex.points[v as usize]);
        let w = weight(ci, cj, crate::geom::triangle_area(a, b, c));
        if slot[ci] == usize::MAX && slot[cj] == usize::MAX {
            if base.labels[ci] != base.labels[cj] {
                fixed_cost += w;
            }
        } else {
            varying.push((ci, cj, w));
        }
    }
    let m = free.len();
    let label_of = |mask: u32, t: usize, base: &CellLabeling| -> u8 {
        match slot[t] {
            // The first free cell is the most significant bit, so masks
            // ascend in lexicographic label order.
            usize::MAX => base.labels[t],
            k => ((mask >> (m - 1 - k)) & 1) as u8,
        }
    };
    let mut best = (f64::INFINITY, 0u32);
    for mask in 0u32..(1u32 << m) {
        let mut e = fixed_cost;
        for &(ci, cj, w) in &varying {
            if label_of(mask, ci, &base) != label_of(mask, cj, &base) {
                e += w;
            }
        }
        if e < best.0 {
            best = (e, mask);
        }
    }
    let mut labeling = base.clone();
    for &t in &free {
        labeling.labels[t] = label_of(best.1, t, &base);
    }
    let energy = energy_of(complex, initial, &labeling, lambda_fill);
    Ok((labeling, energy))
}

/// Per-face cut membership and the energy decomposition as key=value text.
pub fn write_cut_dump(
    w: &mut impl Write,
    complex: &TetComplex,
    initial: &CellLabeling,
    labeling: &CellLabeling,
    lambda_fill: f64,
) -> std::io::Result<()> {
    let e = energy_of(complex, initial, labeling, lambda_fill);
    writeln!(w, "lambda_fill={lambda_fill}")?;
    writeln!(w, "supported_interface_area={:e}", e.supported_interface_area)?;
    writeln!(w, "unsupported_interface_area={:e}", e.unsupported_interface_area)?;
    writeln!(w, "total_energy={:e}", e.total_energy)?;
    writeln!(w, "feasible={}", e.feasible)?;
    writeln!(w, "# face a b c cell_i cell_j initial_i initial_j final_i final_j cut")?;
    for (k, f) in complex.interior_faces.iter().enumerate() {
        let [ci, cj] = f.cells.map(|c| c as usize);
        writeln!(
            w,
            "face {k} {} {} {} {ci} {cj} {} {} {} {} {}",
            f.key[0],
            f.key[1],
            f.key[2],
            initial.labels[ci],
            initial.labels[cj],
            labeling.labels[ci],
            labeling.labels[cj],
            u8::from(labeling.labels[ci] != labeling.labels[cj])
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use crate::tetra::{add_exterior_anchors, delaunay_tetrahedralize};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Random points in a small ball with corner anchors and random initial
    /// labels, redrawn until at most `max_free` cells are free.
    fn random_problem(seed: u64, max_free: usize) -> (TetComplex, CellLabeling) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let n = rng.gen_range(4..10);
            let pts: Vec<Point> = (0..n)
                .map(|_| Point::new(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)))
                .collect();
            let (all, flags) = add_exterior_anchors(&pts, 1.5).unwrap();
            let c = delaunay_tetrahedralize(&all, Some(&flags)).unwrap();
            let p_in = rng.gen_range(0.1..0.7);
            let labels: Vec<u8> = (0..c.num_tets())
                .map(|t| if !c.touches_anchor(t) && rng.gen_bool(p_in) { INTERIOR } else { EXTERIOR })
                .collect();
            let free = (0..c.num_tets()).filter(|&t| labels[t] == EXTERIOR && !c.touches_anchor(t)).count();
            if free <= max_free {
                return (c, CellLabeling { labels });
            }
        }
    }

    fn solve(c: &TetComplex, init: &CellLabeling, lambda: f64) -> CellLabeling {
        solve_max_flow(&build_cut_graph(c, init, lambda).unwrap()).unwrap()
    }

    fn lattice_complex() -> TetComplex {
        let mut pts = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    pts.push(Point::new(i as f64 * 0.2 - 0.3, j as f64 * 0.2 - 0.3, k as f64 * 0.2 - 0.3));
                }
            }
        }
        let (all, flags) = add_exterior_anchors(&pts, 1.2).unwrap();
        delaunay_tetrahedralize(&all, Some(&flags)).unwrap()
    }

    #[test]
    fn constant_field_labels() {
        let c = lattice_complex();
        let inside = initial_labels(&c, &ScalarGrid::domain(16, -0.001)).unwrap();
        for t in 0..c.num_tets() {
            let want = if c.touches_anchor(t) { EXTERIOR } else { INTERIOR };
            assert_eq!(inside.labels[t], want);
        }
        assert!(inside.interior_count() > 0);
        let zero = initial_labels(&c, &ScalarGrid::domain(16, 0.0)).unwrap();
        assert_eq!(zero.interior_count(), 0);
    }

    #[test]
    fn sphere_labels_follow_the_shell() {
        use crate::field::{compute_udf, thicken};
        use crate::geom::point_triangle_distance_squared;
        use crate::isosurface::marching_cubes;
        use crate::mesh::primitives;

        let sphere = primitives::icosphere(0.3, 3);
        let res = 32;
        let udf = compute_udf(&sphere, res).unwrap();
        let h = udf.spacing;
        let eps = 2.0 * h;
        let phi = thicken(&udf, eps).unwrap();
        let proxy = marching_cubes(&phi, 0.0);
        let (all, flags) = add_exterior_anchors(&proxy.vertices, 1.2).unwrap();
        let c = delaunay_tetrahedralize(&all, Some(&flags)).unwrap();
        let labels = initial_labels(&c, &phi).unwrap();
        // Trilinear interpolation of a 1-Lipschitz field is within the
        // distance to the farthest cell corner of the exact value.
        let margin = 3f64.sqrt() * h;
        let (mut inner, mut outer) = (0, 0);
        for t in 0..c.num_tets() {
            let p = cell_centroid(&c, t);
            let d = (0..sphere.num_faces())
                .map(|f| {
                    let [a, b, cc] = sphere.triangle(f);
                    point_triangle_distance_squared(&p, a, b, cc)
                })
                .fold(f64::INFINITY, f64::min)
                .sqrt();
            if c.touches_anchor(t) {
                assert_eq!(labels.labels[t], EXTERIOR);
            } else if d < eps - margin {
                assert_eq!(labels.labels[t], INTERIOR, "cell {t} at distance {d}");
                inner += 1;
            } else if d > eps + margin {
                assert_eq!(labels.labels[t], EXTERIOR, "cell {t} at distance {d}");
                outer += 1;
            }
        }
        assert!(inner > 0 && outer > 0, "{inner} {outer}");
        assert!(labels.interior_count() > 0);
    }

    #[test]
    fn chain_example() {
        let g = CutGraph::new(
            vec![true, false, false],
            vec![false, false, true],
            vec![(0, 1, 20.0 * 1.0), (1, 2, 20.0 * 0.1)],
        )
        .unwrap();
        assert_eq!(g.infinity, 23.0);
        let l = solve_max_flow(&g).unwrap();
        assert_eq!(l.labels, vec![0, 0, 1]);
        assert_eq!(g.cut_value(&l), Some(2.0));
        assert_eq!(g.cut_value(&CellLabeling { labels: vec![0, 1, 1] }), Some(20.0));
    }

    #[test]
    fn anchor_free_all_source() {
        let g = CutGraph::new(vec![true; 3], vec![false; 3], vec![(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let l = solve_max_flow(&g).unwrap();
        assert_eq!(l.labels, vec![0; 3]);
        assert_eq!(g.cut_value(&l), Some(0.0));
    }

    #[test]
    fn graph_validation() {
        assert!(matches!(CutGraph::new(vec![true], vec![true], vec![]), Err(Error::AnchorOverlap(1))));
        assert!(CutGraph::new(vec![false; 2], vec![false; 2], vec![(0, 1, 0.0)]).is_err());
        assert!(CutGraph::new(vec![false; 2], vec![false; 2], vec![(0, 1, f64::INFINITY)]).is_err());
        let (c, init) = random_problem(1, 18);
        assert!(build_cut_graph(&c, &init, 0.5).is_err());
        assert!(build_cut_graph(&c, &init, 1001.0).is_err());
    }

    #[test]
    fn capacities_follow_initial_labels() {
        let (c, init) = random_problem(2, 18);
        let g = build_cut_graph(&c, &init, 20.0).unwrap();
        assert_eq!(g.edges.len(), c.interior_faces.len());
        let mut sum = 0.0;
        for (e, f) in g.edges.iter().zip(&c.interior_faces) {
            let area = crate::tetra::face_area(&c, f.key).unwrap();
            let differ = init.labels[e.0 as usize] != init.labels[e.1 as usize];
            let expect = if differ { area } else { 20.0 * area };
            assert_eq!(e.2, expect);
            sum += e.2;
        }
        assert_eq!(g.infinity, sum + 1.0);
        for t in 0..c.num_tets() {
            assert_eq!(g.source[t], init.labels[t] == INTERIOR);
            assert_eq!(g.sink[t], c.touches_anchor(t));
        }
    }

    #[test]
    fn energy_decomposition() {
        let (c, init) = random_problem(3, 18);
        let e = energy_of(&c, &init, &init, 20.0);
        assert!(e.feasible);
        assert_eq!(e.unsupported_interface_area, 0.0);
        let direct: f64 = c
            .interior_faces
            .iter()
            .filter(|f| init.labels[f.cells[0] as usize] != init.labels[f.cells[1] as usize])
            .map(|f| crate::tetra::face_area(&c, f.key).unwrap())
            .sum();
        assert!((e.supported_interface_area - direct).abs() <= 1e-12);

        let all_ext = CellLabeling::uniform(c.num_tets(), EXTERIOR);
        let none = CellLabeling::uniform(c.num_tets(), EXTERIOR);
        let e = energy_of(&c, &none, &all_ext, 20.0);
        assert_eq!(e.total_energy, 0.0);

        // Infeasible labeling: an interior cell flipped.
        if let Some(t) = init.labels.iter().position(|&l| l == INTERIOR) {
            let mut bad = init.clone();
            bad.labels[t] = EXTERIOR;
            let e = energy_of(&c, &init, &bad, 20.0);
            assert!(!e.feasible && e.total_energy.is_infinite());
        }
    }

    #[test]
    fn random_feasible_energy_matches_face_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for seed in 0..10 {
            let (c, init) = random_problem(100 + seed, 18);
            let mut l = init.clone();
            for t in 0..c.num_tets() {
                if init.labels[t] == EXTERIOR && !c.touches_anchor(t) {
                    l.labels[t] = rng.gen_range(0..2);
                }
            }
            let lambda = rng.gen_range(1.0..500.0);
            let e = energy_of(&c, &init, &l, lambda);
            let mut total = 0.0;
            for f in &c.interior_faces {
                let (i, j) = (f.cells[0] as usize, f.cells[1] as usize);
                if l.labels[i] != l.labels[j] {
                    let [a, b, cc] = f.key.map(|v| c.points[v as usize]);
                    let area = 0.5 * (b - a).cross(&(cc - a)).norm();
                    total += if init.labels[i] != init.labels[j] { area } else { lambda * area };
                }
            }
            assert!((e.total_energy - total).abs() <= 1e-12 * total.max(1.0));
        }
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..50 {
            let (c, init) = random_problem(1000 + seed, 18);
            let lambda = rng.gen_range(1.0..500.0);
            let got = solve(&c, &init, lambda);
            let e = energy_of(&c, &init, &got, lambda);
            let (_, best) = brute_force_optimum(&c, &init, lambda).unwrap();
            assert!(e.feasible);
            assert!(
                (e.total_energy - best.total_energy).abs() <= 1e-12 * best.total_energy.max(1e-300),
                "seed {seed}: {} vs {}",
                e.total_energy,
                best.total_energy
            );
        }
    }

    #[test]
    fn brute_force_trivial_cases() {
        let (c, _) = random_problem(7, 18);
        // Every non-anchor cell interior: nothing free.
        let init = CellLabeling {
            labels: (0..c.num_tets()).map(|t| if c.touches_anchor(t) { EXTERIOR } else { INTERIOR }).collect(),
        };
        let (l, _) = brute_force_optimum(&c, &init, 20.0).unwrap();
        assert_eq!(l, init);
        let mut big = c.clone();
        big.anchor_flags = vec![false; big.anchor_flags.len()];
        let none = CellLabeling::uniform(big.num_tets(), EXTERIOR);
        if big.num_tets() > BRUTE_FORCE_MAX_FREE {
            assert!(matches!(brute_force_optimum(&big, &none, 20.0), Err(Error::TooManyFreeCells(_))));
        }
    }

    #[test]
    fn empty_source_gives_all_exterior() {
        let (c, init) = random_problem(8, 18);
        let g = build_cut_graph_without_unary(&c, &init, 20.0).unwrap();
        let l = solve_max_flow(&g).unwrap();
        assert_eq!(l.interior_count(), 0);
        assert_eq!(g.cut_value(&l), Some(0.0));
    }

    #[test]
    fn dump_lists_every_face() {
        let (c, init) = random_problem(9, 18);
        let l = solve(&c, &init, 20.0);
        let mut buf = Vec::new();
        write_cut_dump(&mut buf, &c, &init, &l, 20.0).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("face ")).count(), c.interior_faces.len());
        assert!(text.contains("feasible=true"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn solutions_are_feasible(seed in 0u64..10_000, lambda in 1.0f64..1000.0) {
            let (c, init) = random_problem(seed, 60);
            let l = solve(&c, &init, lambda);
            prop_assert!(is_feasible(&c, &init, &l));
        }

        #[test]
        fn unsupported_area_non_increasing_in_lambda(seed in 0u64..10_000) {
            let (c, init) = random_problem(seed, 60);
            let mut prev = f64::INFINITY;
            for lambda in [3.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0] {
                let l = solve(&c, &init, lambda);
                let u = energy_of(&c, &init, &l, lambda).unsupported_interface_area;
                prop_assert!(u <= prev * (1.0 + 1e-9) + 1e-15, "lambda {}: {} > {}", lambda, u, prev);
                prev = u;
            }
        }

        #[test]
        fn scaling_areas_scales_energy(seed in 0u64..10_000, s in 0.01f64..100.0) {
            let (c, init) = random_problem(seed, 18);
            let g = build_cut_graph(&c, &init, 20.0).unwrap();
            let scaled = CutGraph::new(
                g.source.clone(),
                g.sink.clone(),
                g.edges.iter().map(|&(u, v, w)| (u, v, w * s)).collect(),
            ).unwrap();
            let a = solve_max_flow(&g).unwrap();
            let b = solve_max_flow(&scaled).unwrap();
            let (ea, eb) = (g.cut_value(&a).unwrap(), scaled.cut_value(&b).unwrap());
            prop_assert!((eb - s * ea).abs() <= 1e-9 * eb.max(1e-300));
            // The optimum of one is optimal for the other.
            let cross = scaled.cut_value(&a).unwrap();
            prop_assert!((cross - eb).abs() <= 1e-9 * eb.max(1e-300));
        }
    }
}
