//! Surface sampling, point-cloud distance metrics and virtual-scan ground
//! truth.

use crate::bvh::TriangleBvh;
use crate::error::{Error, Result};
use crate::geom::{Point, Vec3};
use crate::mesh::{NormalizationTransform, TriangleMesh};
use kiddo::{ImmutableKdTree, SquaredEuclidean};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub const DEFAULT_TAU: f64 = 0.01;
pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_VIEWS: usize = 162;
pub const DEFAULT_RAYS_PER_VIEW: usize = 256 * 256;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampledCloud {
    pub points: Vec<Point>,
    pub normals: Vec<Vec3>,
    pub source_seed: u64,
}

impl SampledCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn transformed(&self, f: impl Fn(&Point) -> Point, g: impl Fn(&Vec3) -> Vec3) -> SampledCloud {
        SampledCloud {
            points: self.points.iter().map(f).collect(),
            normals: self.normals.iter().map(g).collect(),
            source_seed: self.source_seed,
        }
    }

    pub fn to_mesh_points(&self) -> TriangleMesh {
        TriangleMesh {
            vertices: self.points.clone(),
            faces: Vec::new(),
        }
    }
}

/// Area-weighted uniform samples with the face normal at each point.
pub fn sample_surface(mesh: &TriangleMesh, count: usize, seed: u64) -> Result<SampledCloud> {
    let mut cumulative = Vec::with_capacity(mesh.num_faces());
    let mut total = 0.0;
    for f in 0..mesh.num_faces() {
        total += mesh.face_area(f);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::Degenerate("mesh has zero area".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    let mut normals = Vec::with_capacity(count);
    for _ in 0..count {
        let r = rng.gen::<f64>() * total;
        let f = cumulative.partition_point(|&c| c <= r).min(cumulative.len() - 1);
        let [a, b, c] = mesh.triangle(f);
        let (u, v): (f64, f64) = (rng.gen(), rng.gen());
        let su = u.sqrt();
        let (wa, wb, wc) = (1.0 - su, su * (1.0 - v), su * v);
        points.push(Point::from(a.coords * wa + b.coords * wb + c.coords * wc));
        normals.push(mesh.face_normal(f));
    }
    Ok(SampledCloud {
        points,
        normals,
        source_seed: seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoMetrics {
    pub chamfer: f64,
    pub hausdorff: f64,
    pub anc: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

impl GeoMetrics {
    pub fn to_key_value(&self) -> String {
        format!(
            "chamfer={:e}\nhausdorff={:e}\nanc={}\nf1={}\nprecision={}\nrecall={}\n",
            self.chamfer, self.hausdorff, self.anc, self.f1, self.precision, self.recall
        )
    }
}

type Tree = ImmutableKdTree<f64, 3>;

fn tree_of(cloud: &SampledCloud) -> Result<Tree> {
    let pts: Vec<[f64; 3]> = cloud.points.iter().map(|p| [p.x, p.y, p.z]).collect();
    Tree::new_from_slice(&pts).map_err(|e| Error::InvalidParameter(format!("point index: {e:?}")))
}

/// Squared distance to and index of the nearest point of the tree's cloud,
/// for every point of `from`.
fn nearest_all(from: &SampledCloud, tree: &Tree) -> Vec<(f64, usize)> {
    from.points
        .par_iter()
        .map(|p| {
            let nn = tree.query(&[p.x, p.y, p.z]).nearest_one::<SquaredEuclidean<f64>>().execute();
            (nn.distance, nn.item as usize)
        })
        .collect()
}

struct Directed {
    mean_sq: f64,
    max: f64,
    normal_dot: f64,
    within: f64,
}

fn directed(from: &SampledCloud, to: &SampledCloud, matches: &[(f64, usize)], tau: f64) -> Directed {
    let n = matches.len() as f64;
    let mut sum_sq = 0.0;
    let mut max_sq: f64 = 0.0;
    let mut dots = 0.0;
    let mut within = 0usize;
    for (i, &(d2, j)) in matches.iter().enumerate() {
        sum_sq += d2;
        max_sq = max_sq.max(d2);
        dots += from.normals[i].dot(&to.normals[j]).abs().min(1.0);
        if d2.sqrt() <= tau {
            within += 1;
        }
    }
    Directed {
        mean_sq: sum_sq / n,
        max: max_sq.sqrt(),
        normal_dot: dots / n,
        within: within as f64 / n,
    }
}

/// Assembles metrics from nearest matches in both directions.
fn combine(pred: &SampledCloud, gt: &SampledCloud, p2g: &[(f64, usize)], g2p: &[(f64, usize)], tau: f64) -> GeoMetrics {
    let a = directed(pred, gt, p2g, tau);
    let b = directed(gt, pred, g2p, tau);
    let (precision, recall) = (a.within, b.within);
    let f1 = if precision + recall > 0.0 {
        200.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    GeoMetrics {
        chamfer: 0.5 * (a.mean_sq + b.mean_sq),
        hausdorff: a.max.max(b.max),
        anc: 0.5 * (a.normal_dot + b.normal_dot),
        f1,
        precision: 100.0 * precision,
        recall: 100.0 * recall,
    }
}

/// Chamfer (mean squared nearest distance, averaged over both directions),
/// Hausdorff, absolute normal consistency and F1 at `tau` (percent).
pub fn geo_metrics(pred: &SampledCloud, gt: &SampledCloud, tau: f64) -> Result<GeoMetrics> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::InvalidParameter("empty point cloud".into()));
    }
    let p2g = nearest_all(pred, &tree_of(gt)?);
    let g2p = nearest_all(gt, &tree_of(pred)?);
    Ok(combine(pred, gt, &p2g, &g2p, tau))
}

/// Exhaustive O(n m) version of [`geo_metrics`].
pub fn geo_metrics_brute_force(pred: &SampledCloud, gt: &SampledCloud, tau: f64) -> Result<GeoMetrics> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::InvalidParameter("empty point cloud".into()));
    }
    let nn = |from: &SampledCloud, to: &SampledCloud| -> Vec<(f64, usize)> {
        from.points
            .iter()
            .map(|p| {
                let mut best = (f64::INFINITY, 0);
                for (j, q) in to.points.iter().enumerate() {
                    let d = p - q;
                    // Same expression order as the tree's distance metric.
                    let d2 = d.x * d.x + d.y * d.y + d.z * d.z;
                    if d2 < best.0 {
                        best = (d2, j);
                    }
                }
                best
            })
            .collect()
    };
    Ok(combine(pred, gt, &nn(pred, gt), &nn(gt, pred), tau))
}

/// Uniform scale and translation mapping `mesh`'s bounding box to a cube of
/// unit longest side centered at the origin. Metrics are reported in this
/// frame.
pub fn unit_frame(mesh: &TriangleMesh) -> Result<NormalizationTransform> {
    if mesh.vertices.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let bb = mesh.bounding_box();
    let longest = bb.extent().max();
    if !(longest > 0.0) {
        return Err(Error::Degenerate("zero-extent bounding box".into()));
    }
    let c = bb.center();
    Ok(NormalizationTransform {
        scale: longest,
        translation: [c.x, c.y, c.z],
    })
}

/// Fibonacci-spiral unit directions.
pub fn fibonacci_directions(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            Vec3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ScanHit {
    pub point: Point,
    pub normal: Vec3,
    #[cfg_attr(not(test), allow(dead_code))]
    pub origin: Point,
}

/// First hits of orthographic ray grids cast toward the center from each
/// viewpoint. Returns the hits and the ray-grid cell size.
pub(crate) fn scan_hits(mesh: &TriangleMesh, views: usize, rays_per_view: usize) -> (Vec<ScanHit>, f64) {
    let bvh = TriangleBvh::new(mesh);
    let bb = mesh.bounding_box();
    let center = bb.center();
    let radius = 0.5 * bb.extent().norm() * 1.05 + 1e-12;
    let side = ((rays_per_view as f64).sqrt().round() as usize).max(1);
    let cell = 2.0 * radius / side as f64;
    let hits: Vec<Vec<ScanHit>> = fibonacci_directions(views)
        .par_iter()
        .map(|d| {
            // Orthonormal frame with the view direction.
            let helper = if d.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
            let u = d.cross(&helper).normalize();
            let v = d.cross(&u);
            let eye = center + d * radius * 2.0;
            let dir = -d;
            let mut out = Vec::new();
            for r in 0..side {
                for c in 0..side {
                    let s = -radius + (c as f64 + 0.5) * cell;
                    let t = -radius + (r as f64 + 0.5) * cell;
                    let origin = eye + u * s + v * t;
                    if let Some((tt, f)) = bvh.first_hit(&origin, &dir, f64::INFINITY) {
                        out.push(ScanHit {
                            point: origin + dir * tt,
                            normal: mesh.face_normal(f),
                            origin,
                        });
                    }
                }
            }
            out
        })
        .collect();
    (hits.into_iter().flatten().collect(), cell)
}

/// Outer-surface point cloud from `views` Fibonacci viewpoints with
/// `rays_per_view` orthographic rays each. Hits closer than half a ray-grid
/// cell to an earlier kept hit are dropped.
pub fn virtual_scan_gt(mesh: &TriangleMesh, views: usize, rays_per_view: usize) -> Result<SampledCloud> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    if views == 0 || rays_per_view == 0 {
        return Err(Error::InvalidParameter("views and rays per view must be positive".into()));
    }
    let (hits, cell) = scan_hits(mesh, views, rays_per_view);
    if hits.is_empty() {
        return Err(Error::NoScanHits);
    }
    let merge = 0.5 * cell;
    let key = |p: &Point| -> [i64; 3] { [0, 1, 2].map(|k| (p[k] / merge).floor() as i64) };
    let mut buckets: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
    let mut cloud = SampledCloud::default();
    for h in &hits {
        let k = key(&h.point);
        let mut dup = false;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        if ids.iter().any(|&i| (cloud.points[i as usize] - h.point).norm() < merge) {
                            dup = true;
                            break 'search;
                        }
                    }
                }
            }
        }
        if !dup {
            buckets.entry(k).or_default().push(cloud.points.len() as u32);
            cloud.points.push(h.point);
            cloud.normals.push(h.normal);
        }
    }
    Ok(cloud)
}
