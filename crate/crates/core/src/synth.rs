//! Deterministic defective inputs: punched holes, stripe dropouts,
//! single-layer sheets, self-intersecting soups and mixtures, plus a corpus
//! manifest pairing each defective mesh with its reference.

use crate::error::{Error, Result};
use crate::geom::{triangles_intersect, Aabb, Point, Vec3};
use crate::mesh::{boundary_loop_count, primitives, validate, write_obj, TriangleMesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

const MAX_ATTEMPTS: u64 = 20;
const MAX_REMOVED_FRACTION: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectKind {
    Holes,
    StripeDropout,
    SingleLayer,
    SelfIntersect,
    Mixture,
}

impl FromStr for DefectKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "holes" => DefectKind::Holes,
            "stripe_dropout" | "stripe-dropout" => DefectKind::StripeDropout,
            "single_layer" | "single-layer" => DefectKind::SingleLayer,
            "self_intersect" | "self-intersect" => DefectKind::SelfIntersect,
            "mixture" => DefectKind::Mixture,
            other => return Err(Error::InvalidParameter(format!("unknown defect kind `{other}`"))),
        })
    }
}

impl fmt::Display for DefectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DefectKind::Holes => "holes",
            DefectKind::StripeDropout => "stripe_dropout",
            DefectKind::SingleLayer => "single_layer",
            DefectKind::SelfIntersect => "self_intersect",
            DefectKind::Mixture => "mixture",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectSpec {
    pub kind: DefectKind,
    pub hole_count: u32,
    /// In the input mesh's units.
    pub hole_radius_range: (f64, f64),
    pub seed: u64,
}

impl DefectSpec {
    pub fn new(kind: DefectKind, hole_count: u32, hole_radius_range: (f64, f64), seed: u64) -> Result<Self> {
        let s = Self {
            kind,
            hole_count,
            hole_radius_range,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=64).contains(&self.hole_count) {
            return Err(Error::InvalidParameter(format!("hole count {} outside [1, 64]", self.hole_count)));
        }
        let (lo, hi) = self.hole_radius_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad hole radius range ({lo}, {hi})")));
        }
        Ok(())
    }
}

impl fmt::Display for DefectSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "kind={};count={};rmin={};rmax={};seed={}",
            self.kind, self.hole_count, self.hole_radius_range.0, self.hole_radius_range.1, self.seed
        )
    }
}

impl FromStr for DefectSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut kind = None;
        let (mut count, mut rmin, mut rmax, mut seed) = (None, None, None, None);
        let bad = |m: String| Error::Parse {
            location: "defect spec".into(),
            message: m,
        };
        for part in s.split(';').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| bad(format!("`{part}` is not key=value")))?;
            let v = v.trim();
            let num = |v: &str| v.parse::<f64>().map_err(|_| bad(format!("bad number `{v}`")));
            match k.trim() {
                "kind" => kind = Some(v.parse()?),
                "count" => count = Some(v.parse::<u32>().map_err(|_| bad(format!("bad count `{v}`")))?),
                "rmin" => rmin = Some(num(v)?),
                "rmax" => rmax = Some(num(v)?),
                "seed" => seed = Some(v.parse::<u64>().map_err(|_| bad(format!("bad seed `{v}`")))?),
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        let missing = |k: &str| bad(format!("missing `{k}`"));
        DefectSpec::new(
            kind.ok_or_else(|| missing("kind"))?,
            count.ok_or_else(|| missing("count"))?,
            (rmin.ok_or_else(|| missing("rmin"))?, rmax.ok_or_else(|| missing("rmax"))?),
            seed.ok_or_else(|| missing("seed"))?,
        )
    }
}

fn face_centroid(mesh: &TriangleMesh, f: usize) -> Point {
    let [a, b, c] = mesh.triangle(f);
    Point::from((a.coords + b.coords + c.coords) / 3.0)
}

/// Area-weighted random face and a uniform point on it.
fn random_surface_point(mesh: &TriangleMesh, cumulative: &[f64], rng: &mut ChaCha8Rng) -> (usize, Point) {
    let total = *cumulative.last().unwrap();
    let r = rng.gen::<f64>() * total;
    let f = cumulative.partition_point(|&c| c <= r).min(cumulative.len() - 1);
    let [a, b, c] = mesh.triangle(f);
    let (u, v): (f64, f64) = (rng.gen(), rng.gen());
    let su = u.sqrt();
    (f, Point::from(a.coords * (1.0 - su) + b.coords * (su * (1.0 - v)) + c.coords * (su * v)))
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Removes faces inside spherical hole regions or thin slab stripes. Each
/// hole also removes the face its seed point was drawn on, so no hole is
/// empty. Hole balls are placed disjoint.
pub fn punch_holes(mesh: &TriangleMesh, spec: &DefectSpec) -> Result<TriangleMesh> {
    spec.validate()?;
    if !matches!(spec.kind, DefectKind::Holes | DefectKind::StripeDropout) {
        return Err(Error::InvalidParameter(format!("punch_holes cannot apply `{}`", spec.kind)));
    }
    let report = validate(mesh);
    if mesh.is_empty() || report.boundary_edge_count > 0 {
        return Err(Error::InvalidMesh("punch_holes needs a closed input".into()));
    }
    let mut cumulative = Vec::with_capacity(mesh.num_faces());
    let mut total = 0.0;
    for f in 0..mesh.num_faces() {
        total += mesh.face_area(f);
        cumulative.push(total);
    }
    let centroids: Vec<Point> = (0..mesh.num_faces()).map(|f| face_centroid(mesh, f)).collect();
    let allowed_components = report.connected_components.max(3);
    let (rmin, rmax) = spec.hole_radius_range;
    let mut edges: Vec<f64> = mesh
        .faces
        .iter()
        .flat_map(|f| (0..3).map(move |k| (f[k], f[(k + 1) % 3])))
        .map(|(a, b)| (mesh.vertices[a as usize] - mesh.vertices[b as usize]).norm())
        .collect();
    edges.sort_by(f64::total_cmp);
    // Regions closer than a few edges could share a vertex and fuse loops.
    let margin = 0.25 * rmin + 3.0 * edges[edges.len() / 2];

    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let mut removed = vec![false; mesh.num_faces()];
        let mut placed: Vec<(Point, f64)> = Vec::new();
        let mut ok = true;
        for _ in 0..spec.hole_count {
            let r = if rmax > rmin { rng.gen_range(rmin..=rmax) } else { rmin };
            let mut found = None;
            for _ in 0..500 {
                let (f, p) = random_surface_point(mesh, &cumulative, &mut rng);
                let reach = if spec.kind == DefectKind::StripeDropout { 3.0 * r } else { r };
                if placed.iter().all(|(q, rq)| (p - q).norm() > reach + rq + margin) {
                    found = Some((f, p, reach));
                    break;
                }
            }
            let Some((seed_face, p, reach)) = found else {
                ok = false;
                break;
            };
            placed.push((p, reach));
            removed[seed_face] = true;
            match spec.kind {
                DefectKind::Holes => {
                    for (f, c) in centroids.iter().enumerate() {
                        if (c - p).norm() <= r {
                            removed[f] = true;
                        }
                    }
                }
                _ => {
                    let n = mesh.face_normal(seed_face);
                    let t = random_unit(&mut rng);
                    let u = (t - n * t.dot(&n)).try_normalize(1e-9).unwrap_or_else(|| n.cross(&Vec3::x()).normalize());
                    let v = n.cross(&u);
                    for (f, c) in centroids.iter().enumerate() {
                        let d = c - p;
                        if d.dot(&u).abs() <= 3.0 * r && d.dot(&v).abs() <= 0.3 * r && d.dot(&n).abs() <= r {
                            removed[f] = true;
                        }
                    }
                }
            }
        }
        if !ok {
            continue;
        }
        let removed_area: f64 = (0..mesh.num_faces()).filter(|&f| removed[f]).map(|f| mesh.face_area(f)).sum();
        if removed_area >= MAX_REMOVED_FRACTION * total {
            continue;
        }
        let out = mesh.filter_faces(|f| !removed[f]).compacted();
        if out.is_empty() || boundary_loop_count(&out) == 0 {
            continue;
        }
        if validate(&out).connected_components > allowed_components {
            continue;
        }
        return Ok(out);
    }
    Err(Error::Synthesis(format!("no acceptable hole layout after {MAX_ATTEMPTS} attempts")))
}

/// Area-weighted centroid of the faces.
fn surface_centroid(mesh: &TriangleMesh) -> Point {
    let mut acc = Vec3::zeros();
    let mut total = 0.0;
    for f in 0..mesh.num_faces() {
        let a = mesh.face_area(f);
        acc += face_centroid(mesh, f).coords * a;
        total += a;
    }
    Point::from(acc / total.max(f64::MIN_POSITIVE))
}

/// Deletes every face whose centroid lies strictly below the plane through
/// `point` with normal `normal`.
pub fn make_single_layer_with(mesh: &TriangleMesh, point: &Point, normal: &Vec3) -> Result<TriangleMesh> {
    let keep: Vec<bool> = (0..mesh.num_faces()).map(|f| (face_centroid(mesh, f) - point).dot(normal) >= 0.0).collect();
    let kept = keep.iter().filter(|&&k| k).count();
    if kept == 0 || kept == mesh.num_faces() {
        return Err(Error::Synthesis("cutting plane removes everything or nothing".into()));
    }
    Ok(mesh.filter_faces(|f| keep[f]).compacted())
}

/// Cut through the surface centroid with a +z normal: a sphere becomes its
/// upper hemisphere shell.
pub fn make_single_layer(mesh: &TriangleMesh) -> Result<TriangleMesh> {
    make_single_layer_with(mesh, &surface_centroid(mesh), &Vec3::z())
}

/// Pairs of triangles sharing no vertex index that intersect.
pub fn count_intersecting_pairs(mesh: &TriangleMesh) -> usize {
    let boxes: Vec<Aabb> = (0..mesh.num_faces()).map(|f| Aabb::from_points(mesh.triangle(f))).collect();
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| boxes[a].min.x.total_cmp(&boxes[b].min.x).then(a.cmp(&b)));
    let mut count = 0;
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if boxes[j].min.x > boxes[i].max.x {
                break;
            }
            let (bi, bj) = (&boxes[i], &boxes[j]);
            if (1..3).any(|a| bi.min[a] > bj.max[a] || bj.min[a] > bi.max[a]) {
                continue;
            }
            let (fi, fj) = (mesh.faces[i], mesh.faces[j]);
            if fi.iter().any(|v| fj.contains(v)) {
                continue;
            }
            if triangles_intersect(mesh.triangle(i), mesh.triangle(j)) {
                count += 1;
            }
        }
    }
    count
}

fn random_primitive(rng: &mut ChaCha8Rng, center: Point, fine: bool) -> TriangleMesh {
    if rng.gen_bool(0.5) {
        let h = Vec3::new(rng.gen_range(0.15..0.3), rng.gen_range(0.15..0.3), rng.gen_range(0.15..0.3));
        if fine {
            primitives::subdivided_box(center - h, center + h, 8)
        } else {
            primitives::cuboid(center - h, center + h)
        }
    } else {
        let r = rng.gen_range(0.15..0.3);
        primitives::translated(&primitives::icosphere(r, 3), center.coords)
    }
}

fn primitive_extent(m: &TriangleMesh) -> f64 {
    0.5 * m.bounding_box().extent().max()
}

/// Soup of 2 to 4 closed boxes and spheres, each penetrating at least one
/// other. Layouts without a crossing between some part and the rest are
/// redrawn.
pub fn make_self_intersecting(seed: u64) -> TriangleMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let k = rng.gen_range(2..=4);
        let mut parts: Vec<TriangleMesh> = vec![random_primitive(&mut rng, Point::origin(), false)];
        for _ in 1..k {
            let anchor = &parts[rng.gen_range(0..parts.len())];
            let c0 = anchor.bounding_box().center();
            let reach = primitive_extent(anchor);
            let dir = random_unit(&mut rng);
            let c = c0 + dir * reach * rng.gen_range(0.6..1.1);
            parts.push(random_primitive(&mut rng, c, false));
        }
        let all_cross = (0..parts.len()).all(|i| {
            (0..parts.len()).any(|j| j != i && count_intersecting_pairs(&TriangleMesh::merge(&[parts[i].clone(), parts[j].clone()])) > 0)
        });
        if all_cross {
            return TriangleMesh::merge(&parts);
        }
    }
}

/// `mesh` merged with one or two primitives pushed through its surface.
fn with_penetrating_parts(mesh: &TriangleMesh, rng: &mut ChaCha8Rng) -> TriangleMesh {
    let bb = mesh.bounding_box();
    let scale = bb.extent().max();
    let mut cumulative = Vec::new();
    let mut total = 0.0;
    for f in 0..mesh.num_faces() {
        total += mesh.face_area(f);
        cumulative.push(total);
    }
    loop {
        let mut parts = vec![mesh.clone()];
        for _ in 0..rng.gen_range(1..=2) {
            let (_, p) = random_surface_point(mesh, &cumulative, rng);
            let unit = random_primitive(rng, Point::origin(), true);
            let s = scale * rng.gen_range(0.5..0.9);
            parts.push(unit.map_vertices(|q| p + q.coords * s));
        }
        let soup = TriangleMesh::merge(&parts);
        if count_intersecting_pairs(&soup) > 0 {
            return soup;
        }
    }
}

/// Applies `spec` to `mesh`.
pub fn apply_defect(mesh: &TriangleMesh, spec: &DefectSpec) -> Result<TriangleMesh> {
    spec.validate()?;
    match spec.kind {
        DefectKind::Holes | DefectKind::StripeDropout => punch_holes(mesh, spec),
        DefectKind::SingleLayer => make_single_layer(mesh),
        DefectKind::SelfIntersect => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            Ok(with_penetrating_parts(mesh, &mut rng))
        }
        DefectKind::Mixture => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let soup = with_penetrating_parts(mesh, &mut rng);
            punch_holes(&soup, &DefectSpec { kind: DefectKind::Holes, ..*spec })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub name: String,
    pub defective: PathBuf,
    pub reference: PathBuf,
    /// How the defective mesh was produced; `None` for hand-listed pairs.
    pub spec: Option<DefectSpec>,
}

/// Tab-separated `name defective reference [spec]` lines; `#` starts a
/// comment. Relative paths resolve against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<CorpusEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 3 {
            return Err(Error::Parse {
                location: format!("{}:{}", path.display(), n + 1),
                message: "expected name, defective and reference columns".into(),
            });
        }
        out.push(CorpusEntry {
            name: cols[0].to_string(),
            defective: base.join(cols[1]),
            reference: base.join(cols[2]),
            spec: cols.get(3).filter(|s| !s.is_empty()).map(|s| s.parse()).transpose()?,
        });
    }
    Ok(out)
}

pub fn write_manifest(path: &Path, entries: &[CorpusEntry]) -> Result<()> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut text = String::from("# name\tdefective\treference\tspec\n");
    for e in entries {
        let rel = |p: &Path| p.strip_prefix(base).unwrap_or(p).display().to_string();
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            e.name,
            rel(&e.defective),
            rel(&e.reference),
            e.spec.map(|s| s.to_string()).unwrap_or_default()
        ));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One corpus model held in memory.
#[derive(Debug, Clone)]
pub struct CorpusModel {
    pub name: String,
    pub family: &'static str,
    pub defective: TriangleMesh,
    pub reference: TriangleMesh,
    pub spec: Option<DefectSpec>,
}

/// The 20-model synthetic corpus: punctured spheres, tori and boxes with
/// 6 to 12 holes, stripe dropouts, single-layer sheets, self-intersecting
/// soups and mixtures.
pub fn synthetic_corpus(seed: u64) -> Result<Vec<CorpusModel>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sphere = primitives::icosphere(1.0, 4);
    let torus = primitives::torus(1.0, 0.4, 64, 24);
    let cube = primitives::subdivided_box(Point::new(-1.0, -1.0, -1.0), Point::new(1.0, 1.0, 1.0), 16);
    let mut out = Vec::new();
    let mut push = |name: String, family: &'static str, reference: TriangleMesh, spec: Option<DefectSpec>, defective: Result<TriangleMesh>| -> Result<()> {
        out.push(CorpusModel {
            name,
            family,
            defective: defective?,
            reference,
            spec,
        });
        Ok(())
    };
    let holes = |rng: &mut ChaCha8Rng, kind: DefectKind, r: (f64, f64)| {
        DefectSpec::new(kind, rng.gen_range(6..=12), r, rng.gen())
    };

    for i in 0..4 {
        let s = holes(&mut rng, DefectKind::Holes, (0.08, 0.14))?;
        push(format!("sphere_holes_{i}"), "punctured_sphere", sphere.clone(), Some(s), punch_holes(&sphere, &s))?;
    }
    for i in 0..2 {
        let s = holes(&mut rng, DefectKind::Holes, (0.08, 0.14))?;
        push(format!("torus_holes_{i}"), "punctured_torus", torus.clone(), Some(s), punch_holes(&torus, &s))?;
    }
    for i in 0..2 {
        let s = holes(&mut rng, DefectKind::Holes, (0.1, 0.18))?;
        push(format!("box_holes_{i}"), "punctured_box", cube.clone(), Some(s), punch_holes(&cube, &s))?;
    }
    let s = holes(&mut rng, DefectKind::StripeDropout, (0.05, 0.08))?;
    push("sphere_stripes".into(), "stripe_dropout", sphere.clone(), Some(s), punch_holes(&sphere, &s))?;
    let s = holes(&mut rng, DefectKind::StripeDropout, (0.06, 0.1))?;
    push("box_stripes".into(), "stripe_dropout", cube.clone(), Some(s), punch_holes(&cube, &s))?;

    let hemi = make_single_layer(&sphere)?;
    push("hemisphere_sheet".into(), "single_layer", hemi.clone(), None, Ok(hemi))?;
    let cap = make_single_layer_with(&sphere, &Point::new(0.0, 0.0, -0.3), &Vec3::new(1.0, 1.0, 1.0).normalize())?;
    push("sphere_cap_sheet".into(), "single_layer", cap.clone(), None, Ok(cap))?;
    // Rim at z = 0.75, so no wall lands on a grid plane once normalized.
    let open_box = make_single_layer_with(&cube.flipped(), &Point::new(0.0, 0.0, 0.76), &Vec3::new(0.0, 0.0, -1.0))?;
    push("open_box_sheet".into(), "single_layer", open_box.clone(), None, Ok(open_box))?;
    let half_torus = make_single_layer_with(&torus, &Point::origin(), &Vec3::x())?;
    push("half_torus_sheet".into(), "single_layer", half_torus.clone(), None, Ok(half_torus))?;

    for i in 0..3 {
        let soup = make_self_intersecting(rng.gen());
        push(format!("soup_{i}"), "self_intersecting", soup.clone(), None, Ok(soup))?;
    }

    for (i, base) in [&sphere, &torus, &cube].into_iter().enumerate() {
        let s = holes(&mut rng, DefectKind::Mixture, (0.08, 0.14))?;
        let mut srng = ChaCha8Rng::seed_from_u64(s.seed);
        let soup = with_penetrating_parts(base, &mut srng);
        let defective = punch_holes(&soup, &DefectSpec { kind: DefectKind::Holes, ..s });
        push(format!("mixture_{i}"), "mixture", soup, Some(s), defective)?;
    }
    Ok(out)
}

/// Writes the corpus as OBJ files plus `manifest.tsv` into `dir`.
pub fn write_corpus(dir: &Path, models: &[CorpusModel]) -> Result<Vec<CorpusEntry>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::new();
    for m in models {
        let defective = dir.join(format!("{}_defective.obj", m.name));
        let reference = dir.join(format!("{}_reference.obj", m.name));
        write_obj(&m.defective, &defective)?;
        write_obj(&m.reference, &reference)?;
        entries.push(CorpusEntry {
            name: m.name.clone(),
            defective,
            reference,
            spec: m.spec,
        });
    }
    write_manifest(&dir.join("manifest.tsv"), &entries)?;
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: DefectKind, count: u32, r: f64, seed: u64) -> DefectSpec {
        DefectSpec::new(kind, count, (r, r), seed).unwrap()
    }

    #[test]
    fn six_holes_in_a_sphere() {
        let sphere = primitives::icosphere(1.0, 4);
        let out = punch_holes(&sphere, &spec(DefectKind::Holes, 6, 0.12, 3)).unwrap();
        assert_eq!(boundary_loop_count(&out), 6);
        let r = validate(&out);
        assert!(r.euler_characteristic < 2);
        assert!(r.boundary_edge_count > 0);
        assert!(out.area() > 0.7 * sphere.area());
    }

    #[test]
    fn spec_validation() {
        assert!(DefectSpec::new(DefectKind::Holes, 0, (0.1, 0.1), 1).is_err());
        assert!(DefectSpec::new(DefectKind::Holes, 65, (0.1, 0.1), 1).is_err());
        assert!(DefectSpec::new(DefectKind::Holes, 3, (0.2, 0.1), 1).is_err());
        assert!(DefectSpec::new(DefectKind::Holes, 3, (0.0, 0.1), 1).is_err());
        let s = spec(DefectKind::StripeDropout, 4, 0.1, 9);
        assert_eq!(s.to_string().parse::<DefectSpec>().unwrap(), s);
    }

    #[test]
    fn deterministic_bytes() {
        let sphere = primitives::icosphere(1.0, 3);
        let s = spec(DefectKind::Holes, 8, 0.15, 7);
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.obj"), dir.path().join("b.obj"));
        write_obj(&punch_holes(&sphere, &s).unwrap(), &a).unwrap();
        write_obj(&punch_holes(&sphere, &s).unwrap(), &b).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }

    #[test]
    fn retained_triangles_are_untouched() {
        let sphere = primitives::icosphere(1.0, 3);
        let out = punch_holes(&sphere, &spec(DefectKind::StripeDropout, 3, 0.1, 2)).unwrap();
        let originals: std::collections::HashSet<[u64; 9]> = (0..sphere.num_faces())
            .map(|f| {
                let [a, b, c] = sphere.triangle(f);
                [a.x, a.y, a.z, b.x, b.y, b.z, c.x, c.y, c.z].map(f64::to_bits)
            })
            .collect();
        for f in 0..out.num_faces() {
            let [a, b, c] = out.triangle(f);
            assert!(originals.contains(&[a.x, a.y, a.z, b.x, b.y, b.z, c.x, c.y, c.z].map(f64::to_bits)));
        }
        assert!(out.num_faces() < sphere.num_faces());
    }

    #[test]
    fn punch_requires_closed_input() {
        let hemi = make_single_layer(&primitives::icosphere(1.0, 2)).unwrap();
        assert!(punch_holes(&hemi, &spec(DefectKind::Holes, 2, 0.1, 1)).is_err());
        let cube = primitives::unit_cube();
        assert!(punch_holes(&cube, &spec(DefectKind::SingleLayer, 2, 0.1, 1)).is_err());
    }

    #[test]
    fn single_layer_cuts() {
        let hemi = make_single_layer(&primitives::icosphere(1.0, 3)).unwrap();
        assert_eq!(boundary_loop_count(&hemi), 1);
        assert!(!validate(&hemi).is_watertight());
        let b = primitives::unit_cube();
        let open = make_single_layer_with(&b, &Point::new(0.0, 0.0, 0.1), &Vec3::z()).unwrap();
        assert_eq!(open.num_faces(), 10);
        assert_eq!(boundary_loop_count(&open), 1);
        assert!(make_single_layer_with(&b, &Point::new(0.0, 0.0, 5.0), &Vec3::z()).is_err());
        assert!(make_single_layer_with(&b, &Point::new(0.0, 0.0, -5.0), &Vec3::z()).is_err());
    }

    #[test]
    fn overlapping_boxes_intersect() {
        let a = primitives::unit_cube();
        let b = primitives::translated(&a, Vec3::new(0.5, 0.0, 0.0));
        let soup = TriangleMesh::merge(&[a.clone(), b]);
        assert_eq!(validate(&soup).boundary_edge_count, 0);
        assert!(count_intersecting_pairs(&soup) > 0);
        // Disjoint copies do not.
        let far = TriangleMesh::merge(&[a.clone(), primitives::translated(&a, Vec3::new(3.0, 0.0, 0.0))]);
        assert_eq!(count_intersecting_pairs(&far), 0);
    }

    #[test]
    fn intersection_count_matches_exhaustive_sweep() {
        let soup = make_self_intersecting(5);
        let mut brute = 0;
        for i in 0..soup.num_faces() {
            for j in i + 1..soup.num_faces() {
                if soup.faces[i].iter().any(|v| soup.faces[j].contains(v)) {
                    continue;
                }
                if triangles_intersect(soup.triangle(i), soup.triangle(j)) {
                    brute += 1;
                }
            }
        }
        assert_eq!(count_intersecting_pairs(&soup), brute);
        assert!(brute > 0);
    }

    #[test]
    fn self_intersecting_soups() {
        for seed in 0..5 {
            let soup = make_self_intersecting(seed);
            let r = validate(&soup);
            assert_eq!(r.boundary_edge_count, 0);
            assert!((2..=4).contains(&r.connected_components));
            assert!(count_intersecting_pairs(&soup) > 0);
            assert_eq!(soup, make_self_intersecting(seed));
        }
    }

    #[test]
    fn corpus_is_defective_and_round_trips() {
        let corpus = synthetic_corpus(1).unwrap();
        assert_eq!(corpus.len(), 20);
        for m in &corpus {
            let r = validate(&m.defective);
            assert!(!r.is_watertight() || count_intersecting_pairs(&m.defective) > 0, "{}", m.name);
            if let Some(s) = m.spec {
                assert!((6..=12).contains(&s.hole_count));
                if s.kind == DefectKind::Holes {
                    assert_eq!(boundary_loop_count(&m.defective), s.hole_count as usize, "{}", m.name);
                    assert!(r.euler_characteristic < validate(&m.reference).euler_characteristic);
                }
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let entries = write_corpus(dir.path(), &corpus).unwrap();
        let back = read_manifest(&dir.path().join("manifest.tsv")).unwrap();
        assert_eq!(back, entries);
    }
}
