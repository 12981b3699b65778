//! The remeshing pipeline: normalize, thicken the unsigned distance field,
//! extract and decimate the proxy, tetrahedralize, cut, and extract the
//! final surface. Also the benchmark and ablation drivers.

use crate::decimate::decimate;
use crate::error::{Error, Result};
use crate::evalkit::{geo_metrics, sample_surface, unit_frame, virtual_scan_gt, GeoMetrics, DEFAULT_TAU};
use crate::extract::{extract_final_surface, extract_interface, refine_sdf, InterfaceSet};
use crate::field::{compute_udf, thicken};
use crate::isosurface::marching_cubes;
use crate::mesh::{load_mesh, normalize_to_unit, save_mesh, validate, write_obj, NormalizationTransform, TriangleMesh, ValidationReport};
use crate::partition::{
    build_cut_graph, build_cut_graph_without_unary, energy_of, initial_labels, solve_max_flow, write_cut_dump, CellLabeling,
    PartitionEnergy, LAMBDA_MAX, LAMBDA_MIN,
};
use crate::synth::CorpusEntry;
use crate::tetra::{add_exterior_anchors, delaunay_tetrahedralize, TetComplex};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// The longest input axis spans `1 - 2 * NORMALIZE_MARGIN` of the domain.
pub const NORMALIZE_MARGIN: f64 = 0.05;

/// Normalization margin for `config`: the default, widened at coarse
/// resolutions so the thickened shell stays two cells off the boundary.
pub fn normalize_margin(config: &PipelineConfig) -> f64 {
    NORMALIZE_MARGIN.max(config.epsilon() + 2.0 * config.spacing())
}

pub const LAMBDA_SWEEP: [f64; 7] = [3.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0];
/// Multiples of one grid spacing.
pub const EPSILON_SWEEP: [f64; 4] = [0.5, 1.0, 1.5, 2.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub resolution: usize,
    /// Shell half-width in normalized units; `None` means one grid spacing.
    pub epsilon: Option<f64>,
    pub lambda_fill: f64,
    pub decimate_ratio: f64,
    pub anchor_expansion: f64,
    pub seed: u64,
    pub stage_dump: bool,
    /// When false the source anchors are dropped (ablation only).
    pub unary: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            resolution: 128,
            epsilon: None,
            lambda_fill: 20.0,
            decimate_ratio: 0.95,
            anchor_expansion: 1.2,
            seed: 0,
            stage_dump: false,
            unary: true,
        }
    }
}

impl PipelineConfig {
    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(1.0 / self.resolution as f64)
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(8..=1024).contains(&self.resolution) {
            return bad(format!("resolution {} outside [8, 1024]", self.resolution));
        }
        let eps = self.epsilon();
        if !(eps > 0.0 && eps < 0.25) {
            return bad(format!("epsilon {eps} outside (0, 0.25)"));
        }
        if eps + 2.0 * self.spacing() >= 0.4 {
            return bad(format!("epsilon {eps} leaves no room in the domain at resolution {}", self.resolution));
        }
        if !(LAMBDA_MIN..=LAMBDA_MAX).contains(&self.lambda_fill) {
            return bad(format!("lambda_fill {} outside [{LAMBDA_MIN}, {LAMBDA_MAX}]", self.lambda_fill));
        }
        if !(0.0..1.0).contains(&self.decimate_ratio) {
            return bad(format!("decimate_ratio {} outside [0, 1)", self.decimate_ratio));
        }
        if !(self.anchor_expansion > 1.0 && self.anchor_expansion <= 10.0) {
            return bad(format!("anchor_expansion {} outside (1, 10]", self.anchor_expansion));
        }
        Ok(())
    }

    /// Sets one field from its textual form. Keys accept `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || Error::Parse {
            location: format!("config key `{key}`"),
            message: format!("bad value `{value}`"),
        };
        let f = || value.parse::<f64>().map_err(|_| bad());
        let b = || match value {
            "true" | "1" | "yes" | "on" => Ok(true),
            "false" | "0" | "no" | "off" => Ok(false),
            _ => Err(bad()),
        };
        match key.replace('-', "_").as_str() {
            "resolution" => self.resolution = value.parse().map_err(|_| bad())?,
            "epsilon" => self.epsilon = if value == "auto" { None } else { Some(f()?) },
            "lambda_fill" => self.lambda_fill = f()?,
            "decimate_ratio" => self.decimate_ratio = f()?,
            "anchor_expansion" => self.anchor_expansion = f()?,
            "seed" => self.seed = value.parse().map_err(|_| bad())?,
            "stage_dump" => self.stage_dump = b()?,
            "unary" => self.unary = b()?,
            _ => {
                return Err(Error::Parse {
                    location: "config".into(),
                    message: format!("unknown key `{key}`"),
                })
            }
        }
        Ok(())
    }

    /// Applies a flat `key=value` file; `#` starts a comment.
    pub fn apply_key_values(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                location: format!("config line {}", n + 1),
                message: format!("`{line}` is not key=value"),
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = Self::default();
        c.apply_key_values(&text)?;
        Ok(c)
    }

    pub fn to_key_value(&self) -> String {
        format!(
            "resolution={}\nepsilon={}\nlambda_fill={}\ndecimate_ratio={}\nanchor_expansion={}\nseed={}\nstage_dump={}\nunary={}\n",
            self.resolution,
            self.epsilon(),
            self.lambda_fill,
            self.decimate_ratio,
            self.anchor_expansion,
            self.seed,
            self.stage_dump,
            self.unary
        )
    }
}

/// Wall time per stage in seconds. `total` covers the whole run including
/// loading and writing, so the stage ratios sum to slightly under 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub udf: f64,
    pub marching_cubes: f64,
    pub decimation: f64,
    pub tetrahedralization: f64,
    pub labeling_adjacency: f64,
    pub graph_cut: f64,
    pub extraction: f64,
    pub total: f64,
}

impl StageTimings {
    pub fn stages(&self) -> [(&'static str, f64); 7] {
        [
            ("udf", self.udf),
            ("marching_cubes", self.marching_cubes),
            ("decimation", self.decimation),
            ("tetrahedralization", self.tetrahedralization),
            ("labeling_adjacency", self.labeling_adjacency),
            ("graph_cut", self.graph_cut),
            ("extraction", self.extraction),
        ]
    }

    pub fn accounted(&self) -> f64 {
        self.stages().iter().map(|s| s.1).sum()
    }

    pub fn ratios(&self) -> [(&'static str, f64); 7] {
        let denom = self.total.max(self.accounted()).max(f64::MIN_POSITIVE);
        self.stages().map(|(n, t)| (n, t / denom))
    }

    pub fn largest_stage(&self) -> &'static str {
        self.stages().iter().fold(("udf", -1.0), |a, &b| if b.1 > a.1 { b } else { a }).0
    }

    fn add(&mut self, o: &StageTimings) {
        self.udf += o.udf;
        self.marching_cubes += o.marching_cubes;
        self.decimation += o.decimation;
        self.tetrahedralization += o.tetrahedralization;
        self.labeling_adjacency += o.labeling_adjacency;
        self.graph_cut += o.graph_cut;
        self.extraction += o.extraction;
        self.total += o.total;
    }

    fn scaled(&self, s: f64) -> StageTimings {
        StageTimings {
            udf: self.udf * s,
            marching_cubes: self.marching_cubes * s,
            decimation: self.decimation * s,
            tetrahedralization: self.tetrahedralization * s,
            labeling_adjacency: self.labeling_adjacency * s,
            graph_cut: self.graph_cut * s,
            extraction: self.extraction * s,
            total: self.total * s,
        }
    }

    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        for (n, t) in self.stages() {
            let _ = writeln!(s, "time_{n}={t:.6}");
        }
        let _ = writeln!(s, "time_total={:.6}", self.total);
        for (n, r) in self.ratios() {
            let _ = writeln!(s, "ratio_{n}={r:.4}");
        }
        s
    }
}

/// Everything up to and including the initial labels. Geometry is in the
/// normalized frame.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub transform: NormalizationTransform,
    pub normalized: TriangleMesh,
    pub proxy_raw: TriangleMesh,
    pub proxy: TriangleMesh,
    pub complex: TetComplex,
    pub initial: CellLabeling,
    pub timings: StageTimings,
}

#[derive(Debug, Clone)]
pub struct RemeshRun {
    /// Final surface in the input's frame.
    pub mesh: TriangleMesh,
    pub report: ValidationReport,
    pub timings: StageTimings,
    pub labeling: CellLabeling,
    pub energy: PartitionEnergy,
    pub interface: InterfaceSet,
    pub prepared: Prepared,
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let r = f();
    *slot += t.elapsed().as_secs_f64();
    r
}

fn dump_file(dir: Option<&Path>, name: &str, f: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    match dir {
        Some(d) => f(&d.join(name)).map_err(|e| e.in_stage("stage_dump")),
        None => Ok(()),
    }
}

fn dump_text(path: &Path, f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn dump_labels(path: &Path, l: &CellLabeling) -> Result<()> {
    dump_text(path, |w| {
        for v in &l.labels {
            writeln!(w, "{v}")?;
        }
        Ok(())
    })
}

/// Stages 1 and 2 up to the initial labels.
pub fn prepare(input: &TriangleMesh, config: &PipelineConfig, dump: Option<&Path>) -> Result<Prepared> {
    config.validate()?;
    if let Some(d) = dump {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e).in_stage("stage_dump"))?;
    }
    let mut tm = StageTimings::default();
    let (normalized, transform) =
        timed(&mut tm.udf, || normalize_to_unit(input, normalize_margin(config))).map_err(|e| e.in_stage("normalize"))?;
    if normalized.is_empty() {
        return Err(Error::EmptyMesh.in_stage("normalize"));
    }
    let udf = timed(&mut tm.udf, || compute_udf(&normalized, config.resolution)).map_err(|e| e.in_stage("udf"))?;
    let phi = timed(&mut tm.udf, || thicken(&udf, config.epsilon())).map_err(|e| e.in_stage("thicken"))?;
    dump_file(dump, "00_normalized.obj", |p| write_obj(&normalized, p))?;
    dump_file(dump, "01_udf.grid", |p| udf.write_binary(p))?;
    dump_file(dump, "02_phi.grid", |p| phi.write_binary(p))?;
    drop(udf);

    let proxy_raw = timed(&mut tm.marching_cubes, || marching_cubes(&phi, 0.0));
    if proxy_raw.is_empty() {
        return Err(Error::EmptySolid.in_stage("marching_cubes"));
    }
    dump_file(dump, "03_proxy.obj", |p| write_obj(&proxy_raw, p))?;
    let proxy = timed(&mut tm.decimation, || decimate(&proxy_raw, config.decimate_ratio)).map_err(|e| e.in_stage("decimation"))?;
    dump_file(dump, "04_proxy_decimated.obj", |p| write_obj(&proxy, p))?;

    let complex = timed(&mut tm.tetrahedralization, || -> Result<TetComplex> {
        let used = proxy.compacted();
        let (points, flags) = add_exterior_anchors(&used.vertices, config.anchor_expansion)?;
        delaunay_tetrahedralize(&points, Some(&flags))
    })
    .map_err(|e| e.in_stage("tetrahedralization"))?;
    dump_file(dump, "05_complex.txt", |p| dump_text(p, |w| complex.write_debug(w)))?;

    let initial = timed(&mut tm.labeling_adjacency, || initial_labels(&complex, &phi)).map_err(|e| e.in_stage("labeling"))?;
    dump_file(dump, "06_initial_labels.txt", |p| dump_labels(p, &initial))?;
    Ok(Prepared {
        transform,
        normalized,
        proxy_raw,
        proxy,
        complex,
        initial,
        timings: tm,
    })
}

/// Stage 2 cut and stage 3 extraction on a prepared complex.
pub fn finish(prep: &Prepared, config: &PipelineConfig, dump: Option<&Path>) -> Result<RemeshRun> {
    config.validate()?;
    let mut tm = prep.timings;
    let graph = timed(&mut tm.labeling_adjacency, || {
        if config.unary {
            build_cut_graph(&prep.complex, &prep.initial, config.lambda_fill)
        } else {
            build_cut_graph_without_unary(&prep.complex, &prep.initial, config.lambda_fill)
        }
    })
    .map_err(|e| e.in_stage("cut_graph"))?;
    let labeling = timed(&mut tm.graph_cut, || solve_max_flow(&graph)).map_err(|e| e.in_stage("graph_cut"))?;
    drop(graph);
    let energy = energy_of(&prep.complex, &prep.initial, &labeling, config.lambda_fill);
    dump_file(dump, "07_labels.txt", |p| dump_labels(p, &labeling))?;
    dump_file(dump, "08_cut.txt", |p| {
        dump_text(p, |w| write_cut_dump(w, &prep.complex, &prep.initial, &labeling, config.lambda_fill))
    })?;

    let interface = timed(&mut tm.extraction, || extract_interface(&prep.complex, &labeling));
    dump_file(dump, "09_interface.obj", |p| write_obj(&interface.mesh, p))?;
    let sdf = timed(&mut tm.extraction, || refine_sdf(&prep.complex, &labeling, &interface, config.resolution))
        .map_err(|e| e.in_stage("extraction"))?;
    dump_file(dump, "10_sdf.grid", |p| sdf.write_binary(p))?;
    let surface = timed(&mut tm.extraction, || extract_final_surface(&sdf)).map_err(|e| e.in_stage("extraction"))?;
    dump_file(dump, "11_final_normalized.obj", |p| write_obj(&surface, p))?;
    let mesh = timed(&mut tm.extraction, || prep.transform.denormalize(&surface));
    let report = validate(&mesh);
    tm.total = tm.total.max(tm.accounted());
    Ok(RemeshRun {
        mesh,
        report,
        timings: tm,
        labeling,
        energy,
        interface,
        prepared: prep.clone(),
    })
}

/// Full pipeline on an in-memory mesh.
pub fn remesh_mesh(input: &TriangleMesh, config: &PipelineConfig, dump: Option<&Path>) -> Result<RemeshRun> {
    let start = Instant::now();
    let prep = prepare(input, config, dump)?;
    let mut run = finish(&prep, config, dump)?;
    run.timings.total = start.elapsed().as_secs_f64().max(run.timings.accounted());
    Ok(run)
}

/// Directory for `--stage-dump` artifacts next to `output`.
pub fn stage_dump_dir(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".stages");
    PathBuf::from(s)
}

/// Loads `input`, remeshes it and writes the result to `output`.
pub fn remesh(input: &Path, output: &Path, config: &PipelineConfig) -> Result<RemeshRun> {
    let start = Instant::now();
    let mesh = load_mesh(input).map_err(|e| e.in_stage("load"))?;
    let dump = config.stage_dump.then(|| stage_dump_dir(output));
    let mut run = remesh_mesh(&mesh, config, dump.as_deref())?;
    save_mesh(&run.mesh, output).map_err(|e| e.in_stage("write"))?;
    if let Some(d) = &dump {
        let t = serde_json::to_string_pretty(&run.prepared.transform).expect("transform serializes");
        std::fs::write(d.join("transform.json"), t).map_err(|e| Error::io(d, e).in_stage("stage_dump"))?;
    }
    run.timings.total = start.elapsed().as_secs_f64().max(run.timings.accounted());
    Ok(run)
}

/// Key=value run summary.
pub fn run_report(run: &RemeshRun, config: &PipelineConfig) -> String {
    let mut s = String::from("status=ok\n");
    s.push_str(&config.to_key_value());
    s.push_str(&run.report.to_key_value());
    let _ = writeln!(s, "vertices={}\nfaces={}", run.mesh.num_vertices(), run.mesh.num_faces());
    let _ = writeln!(s, "proxy_faces={}\nproxy_decimated_faces={}", run.prepared.proxy_raw.num_faces(), run.prepared.proxy.num_faces());
    let _ = writeln!(s, "tets={}", run.prepared.complex.num_tets());
    let _ = writeln!(
        s,
        "initial_interior_cells={}\ninterior_cells={}",
        run.prepared.initial.interior_count(),
        run.labeling.interior_count()
    );
    let _ = writeln!(
        s,
        "supported_interface_area={:e}\nunsupported_interface_area={:e}\nenergy={:e}",
        run.energy.supported_interface_area, run.energy.unsupported_interface_area, run.energy.total_energy
    );
    s.push_str(&run.timings.to_key_value());
    s
}

pub fn run_json(run: &RemeshRun, config: &PipelineConfig) -> serde_json::Value {
    serde_json::json!({
        "status": "ok",
        "config": config,
        "validation": run.report,
        "vertices": run.mesh.num_vertices(),
        "faces": run.mesh.num_faces(),
        "proxy_faces": run.prepared.proxy_raw.num_faces(),
        "proxy_decimated_faces": run.prepared.proxy.num_faces(),
        "tets": run.prepared.complex.num_tets(),
        "initial_interior_cells": run.prepared.initial.interior_count(),
        "interior_cells": run.labeling.interior_count(),
        "energy": run.energy,
        "timings": run.timings,
        "ratios": run.timings.ratios().iter().map(|(n, r)| (n.to_string(), *r)).collect::<std::collections::BTreeMap<_, _>>(),
    })
}

/// Evaluation settings for bench: surface samples of the output against a
/// virtual scan of the reference, both in the reference's unit frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub samples: usize,
    pub views: usize,
    pub rays_per_view: usize,
    pub tau: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            samples: 100_000,
            views: crate::evalkit::DEFAULT_VIEWS,
            rays_per_view: crate::evalkit::DEFAULT_RAYS_PER_VIEW,
            tau: DEFAULT_TAU,
        }
    }
}

impl EvalSettings {
    /// Scan and sample counts small enough for test suites.
    pub fn quick() -> Self {
        Self {
            samples: 30_000,
            views: 42,
            rays_per_view: 128 * 128,
            tau: DEFAULT_TAU,
        }
    }
}

/// Reference cloud for `evaluate`: the scanned outer surface in the
/// reference's unit frame.
pub fn reference_cloud(reference: &TriangleMesh, eval: &EvalSettings) -> Result<(crate::evalkit::SampledCloud, NormalizationTransform)> {
    let frame = unit_frame(reference)?;
    let gt = virtual_scan_gt(reference, eval.views, eval.rays_per_view)?;
    let gt = gt.transformed(|p| frame.invert(p), |n| *n);
    Ok((gt, frame))
}

pub fn evaluate_against(
    output: &TriangleMesh,
    gt: &crate::evalkit::SampledCloud,
    frame: &NormalizationTransform,
    eval: &EvalSettings,
    seed: u64,
) -> Result<GeoMetrics> {
    let pred = sample_surface(&output.map_vertices(|p| frame.invert(p)), eval.samples, seed)?;
    geo_metrics(&pred, gt, eval.tau)
}

pub fn evaluate(output: &TriangleMesh, reference: &TriangleMesh, eval: &EvalSettings, seed: u64) -> Result<GeoMetrics> {
    let (gt, frame) = reference_cloud(reference, eval)?;
    evaluate_against(output, &gt, &frame, eval, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub name: String,
    /// Swept parameter value, if any.
    pub param: Option<f64>,
    pub failure: Option<String>,
    pub validation: Option<ValidationReport>,
    pub metrics: Option<GeoMetrics>,
    pub timings: Option<StageTimings>,
    pub unsupported_interface_area: Option<f64>,
}

impl BenchRow {
    fn failed(name: &str, param: Option<f64>, e: &Error) -> Self {
        Self {
            name: name.to_string(),
            param,
            failure: Some(e.to_string()),
            validation: None,
            metrics: None,
            timings: None,
            unsupported_interface_area: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    None,
    Lambda,
    Epsilon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub sweep: SweepKind,
    pub rows: Vec<BenchRow>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub models: usize,
    pub boundary: usize,
    pub nm_edges: usize,
    pub nm_vertices: usize,
    pub inversions: usize,
    pub failures: usize,
    pub chamfer: f64,
    pub hausdorff: f64,
    pub anc: f64,
    pub f1: f64,
    pub mean_ratios: StageTimings,
}

impl BenchReport {
    /// Aggregate over the rows with `param` (all rows when `None`).
    pub fn summary(&self, param: Option<f64>) -> BenchSummary {
        let rows: Vec<&BenchRow> = self.rows.iter().filter(|r| param.is_none() || r.param == param).collect();
        let mut s = BenchSummary {
            models: rows.len(),
            ..Default::default()
        };
        let mut nm = 0usize;
        let mut nt = 0usize;
        let mut ratios = StageTimings::default();
        for r in &rows {
            if r.failure.is_some() {
                s.failures += 1;
            }
            if let Some(v) = &r.validation {
                s.boundary += v.boundary_edge_count;
                s.nm_edges += v.nonmanifold_edge_count;
                s.nm_vertices += v.nonmanifold_vertex_count;
                s.inversions += v.inverted_triangle_count;
            }
            if let Some(m) = &r.metrics {
                s.chamfer += m.chamfer;
                s.hausdorff += m.hausdorff;
                s.anc += m.anc;
                s.f1 += m.f1;
                nm += 1;
            }
            if let Some(t) = &r.timings {
                let total = t.total.max(t.accounted()).max(f64::MIN_POSITIVE);
                ratios.add(&t.scaled(1.0 / total));
                nt += 1;
            }
        }
        if nm > 0 {
            let k = nm as f64;
            s.chamfer /= k;
            s.hausdorff /= k;
            s.anc /= k;
            s.f1 /= k;
        }
        if nt > 0 {
            s.mean_ratios = ratios.scaled(1.0 / nt as f64);
        }
        s
    }

    fn params(&self) -> Vec<Option<f64>> {
        let mut out: Vec<Option<f64>> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.param) {
                out.push(r.param);
            }
        }
        out
    }

    /// Table text plus per-model rows.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# sweep={}", serde_json::to_value(self.sweep).unwrap().as_str().unwrap_or("none"));
        let _ = writeln!(
            s,
            "{:<10} {:>7} {:>9} {:>9} {:>12} {:>8} {:>12} {:>10} {:>8} {:>8}",
            "param", "models", "Boundary", "NM Edges", "NM Vertices", "Failure", "CD", "HD", "ANC", "F1@tau"
        );
        for p in self.params() {
            let m = self.summary(p);
            let _ = writeln!(
                s,
                "{:<10} {:>7} {:>9} {:>9} {:>12} {:>8} {:>12.3e} {:>10.6} {:>8.4} {:>8.2}",
                p.map_or("-".to_string(), |v| format!("{v}")),
                m.models,
                m.boundary,
                m.nm_edges,
                m.nm_vertices,
                m.failures,
                m.chamfer,
                m.hausdorff,
                m.anc,
                m.f1
            );
        }
        let all = self.summary(None);
        let _ = writeln!(s, "\n# mean stage-time ratios");
        for (n, r) in all.mean_ratios.stages() {
            let _ = writeln!(s, "ratio_{n}={r:.4}");
        }
        let _ = writeln!(s, "\n# per-model rows");
        for r in &self.rows {
            let _ = write!(s, "name={}", r.name);
            if let Some(p) = r.param {
                let _ = write!(s, " param={p}");
            }
            match &r.failure {
                Some(f) => {
                    let _ = write!(s, " status=failure error=\"{}\"", f.replace('"', "'"));
                }
                None => {
                    let _ = write!(s, " status=ok");
                }
            }
            if let Some(v) = &r.validation {
                let _ = write!(
                    s,
                    " boundary={} nm_edges={} nm_vertices={} inversions={} components={} genus={}",
                    v.boundary_edge_count,
                    v.nonmanifold_edge_count,
                    v.nonmanifold_vertex_count,
                    v.inverted_triangle_count,
                    v.connected_components,
                    v.genus()
                );
            }
            if let Some(m) = &r.metrics {
                let _ = write!(s, " cd={:e} hd={:e} anc={} f1={}", m.chamfer, m.hausdorff, m.anc, m.f1);
            }
            if let Some(u) = r.unsupported_interface_area {
                let _ = write!(s, " unsupported_area={u:e}");
            }
            if let Some(t) = &r.timings {
                let _ = write!(s, " time_total={:.3} largest_stage={}", t.total, t.largest_stage());
            }
            s.push('\n');
        }
        s
    }
}

/// Input pair for bench.
#[derive(Debug, Clone)]
pub struct BenchInput {
    pub name: String,
    pub defective: TriangleMesh,
    pub reference: TriangleMesh,
}

pub fn load_bench_inputs(entries: &[CorpusEntry]) -> Vec<std::result::Result<BenchInput, (String, Error)>> {
    entries
        .iter()
        .map(|e| {
            let load = |p: &Path| load_mesh(p).map_err(|err| (e.name.clone(), err.in_stage("load")));
            Ok(BenchInput {
                name: e.name.clone(),
                defective: load(&e.defective)?,
                reference: load(&e.reference)?,
            })
        })
        .collect()
}

fn bench_one(input: &BenchInput, prep: &Prepared, config: &PipelineConfig, eval: &EvalSettings, param: Option<f64>, gt: Option<&(crate::evalkit::SampledCloud, NormalizationTransform)>) -> BenchRow {
    let start = Instant::now();
    match finish(prep, config, None) {
        Ok(mut run) => {
            run.timings.total = prep.timings.total + start.elapsed().as_secs_f64();
            run.timings.total = run.timings.total.max(run.timings.accounted());
            let metrics = gt.and_then(|(gt, frame)| evaluate_against(&run.mesh, gt, frame, eval, config.seed).ok());
            BenchRow {
                name: input.name.clone(),
                param,
                failure: None,
                validation: Some(run.report),
                metrics,
                timings: Some(run.timings),
                unsupported_interface_area: Some(run.energy.unsupported_interface_area),
            }
        }
        Err(e) => BenchRow::failed(&input.name, param, &e),
    }
}

fn timed_prepare(input: &TriangleMesh, config: &PipelineConfig) -> Result<Prepared> {
    let start = Instant::now();
    let mut p = prepare(input, config, None)?;
    p.timings.total = start.elapsed().as_secs_f64();
    Ok(p)
}

/// Runs every input, never aborting on a model failure. A lambda sweep
/// reuses one complex per model; an epsilon sweep reruns everything.
pub fn bench(inputs: &[std::result::Result<BenchInput, (String, Error)>], config: &PipelineConfig, eval: Option<&EvalSettings>, sweep: SweepKind) -> BenchReport {
    let mut rows = Vec::new();
    let quiet = EvalSettings::default();
    let es = eval.unwrap_or(&quiet);
    for item in inputs {
        let input = match item {
            Ok(i) => i,
            Err((name, e)) => {
                match sweep {
                    SweepKind::None => rows.push(BenchRow::failed(name, None, e)),
                    SweepKind::Lambda => rows.extend(LAMBDA_SWEEP.iter().map(|&l| BenchRow::failed(name, Some(l), e))),
                    SweepKind::Epsilon => rows.extend(EPSILON_SWEEP.iter().map(|&k| BenchRow::failed(name, Some(k), e))),
                }
                continue;
            }
        };
        let gt = eval.and_then(|e| reference_cloud(&input.reference, e).ok());
        match sweep {
            SweepKind::None => match timed_prepare(&input.defective, config) {
                Ok(p) => rows.push(bench_one(input, &p, config, es, None, gt.as_ref())),
                Err(e) => rows.push(BenchRow::failed(&input.name, None, &e)),
            },
            SweepKind::Lambda => match timed_prepare(&input.defective, config) {
                Ok(p) => {
                    for &l in &LAMBDA_SWEEP {
                        let c = PipelineConfig { lambda_fill: l, ..config.clone() };
                        rows.push(bench_one(input, &p, &c, es, Some(l), gt.as_ref()));
                    }
                }
                Err(e) => rows.extend(LAMBDA_SWEEP.iter().map(|&l| BenchRow::failed(&input.name, Some(l), &e))),
            },
            SweepKind::Epsilon => {
                for &k in &EPSILON_SWEEP {
                    let c = PipelineConfig {
                        epsilon: Some(k * config.spacing()),
                        ..config.clone()
                    };
                    match timed_prepare(&input.defective, &c) {
                        Ok(p) => rows.push(bench_one(input, &p, &c, es, Some(k), gt.as_ref())),
                        Err(e) => rows.push(BenchRow::failed(&input.name, Some(k), &e)),
                    }
                }
            }
        }
    }
    BenchReport { sweep, rows }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMode {
    NoThicken,
    NoUnary,
}

impl std::str::FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "no_thicken" => Ok(AblationMode::NoThicken),
            "no_unary" => Ok(AblationMode::NoUnary),
            _ => Err(Error::InvalidParameter(format!("unknown ablation mode `{s}`"))),
        }
    }
}

impl AblationMode {
    pub fn config(&self, base: &PipelineConfig) -> PipelineConfig {
        match self {
            AblationMode::NoThicken => PipelineConfig {
                epsilon: Some(0.1 * base.spacing()),
                ..base.clone()
            },
            AblationMode::NoUnary => PipelineConfig {
                unary: false,
                ..base.clone()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Watertight { validation: ValidationReport },
    /// Closed and manifold but split into more pieces than the full run.
    Fragmented { validation: ValidationReport, expected_components: usize },
    Defective { validation: ValidationReport },
    TrivialNoInterior,
    Failed { error: String },
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Watertight { .. } => "watertight",
            Outcome::Fragmented { .. } => "fragmented",
            Outcome::Defective { .. } => "defective",
            Outcome::TrivialNoInterior => "trivial: no interior region",
            Outcome::Failed { .. } => "failed",
        }
    }

    pub fn is_watertight_success(&self) -> bool {
        matches!(self, Outcome::Watertight { .. })
    }

    pub fn classify(r: &Result<RemeshRun>, expected_components: Option<usize>) -> Outcome {
        match r {
            Ok(run) if !run.report.is_watertight() => Outcome::Defective { validation: run.report },
            Ok(run) => match expected_components {
                Some(k) if run.report.connected_components > k => Outcome::Fragmented {
                    validation: run.report,
                    expected_components: k,
                },
                _ => Outcome::Watertight { validation: run.report },
            },
            Err(e) => match e.root() {
                Error::NoInteriorRegion | Error::EmptySolid => Outcome::TrivialNoInterior,
                _ => Outcome::Failed { error: e.to_string() },
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub mode: AblationMode,
    pub full: Outcome,
    pub ablated: Outcome,
}

impl AblationReport {
    pub fn to_key_value(&self) -> String {
        let mut s = format!(
            "mode={}\nfull_outcome={}\nablated_outcome={}\n",
            serde_json::to_value(self.mode).unwrap().as_str().unwrap_or(""),
            self.full.label(),
            self.ablated.label()
        );
        for (tag, o) in [("full", &self.full), ("ablated", &self.ablated)] {
            match o {
                Outcome::Watertight { validation } | Outcome::Fragmented { validation, .. } | Outcome::Defective { validation } => {
                    for line in validation.to_key_value().lines() {
                        let _ = writeln!(s, "{tag}_{line}");
                    }
                }
                Outcome::Failed { error } => {
                    let _ = writeln!(s, "{tag}_error={error}");
                }
                Outcome::TrivialNoInterior => {}
            }
        }
        s
    }
}

/// Runs the full configuration and the ablated one on the same input.
pub fn ablate(input: &TriangleMesh, mode: AblationMode, config: &PipelineConfig) -> AblationReport {
    let full_run = remesh_mesh(input, config, None);
    let full = Outcome::classify(&full_run, None);
    let expected = full_run.as_ref().ok().map(|r| r.report.connected_components);
    let ablated = Outcome::classify(&remesh_mesh(input, &mode.config(config), None), expected);
    AblationReport { mode, full, ablated }
}
