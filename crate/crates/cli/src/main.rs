use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tetcut::evalkit::{virtual_scan_gt, DEFAULT_RAYS_PER_VIEW, DEFAULT_SAMPLES, DEFAULT_TAU, DEFAULT_VIEWS};
use tetcut::mesh::{load_mesh, save_mesh, validate, write_ply_points};
use tetcut::pipeline::{
    ablate, bench, load_bench_inputs, remesh, run_json, run_report, AblationMode, EvalSettings, PipelineConfig, SweepKind,
};
use tetcut::synth::{apply_defect, read_manifest, synthetic_corpus, write_corpus, DefectKind, DefectSpec};

const THREADS_ENV: &str = "TETCUT_THREADS";

const EXIT_FAILURE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_STAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "tetcut", version, about = "Watertight remeshing of defective triangle meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Remesh one input into a watertight surface.
    Remesh {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// JSON report path (default: <output>.report.json).
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Print watertightness and manifoldness counts for a mesh.
    Validate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Geometric metrics of a prediction against a reference mesh.
    Metrics {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_VIEWS)]
        views: usize,
        #[arg(long, default_value_t = DEFAULT_RAYS_PER_VIEW)]
        rays_per_view: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Virtual-scan a mesh into a PLY point cloud of its visible surface.
    ScanGt {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_VIEWS)]
        views: usize,
        #[arg(long, default_value_t = DEFAULT_RAYS_PER_VIEW)]
        rays_per_view: usize,
    },
    /// Damage a mesh, or write the synthetic corpus with --corpus.
    Synth {
        #[arg(long, value_enum, default_value_t = Kind::Holes)]
        kind: Kind,
        #[arg(long, default_value_t = 8)]
        count: u32,
        /// Hole radius bounds in input units (default 4% and 7% of the
        /// longest bounding-box side).
        #[arg(long)]
        rmin: Option<f64>,
        #[arg(long)]
        rmax: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, required_unless_present = "corpus")]
        input: Option<PathBuf>,
        #[arg(long, required_unless_present = "corpus")]
        out: Option<PathBuf>,
        /// Directory for the 20-model corpus and its manifest.
        #[arg(long, conflicts_with_all = ["input", "out"])]
        corpus: Option<PathBuf>,
    },
    /// Run the pipeline over a corpus manifest and write a table report.
    Bench {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, value_enum, default_value_t = Sweep::None)]
        sweep: Sweep,
        /// Skip geometric metrics (validation counts and timings only).
        #[arg(long)]
        no_metrics: bool,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_VIEWS)]
        views: usize,
        #[arg(long, default_value_t = DEFAULT_RAYS_PER_VIEW)]
        rays_per_view: usize,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Compare the full pipeline with an ablated variant on one input.
    Ablate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
}

#[derive(Args, Default)]
struct PipelineArgs {
    /// key=value file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    resolution: Option<usize>,
    /// Shell half-width in normalized units (default 1/resolution).
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    lambda_fill: Option<f64>,
    #[arg(long)]
    decimate_ratio: Option<f64>,
    #[arg(long)]
    anchor_expansion: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write every intermediate artifact to <output>.stages/.
    #[arg(long)]
    stage_dump: bool,
}

impl PipelineArgs {
    fn resolve(&self) -> anyhow::Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::from_file(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.resolution {
            c.resolution = v;
        }
        if let Some(v) = self.epsilon {
            c.epsilon = Some(v);
        }
        if let Some(v) = self.lambda_fill {
            c.lambda_fill = v;
        }
        if let Some(v) = self.decimate_ratio {
            c.decimate_ratio = v;
        }
        if let Some(v) = self.anchor_expansion {
            c.anchor_expansion = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if self.stage_dump {
            c.stage_dump = true;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Holes,
    StripeDropout,
    SingleLayer,
    SelfIntersect,
    Mixture,
}

impl From<Kind> for DefectKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Holes => DefectKind::Holes,
            Kind::StripeDropout => DefectKind::StripeDropout,
            Kind::SingleLayer => DefectKind::SingleLayer,
            Kind::SelfIntersect => DefectKind::SelfIntersect,
            Kind::Mixture => DefectKind::Mixture,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Sweep {
    None,
    Lambda,
    Epsilon,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    NoThicken,
    NoUnary,
}

/// Error carrying the process exit code.
struct Exit(u8, anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Exit {
    fn from(e: E) -> Self {
        let e = e.into();
        let code = match e.downcast_ref::<tetcut::Error>() {
            Some(tetcut::Error::Stage { .. }) => EXIT_STAGE,
            _ => EXIT_FAILURE,
        };
        Exit(code, e)
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn run(cli: Cli) -> Result<(), Exit> {
    match cli.command {
        Command::Remesh { input, output, json, pipeline } => {
            let config = pipeline.resolve()?;
            let r = remesh(&input, &output, &config)?;
            print!("{}", run_report(&r, &config));
            write_json(&json.unwrap_or_else(|| with_suffix(&output, ".report.json")), &run_json(&r, &config))?;
            if !validate(&load_mesh(&output)?).is_watertight() {
                return Err(Exit(EXIT_VALIDATION, anyhow::anyhow!("written output failed validation")));
            }
        }
        Command::Validate { input, json } => {
            let mesh = load_mesh(&input)?;
            let report = validate(&mesh);
            print!("{}", report.to_key_value());
            if let Some(j) = json {
                write_json(&j, &report)?;
            }
            if !report.is_watertight() {
                return Err(Exit(EXIT_FAILURE, anyhow::anyhow!("mesh is not watertight")));
            }
        }
        Command::Metrics {
            pred,
            gt,
            tau,
            samples,
            views,
            rays_per_view,
            seed,
            json,
        } => {
            let pred = load_mesh(&pred)?;
            let gt = load_mesh(&gt)?;
            let eval = EvalSettings {
                samples,
                views,
                rays_per_view,
                tau,
            };
            let m = tetcut::pipeline::evaluate(&pred, &gt, &eval, seed)?;
            print!("{}", m.to_key_value());
            if let Some(j) = json {
                write_json(&j, &m)?;
            }
        }
        Command::ScanGt {
            input,
            out,
            views,
            rays_per_view,
        } => {
            let mesh = load_mesh(&input)?;
            let cloud = virtual_scan_gt(&mesh, views, rays_per_view)?;
            write_ply_points(&cloud.points, &cloud.normals, &out)?;
            println!("points={}", cloud.len());
        }
        Command::Synth {
            kind,
            count,
            rmin,
            rmax,
            seed,
            input,
            out,
            corpus,
        } => {
            if let Some(dir) = corpus {
                let models = synthetic_corpus(seed)?;
                let entries = write_corpus(&dir, &models)?;
                println!("models={}\nmanifest={}", entries.len(), dir.join("manifest.tsv").display());
                return Ok(());
            }
            let (Some(input), Some(out)) = (input, out) else {
                return Err(anyhow::anyhow!("--input and --out are required").into());
            };
            let mesh = load_mesh(&input)?;
            let longest = mesh.bounding_box().extent().max();
            let spec = DefectSpec::new(kind.into(), count, (rmin.unwrap_or(0.04 * longest), rmax.unwrap_or(0.07 * longest)), seed)?;
            let damaged = apply_defect(&mesh, &spec)?;
            save_mesh(&damaged, &out)?;
            let report = validate(&damaged);
            println!("spec={spec}");
            print!("{}", report.to_key_value());
            println!("boundary_loops={}", tetcut::mesh::boundary_loop_count(&damaged));
        }
        Command::Bench {
            manifest,
            report,
            sweep,
            no_metrics,
            samples,
            views,
            rays_per_view,
            tau,
            pipeline,
        } => {
            let config = pipeline.resolve()?;
            let entries = read_manifest(&manifest)?;
            if entries.is_empty() {
                return Err(anyhow::anyhow!("manifest {} lists no models", manifest.display()).into());
            }
            let inputs = load_bench_inputs(&entries);
            let eval = EvalSettings {
                samples,
                views,
                rays_per_view,
                tau,
            };
            let sweep = match sweep {
                Sweep::None => SweepKind::None,
                Sweep::Lambda => SweepKind::Lambda,
                Sweep::Epsilon => SweepKind::Epsilon,
            };
            let r = bench(&inputs, &config, (!no_metrics).then_some(&eval), sweep);
            let text = r.to_text();
            std::fs::write(&report, &text).with_context(|| format!("writing {}", report.display()))?;
            write_json(
                &with_suffix(&report, ".json"),
                &serde_json::json!({ "config": config, "summary": r.summary(None), "report": r }),
            )?;
            print!("{text}");
        }
        Command::Ablate { input, mode, json, pipeline } => {
            let config = pipeline.resolve()?;
            let mesh = load_mesh(&input)?;
            let mode = match mode {
                Mode::NoThicken => AblationMode::NoThicken,
                Mode::NoUnary => AblationMode::NoUnary,
            };
            let r = ablate(&mesh, mode, &config);
            print!("{}", r.to_key_value());
            if let Some(j) = json {
                write_json(&j, &r)?;
            }
        }
    }
    Ok(())
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV}={v} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FAILURE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_FAILURE);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Exit(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
