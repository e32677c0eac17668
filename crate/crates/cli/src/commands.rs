use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use splatprune::graph::{build_graph, write_sidecar, GraphMetadata};
use splatprune::metrics::{evaluate, ImagePair};
use splatprune::ply::{load_field, save_field};
use splatprune::pruner::{memory_report, prune_once, prune_schedule, MemoryReport, PruneMode, PruneReport};
use splatprune::raster::{render as render_field, CameraModel, RenderConfig, RenderStats};
use splatprune::synth::SceneSpec;
use splatprune::{Error, RgbImage};

use crate::config::{Effective, Settings};
use crate::Failure;

pub struct Context {
    pub settings: Settings,
    pub threads: usize,
    pub config_file: Option<PathBuf>,
}

fn write_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::input(format!("{}: {e}", path.display()))
}

/// Prints `value` as JSON and, if asked, writes the same text to `report`.
fn emit<T: Serialize>(value: &T, report: Option<&Path>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    // A closed pipe (`| head`) is not worth failing over.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    if let Some(path) = report {
        std::fs::write(path, text + "\n").map_err(|e| write_err(path, e))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Summary {
    path: PathBuf,
    count: usize,
    sh_degree: u8,
    bbox: Option<[[f64; 3]; 2]>,
    bytes: MemoryReport,
}

pub fn inspect(input: &Path, report: Option<&Path>) -> Result<(), Failure> {
    let field = load_field(input)?;
    emit(
        &Summary {
            path: input.to_path_buf(),
            count: field.len(),
            sh_degree: field.sh_degree(),
            bbox: field.bounding_box().map(|(lo, hi)| [lo, hi]),
            bytes: memory_report(&field),
        },
        report,
    )
}

#[derive(Serialize)]
struct PruneOutput<'a> {
    #[serde(flatten)]
    report: &'a PruneReport,
    config: Effective,
}

pub fn prune(ctx: &Context, inputs: &[PathBuf], output: &Path, report: Option<&Path>) -> Result<(), Failure> {
    let s = &ctx.settings;
    s.validate_graph()?;
    let cfg = s.prune_config();
    cfg.validate()?;
    if cfg.mode == PruneMode::OneShot && inputs.len() != 1 {
        return Err(Failure::config(format!(
            "one_shot mode takes exactly one input, got {}; use --mode continuous for snapshot sequences",
            inputs.len()
        )));
    }
    let fields = inputs.iter().map(load_field).collect::<Result<Vec<_>, Error>>()?;
    let (out, rep) = match cfg.mode {
        PruneMode::OneShot => prune_once(&fields[0], &cfg)?,
        PruneMode::Continuous => prune_schedule(&fields, &cfg)?,
    };
    save_field(&out, output)?;
    let effective = Effective {
        mode: cfg.mode,
        k: cfg.k,
        gamma: cfg.gamma,
        tau: cfg.tau,
        sigma: cfg.sigma,
        threshold: cfg.threshold,
        edge_cap: cfg.edge_cap,
        interval: cfg.interval,
        per_step_keep: cfg.per_step_keep,
        primitive_cap: cfg.primitive_cap,
        max_steps: cfg.max_steps,
        threads: ctx.threads,
        seed: s.seed,
        config_file: ctx.config_file.clone(),
        inputs: inputs.to_vec(),
        output: output.to_path_buf(),
    };
    emit(&PruneOutput { report: &rep, config: effective }, report)
}

#[derive(Serialize)]
struct RenderSummary {
    width: usize,
    height: usize,
    primitives: usize,
    stats: RenderStats,
    mean_alpha: f64,
}

pub fn render(ctx: &Context, input: &Path, output: &Path, raw: Option<&Path>) -> Result<(), Failure> {
    let cam_path = ctx
        .settings
        .camera
        .as_deref()
        .ok_or_else(|| Failure::config("render needs --camera"))?;
    let mut cam = CameraModel::load(cam_path)?;
    if let Some(size) = ctx.settings.size {
        cam = cam.with_size(size.width, size.height);
    }
    let field = load_field(input)?;
    let target = render_field(&field, &cam, &RenderConfig::default());
    target.rgb.save_png(output)?;
    if let Some(raw) = raw {
        target.rgb.save_raw(raw)?;
    }
    let mean_alpha = target.alpha.iter().map(|&a| a as f64).sum::<f64>() / target.alpha.len().max(1) as f64;
    emit(
        &RenderSummary {
            width: cam.width,
            height: cam.height,
            primitives: field.len(),
            stats: target.stats,
            mean_alpha,
        },
        None,
    )
}

pub fn eval(reference: &Path, candidate: &Path, report: Option<&Path>) -> Result<(), Failure> {
    let a = RgbImage::load(reference)?;
    let b = RgbImage::load(candidate)?;
    let record = evaluate(&ImagePair::new(&a, &b)?)?;
    emit(&record, report)
}

#[derive(Serialize)]
struct SynthSummary {
    spec: SceneSpec,
    count: usize,
    cluster_fraction: f64,
}

pub fn synth(
    ctx: &Context,
    plane: usize,
    cluster: usize,
    output: &Path,
    camera_out: Option<&Path>,
    regions_out: Option<&Path>,
) -> Result<(), Failure> {
    let spec = SceneSpec {
        seed: ctx.settings.seed.unwrap_or(0),
        ..SceneSpec::with_counts(plane, cluster)
    };
    let scene = spec.generate()?;
    save_field(&scene.field, output)?;
    if let Some(path) = camera_out {
        let (w, h) = ctx.settings.size.map_or((256, 256), |s| (s.width, s.height));
        let cam = spec.held_out_camera(w, h)?;
        std::fs::write(path, cam.to_json()).map_err(|e| write_err(path, e))?;
    }
    if let Some(path) = regions_out {
        let text = serde_json::to_string(&scene.regions).expect("labels serialize");
        std::fs::write(path, text).map_err(|e| write_err(path, e))?;
    }
    emit(
        &SynthSummary {
            count: scene.field.len(),
            cluster_fraction: scene.cluster_fraction(),
            spec,
        },
        None,
    )
}

#[derive(Serialize)]
struct GraphSummary {
    nodes: usize,
    #[serde(flatten)]
    meta: GraphMetadata,
    sidecar: PathBuf,
}

pub fn graph(ctx: &Context, input: &Path, output: &Path, report: Option<&Path>) -> Result<(), Failure> {
    ctx.settings.validate_graph()?;
    let field = load_field(input)?;
    let g = build_graph(&field, &ctx.settings.graph_config())?;
    let file = File::create(output).map_err(|e| write_err(output, e))?;
    write_sidecar(&g, BufWriter::new(file)).map_err(|e| write_err(output, e))?;
    emit(
        &GraphSummary {
            nodes: g.node_count(),
            meta: g.metadata(),
            sidecar: output.to_path_buf(),
        },
        report,
    )
}
