use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use motcup::conformal::{calibrate, ONE_SIGMA_ALPHA};
use motcup::io::{
    read_detections, read_gt, read_quantiles, read_tracks, write_detections, write_gt, write_quantiles,
    write_tracks, RunConfig,
};
use motcup::metrics::{evaluate_detections, evaluate_tracks, EvalReport};
use motcup::simgen::generate_scene;
use motcup::tracker::{run_scene, BaseKind, TrackerConfig};
use motcup::{QuantileSet, SceneMeta};

#[derive(Parser, Debug)]
#[command(name = "motcup", version, about = "Tracking with calibrated detection uncertainty")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic scene: ground truth and detections.
    Simulate(SimulateArgs),
    /// Fit per-variable conformal quantiles on a calibration scene.
    Calibrate(CalibrateArgs),
    /// Run the tracker over a detection file.
    Track(TrackArgs),
    /// Score tracks (or raw detections) against ground truth.
    Evaluate(EvaluateArgs),
    /// Run every meaningful component toggle combination over one scene.
    Ablate(AblateArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// TOML run config; its [scenario] section is used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Detection file to write.
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth file to write.
    #[arg(long)]
    gt: PathBuf,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Error rate; the default makes the rescaled σ a one-sigma interval.
    #[arg(long, default_value_t = ONE_SIGMA_ALPHA)]
    alpha: f64,
    /// IoU needed to pair a detection with ground truth.
    #[arg(long, default_value_t = 0.5)]
    iou: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct TrackerFlags {
    /// TOML run config; its [tracker] section is used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = ["sort", "bytetrack"])]
    tracker: Option<String>,
    #[arg(long, overrides_with = "no_cp")]
    cp: bool,
    #[arg(long)]
    no_cp: bool,
    #[arg(long, overrides_with = "no_sdkf")]
    sdkf: bool,
    #[arg(long)]
    no_sdkf: bool,
    #[arg(long, overrides_with = "no_nllai")]
    nllai: bool,
    #[arg(long)]
    no_nllai: bool,
    /// NLL gate of the recovery pass.
    #[arg(long)]
    tau: Option<f64>,
    /// IoU threshold of the base association.
    #[arg(long)]
    iou: Option<f64>,
    #[arg(long)]
    quantiles: Option<PathBuf>,
}

fn toggle(on: bool, off: bool) -> Option<bool> {
    match (on, off) {
        (true, _) => Some(true),
        (_, true) => Some(false),
        _ => None,
    }
}

impl TrackerFlags {
    fn resolve(&self) -> anyhow::Result<TrackerConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_toml(&read(p)?)
                .with_context(|| format!("config {}", p.display()))?
                .tracker,
            None => TrackerConfig::default(),
        };
        if let Some(t) = &self.tracker {
            let base: BaseKind = t.parse()?;
            if base != cfg.base && self.tau.is_none() {
                cfg.tau = base.default_tau();
            }
            cfg.base = base;
        }
        if let Some(v) = toggle(self.cp, self.no_cp) {
            cfg.use_cp = v;
        }
        if let Some(v) = toggle(self.sdkf, self.no_sdkf) {
            cfg.use_sdkf = v;
        }
        if let Some(v) = toggle(self.nllai, self.no_nllai) {
            cfg.use_nllai = v;
        }
        if let Some(t) = self.tau {
            cfg.tau = t;
        }
        if let Some(i) = self.iou {
            cfg.iou_threshold = i;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn quantiles(&self, needed: bool) -> anyhow::Result<Option<QuantileSet>> {
        match &self.quantiles {
            Some(p) => Ok(Some(
                read_quantiles(&read(p)?).with_context(|| format!("quantile file {}", p.display()))?,
            )),
            None if needed => bail!("conformal rectification is on but no --quantiles file was given"),
            None => Ok(None),
        }
    }
}

#[derive(Args, Debug)]
struct TrackArgs {
    #[arg(long)]
    detections: PathBuf,
    #[command(flatten)]
    flags: TrackerFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, required_unless_present = "detections_mode")]
    tracks: Option<PathBuf>,
    /// Score raw detections instead of tracks.
    #[arg(long, requires = "detections")]
    detections_mode: bool,
    #[arg(long)]
    detections: Option<PathBuf>,
    /// Applied to detections before scoring in detection mode.
    #[arg(long)]
    quantiles: Option<PathBuf>,
    /// CLEAR matching threshold.
    #[arg(long, default_value_t = 0.5)]
    iou: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AblateArgs {
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[command(flatten)]
    flags: TrackerFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    args: Vec<String>,
    config: Option<String>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    seed: Option<u64>,
    duration_secs: f64,
    version: &'a str,
}

#[derive(Serialize)]
struct AblationRow {
    cp: bool,
    sdkf: bool,
    nllai: bool,
    report: EvalReport,
}

/// Failure with data, as opposed to a usage error.
#[derive(Debug)]
struct DataError(anyhow::Error);

fn read(p: &Path) -> anyhow::Result<String> {
    fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))
}

fn write(p: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))
}

fn sidecar(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

fn paths(ps: &[&Option<PathBuf>]) -> Vec<String> {
    ps.iter()
        .filter_map(|p| p.as_ref().map(|p| p.display().to_string()))
        .collect()
}

fn load_scene(p: &Path) -> anyhow::Result<motcup::Scene> {
    read_detections(&read(p)?, SceneMeta::default()).with_context(|| format!("detection file {}", p.display()))
}

fn load_gt(p: &Path) -> anyhow::Result<Vec<motcup::GtObject>> {
    read_gt(&read(p)?).with_context(|| format!("ground-truth file {}", p.display()))
}

struct Outcome {
    config: Option<PathBuf>,
    inputs: Vec<String>,
    outputs: Vec<PathBuf>,
    seed: Option<u64>,
}

fn simulate(a: &SimulateArgs) -> anyhow::Result<Outcome> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::from_toml(&read(p)?)
            .with_context(|| format!("config {}", p.display()))?
            .scenario,
        None => Default::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let (gt, scene) = generate_scene(&cfg)?;
    write(&a.gt, &write_gt(&gt))?;
    write(&a.out, &write_detections(&scene))?;
    Ok(Outcome {
        config: a.config.clone(),
        inputs: vec![],
        outputs: vec![a.out.clone(), a.gt.clone()],
        seed: Some(cfg.seed),
    })
}

fn calibrate_cmd(a: &CalibrateArgs) -> anyhow::Result<Outcome> {
    let scene = load_scene(&a.detections)?;
    let gt = load_gt(&a.gt)?;
    let q = calibrate(&scene, &gt, a.alpha, a.iou)?;
    if q.clamped.iter().any(|c| *c) {
        eprintln!("warning: calibration set too small for alpha {}; quantiles clamped to the maximum score", a.alpha);
    }
    write(&a.out, &write_quantiles(&q))?;
    Ok(Outcome {
        config: None,
        inputs: paths(&[&Some(a.detections.clone()), &Some(a.gt.clone())]),
        outputs: vec![a.out.clone()],
        seed: None,
    })
}

fn track(a: &TrackArgs) -> anyhow::Result<Outcome> {
    let cfg = a.flags.resolve()?;
    let q = a.flags.quantiles(cfg.use_cp)?;
    let scene = load_scene(&a.detections)?;
    let (records, timings) = run_scene(&scene, &cfg, q.as_ref())?;
    write(&a.out, &write_tracks(&records))?;
    let timing_path = sidecar(&a.out, ".timings.json");
    write(&timing_path, &to_json(&timings))?;
    Ok(Outcome {
        config: a.flags.config.clone(),
        inputs: paths(&[&Some(a.detections.clone()), &a.flags.quantiles]),
        outputs: vec![a.out.clone(), timing_path],
        seed: None,
    })
}

fn evaluate(a: &EvaluateArgs) -> anyhow::Result<Outcome> {
    let gt = load_gt(&a.gt)?;
    let report = if a.detections_mode {
        let det_path = a.detections.as_ref().expect("clap enforces --detections");
        let scene = load_scene(det_path)?;
        let q = match &a.quantiles {
            Some(p) => Some(read_quantiles(&read(p)?).with_context(|| format!("quantile file {}", p.display()))?),
            None => None,
        };
        evaluate_detections(&gt, &scene, q.as_ref())?
    } else {
        let tp = a.tracks.as_ref().expect("clap enforces --tracks");
        let records = read_tracks(&read(tp)?).with_context(|| format!("track file {}", tp.display()))?;
        let timing_path = sidecar(tp, ".timings.json");
        let timings: Option<Vec<f64>> = if timing_path.exists() {
            Some(serde_json::from_str(&read(&timing_path)?).with_context(|| format!("timing file {}", timing_path.display()))?)
        } else {
            None
        };
        evaluate_tracks(&gt, &records, a.iou, timings.as_deref())?
    };
    write(&a.out, &to_json(&report))?;
    Ok(Outcome {
        config: None,
        inputs: paths(&[&Some(a.gt.clone()), &a.tracks, &a.detections, &a.quantiles]),
        outputs: vec![a.out.clone()],
        seed: None,
    })
}

/// The 2³ toggle grid minus the CP-only cell, which tracks identically to
/// the all-off cell because rectified σ feeds only SDKF and NLLAI.
fn ablation_grid() -> Vec<(bool, bool, bool)> {
    let mut grid = Vec::new();
    for cp in [false, true] {
        for sdkf in [false, true] {
            for nllai in [false, true] {
                if cp && !sdkf && !nllai {
                    continue;
                }
                grid.push((cp, sdkf, nllai));
            }
        }
    }
    grid
}

fn ablate(a: &AblateArgs) -> anyhow::Result<Outcome> {
    let base_cfg = a.flags.resolve()?;
    let q = a.flags.quantiles(true)?;
    let scene = load_scene(&a.detections)?;
    let gt = load_gt(&a.gt)?;
    let mut rows = Vec::new();
    for (cp, sdkf, nllai) in ablation_grid() {
        let cfg = TrackerConfig {
            use_cp: cp,
            use_sdkf: sdkf,
            use_nllai: nllai,
            ..base_cfg.clone()
        };
        let (records, timings) = run_scene(&scene, &cfg, q.as_ref())?;
        let report = evaluate_tracks(&gt, &records, 0.5, Some(&timings))?;
        rows.push(AblationRow { cp, sdkf, nllai, report });
    }
    write(&a.out, &to_json(&rows))?;
    Ok(Outcome {
        config: a.flags.config.clone(),
        inputs: paths(&[&Some(a.detections.clone()), &Some(a.gt.clone()), &a.flags.quantiles]),
        outputs: vec![a.out.clone()],
        seed: None,
    })
}

fn run(cli: &Cli) -> Result<(), DataError> {
    let start = Instant::now();
    let (name, result, out) = match &cli.command {
        Command::Simulate(a) => ("simulate", simulate(a), &a.out),
        Command::Calibrate(a) => ("calibrate", calibrate_cmd(a), &a.out),
        Command::Track(a) => ("track", track(a), &a.out),
        Command::Evaluate(a) => ("evaluate", evaluate(a), &a.out),
        Command::Ablate(a) => ("ablate", ablate(a), &a.out),
    };
    let outcome = result.map_err(DataError)?;
    let manifest = Manifest {
        command: name,
        args: std::env::args().collect(),
        config: outcome.config.map(|p| p.display().to_string()),
        inputs: outcome.inputs,
        outputs: outcome.outputs.iter().map(|p| p.display().to_string()).collect(),
        seed: outcome.seed,
        duration_secs: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION"),
    };
    write(&sidecar(out, ".manifest.json"), &to_json(&manifest)).map_err(DataError)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(DataError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
