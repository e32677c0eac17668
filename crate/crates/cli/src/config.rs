//! Run settings: built-in defaults, a `key = value` config file, and flags,
//! in increasing order of precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::Serialize;
use splatprune::graph::{GraphConfig, ThresholdMode, DEFAULT_EDGE_CAP};
use splatprune::pruner::{PruneConfig, PruneMode};

use crate::Failure;

/// Image size given as `WxH`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Size {
    pub width: usize,
    pub height: usize,
}

impl FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("size `{s}` is not of the form WxH"))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("size `{s}`: {e}"));
        let size = Size {
            width: parse(w)?,
            height: parse(h)?,
        };
        if size.width == 0 || size.height == 0 {
            return Err(format!("size `{s}` has a zero dimension"));
        }
        Ok(size)
    }
}

pub fn parse_mode(s: &str) -> Result<PruneMode, String> {
    match s {
        "one_shot" | "one-shot" | "oneshot" => Ok(PruneMode::OneShot),
        "continuous" => Ok(PruneMode::Continuous),
        _ => Err(format!("unknown mode `{s}` (one_shot or continuous)")),
    }
}

pub fn parse_threshold(s: &str) -> Result<ThresholdMode, String> {
    match s {
        "distance" => Ok(ThresholdMode::Distance),
        "squared_distance" | "squared-distance" => Ok(ThresholdMode::SquaredDistance),
        _ => Err(format!("unknown threshold `{s}` (distance or squared_distance)")),
    }
}

/// Every tunable setting. Flags and the config file both fill one of
/// these; `None` means "not given here".
#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct Settings {
    /// Fraction of primitives kept by a one-shot prune, in (0, 1]
    #[arg(long, global = true)]
    pub k: Option<f64>,
    /// Share of the kept budget drawn from the high-pass ranking, in [0, 1]
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Edge threshold; default is 10x the minimum nearest-neighbour distance
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// Gaussian kernel width; default is the spread of edge lengths
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Whether tau bounds the distance or the squared distance
    #[arg(long, global = true, value_parser = parse_threshold)]
    pub threshold: Option<ThresholdMode>,
    /// Refuse to build graphs with more edges than this
    #[arg(long, global = true)]
    pub edge_cap: Option<u64>,
    /// one_shot or continuous
    #[arg(long, global = true, value_parser = parse_mode)]
    pub mode: Option<PruneMode>,
    /// Snapshots between prunes in continuous mode
    #[arg(long, global = true)]
    pub interval: Option<usize>,
    /// Fraction of live primitives kept at each continuous prune
    #[arg(long, global = true)]
    pub per_step_keep: Option<f64>,
    /// Upper bound on the primitives kept by any prune
    #[arg(long, global = true)]
    pub cap: Option<usize>,
    /// Stop the continuous schedule after this many snapshots
    #[arg(long, global = true)]
    pub max_steps: Option<usize>,
    /// Camera JSON for rendering
    #[arg(long, global = true)]
    pub camera: Option<PathBuf>,
    /// Output image size, WxH; rescales the camera intrinsics
    #[arg(long, global = true)]
    #[serde(skip)]
    pub size: Option<Size>,
    /// Worker threads; default is all available cores
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Reserved; the pipeline itself is deterministic
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr, $($f:ident),*) => {
        Settings { $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl Settings {
    /// Fields set in `self` win over `lower`.
    pub fn over(self, lower: Settings) -> Settings {
        overlay!(
            self, lower, k, gamma, tau, sigma, threshold, edge_cap, mode, interval, per_step_keep, cap,
            max_steps, camera, size, threads, seed
        )
    }

    pub fn from_file(path: &Path) -> Result<Settings, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
    }

    /// Parses `key = value` lines. Keys are the long flag names, with `-`
    /// or `_`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Settings, String> {
        let mut seen = BTreeMap::new();
        let mut s = Settings::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", no + 1))?;
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            if seen.insert(key.clone(), no + 1).is_some() {
                return Err(format!("line {}: `{key}` given twice", no + 1));
            }
            let bad = |e: String| format!("line {}: {key}: {e}", no + 1);
            fn num<T: FromStr>(v: &str) -> Result<T, String>
            where
                T::Err: std::fmt::Display,
            {
                v.parse().map_err(|e: T::Err| e.to_string())
            }
            match key.as_str() {
                "k" => s.k = Some(num(value).map_err(bad)?),
                "gamma" => s.gamma = Some(num(value).map_err(bad)?),
                "tau" => s.tau = Some(num(value).map_err(bad)?),
                "sigma" => s.sigma = Some(num(value).map_err(bad)?),
                "threshold" => s.threshold = Some(parse_threshold(value).map_err(bad)?),
                "edge_cap" => s.edge_cap = Some(num(value).map_err(bad)?),
                "mode" => s.mode = Some(parse_mode(value).map_err(bad)?),
                "interval" => s.interval = Some(num(value).map_err(bad)?),
                "per_step_keep" => s.per_step_keep = Some(num(value).map_err(bad)?),
                "cap" => s.cap = Some(num(value).map_err(bad)?),
                "max_steps" => s.max_steps = Some(num(value).map_err(bad)?),
                "camera" => s.camera = Some(PathBuf::from(value)),
                "size" => s.size = Some(value.parse().map_err(bad)?),
                "threads" => s.threads = Some(num(value).map_err(bad)?),
                "seed" => s.seed = Some(num(value).map_err(bad)?),
                _ => return Err(format!("line {}: unknown key `{key}`", no + 1)),
            }
        }
        Ok(s)
    }

    pub fn prune_config(&self) -> PruneConfig {
        let d = PruneConfig::default();
        PruneConfig {
            k: self.k.unwrap_or(d.k),
            gamma: self.gamma.unwrap_or(d.gamma),
            tau: self.tau,
            sigma: self.sigma,
            threshold: self.threshold.unwrap_or(d.threshold),
            edge_cap: self.edge_cap.unwrap_or(d.edge_cap),
            mode: self.mode.unwrap_or(d.mode),
            interval: self.interval.unwrap_or(d.interval),
            per_step_keep: self.per_step_keep.unwrap_or(d.per_step_keep),
            max_steps: self.max_steps,
            primitive_cap: self.cap,
        }
    }

    pub fn graph_config(&self) -> GraphConfig {
        GraphConfig {
            tau: self.tau,
            sigma: self.sigma,
            threshold: self.threshold.unwrap_or_default(),
            edge_cap: self.edge_cap.unwrap_or(DEFAULT_EDGE_CAP),
            ..Default::default()
        }
    }

    pub fn validate_graph(&self) -> Result<(), Failure> {
        for (name, v) in [("tau", self.tau), ("sigma", self.sigma)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Failure::config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }
}

/// Effective prune settings, echoed into the report.
#[derive(Debug, Serialize)]
pub struct Effective {
    pub mode: PruneMode,
    pub k: f64,
    pub gamma: f64,
    /// `None` means derived from the data.
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub threshold: ThresholdMode,
    pub edge_cap: u64,
    pub interval: usize,
    pub per_step_keep: f64,
    pub primitive_cap: Option<usize>,
    pub max_steps: Option<usize>,
    pub threads: usize,
    pub seed: Option<u64>,
    pub config_file: Option<PathBuf>,
    pub inputs: Vec<PathBuf>,
    pub output: PathBuf,
}
