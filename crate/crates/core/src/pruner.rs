//! One-shot and scheduled spectral pruning of Gaussian fields.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{response_magnitudes, round_count, select_count, FilterKind, PruneSelection};
use crate::graph::{build_graph, GraphConfig, ThresholdMode, DEFAULT_EDGE_CAP};
use crate::model::GaussianField;
use crate::ply;
use crate::signal::GraphSignal;

/// Band split used unless configured otherwise.
pub const DEFAULT_GAMMA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneMode {
    #[default]
    OneShot,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneConfig {
    pub k: f64,
    pub gamma: f64,
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub threshold: ThresholdMode,
    pub edge_cap: u64,
    pub mode: PruneMode,
    /// Steps between prunes in continuous mode.
    pub interval: usize,
    /// Fraction of the live primitives retained at each continuous prune.
    pub per_step_keep: f64,
    /// Upper bound on the number of schedule steps consumed.
    pub max_steps: Option<usize>,
    /// Hard cap on the count kept by any prune.
    pub primitive_cap: Option<usize>,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            k: 0.1,
            gamma: DEFAULT_GAMMA,
            tau: None,
            sigma: None,
            threshold: ThresholdMode::Distance,
            edge_cap: DEFAULT_EDGE_CAP,
            mode: PruneMode::OneShot,
            interval: 1,
            per_step_keep: 0.7,
            max_steps: None,
            primitive_cap: None,
        }
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<()> {
        let frac = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in (0, 1], got {v}")))
            }
        };
        frac("k", self.k)?;
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        if self.mode == PruneMode::Continuous {
            frac("per_step_keep", self.per_step_keep)?;
            if self.interval == 0 {
                return Err(Error::Config("interval must be at least 1".into()));
            }
        }
        Ok(())
    }

    fn graph_config(&self) -> GraphConfig {
        GraphConfig {
            tau: self.tau,
            sigma: self.sigma,
            threshold: self.threshold,
            edge_cap: self.edge_cap,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub mode: PruneMode,
    pub k: f64,
    pub gamma: f64,
    /// τ and σ of the last graph built; `None` if no graph was needed.
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub before_count: usize,
    pub after_count: usize,
    pub peak_count: usize,
    pub per_step_counts: Vec<usize>,
    pub bytes_before: u64,
    pub bytes_after: u64,
    /// Wall-clock seconds per phase, summed over steps.
    pub timings: BTreeMap<String, f64>,
}

/// Byte accounting for a field as it would be written to disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryReport {
    pub count: usize,
    pub header_bytes: u64,
    pub payload_bytes: u64,
    pub total_bytes: u64,
}

pub fn memory_report(field: &GaussianField) -> MemoryReport {
    let header_bytes = ply::header_string(field.len(), field.sh_degree()).len() as u64;
    let payload_bytes = ply::payload_bytes(field.len(), field.sh_degree());
    MemoryReport {
        count: field.len(),
        header_bytes,
        payload_bytes,
        total_bytes: header_bytes + payload_bytes,
    }
}

struct Timer<'a>(&'a mut BTreeMap<String, f64>);

impl Timer<'_> {
    fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        *self.0.entry(phase.to_owned()).or_default() += t.elapsed().as_secs_f64();
        out
    }
}

struct StepOutcome {
    selection: PruneSelection,
    tau: f64,
    sigma: f64,
}

/// Graph → high-pass response on centers → band-limited selection of `m`.
fn spectral_select(
    field: &GaussianField,
    m: usize,
    cfg: &PruneConfig,
    timings: &mut BTreeMap<String, f64>,
) -> Result<StepOutcome> {
    let mut t = Timer(timings);
    let graph = t.time("graph", || build_graph(field, &cfg.graph_config()))?;
    let resp = t.time("filter", || {
        response_magnitudes(&graph, &GraphSignal::from_points(&field.centers()), FilterKind::HighPass)
    })?;
    let selection = t.time("select", || select_count(&resp, m, cfg.gamma))?;
    Ok(StepOutcome {
        selection,
        tau: graph.tau(),
        sigma: graph.sigma(),
    })
}

fn target_count(n: usize, keep: f64, cap: Option<usize>) -> usize {
    let m = round_count(keep, n);
    cap.map_or(m, |c| m.min(c))
}

/// Selects which primitives a one-shot prune keeps, without compacting.
pub fn select_once(field: &GaussianField, cfg: &PruneConfig) -> Result<PruneSelection> {
    cfg.validate()?;
    let m = target_count(field.len(), cfg.k, cfg.primitive_cap);
    let mut sel = spectral_select(field, m, cfg, &mut BTreeMap::new())?.selection;
    sel.k = cfg.k;
    Ok(sel)
}

/// Prunes a converged field once, keeping `round(k·n)` primitives.
pub fn prune_once(field: &GaussianField, cfg: &PruneConfig) -> Result<(GaussianField, PruneReport)> {
    cfg.validate()?;
    if cfg.mode != PruneMode::OneShot {
        return Err(Error::Config("prune_once requires mode = one_shot".into()));
    }
    if field.is_empty() {
        return Err(Error::Degenerate("cannot prune an empty field".into()));
    }
    let n = field.len();
    let m = target_count(n, cfg.k, cfg.primitive_cap);
    if m == 0 {
        return Err(Error::EmptySelection { k: cfg.k, n });
    }
    let mut timings = BTreeMap::new();
    let step = spectral_select(field, m, cfg, &mut timings)?;
    let out = Timer(&mut timings).time("compact", || field.select(&step.selection.kept))?;
    let report = PruneReport {
        mode: PruneMode::OneShot,
        k: cfg.k,
        gamma: cfg.gamma,
        tau: Some(step.tau),
        sigma: Some(step.sigma),
        before_count: n,
        after_count: out.len(),
        peak_count: n,
        per_step_counts: vec![n, out.len()],
        bytes_before: memory_report(field).payload_bytes,
        bytes_after: memory_report(&out).payload_bytes,
        timings,
    };
    Ok((out, report))
}

/// Continuous pruning over a sequence of snapshots from an external trainer.
///
/// Snapshot `s` is read as the trainer's state at step `s`: index `i` names
/// the same primitive in every snapshot that contains it, and indices past
/// the previous snapshot's length are newly densified primitives. The
/// schedule tracks which indices are still alive; whenever `s` is a multiple
/// of `interval` the live primitives are pruned to `round(per_step_keep · live)`
/// with the spectral pipeline, rebuilding the graph from scratch.
///
/// `per_step_counts` starts with the first snapshot's size and then records
/// the live count at the end of every step.
pub fn prune_schedule(
    snapshots: &[GaussianField],
    cfg: &PruneConfig,
) -> Result<(GaussianField, PruneReport)> {
    cfg.validate()?;
    if cfg.mode != PruneMode::Continuous {
        return Err(Error::Config("prune_schedule requires mode = continuous".into()));
    }
    if snapshots.is_empty() {
        return Err(Error::Degenerate("no snapshots supplied".into()));
    }
    let steps = cfg.max_steps.map_or(snapshots.len(), |s| s.min(snapshots.len()));
    if steps == 0 {
        return Err(Error::Config("max_steps must be at least 1".into()));
    }

    let mut timings = BTreeMap::new();
    let mut alive: Vec<usize> = Vec::new();
    let mut prev_len = 0;
    let mut per_step_counts = vec![snapshots[0].len()];
    let mut peak = 0;
    let mut last_graph: Option<(f64, f64)> = None;
    let mut current = GaussianField::default();

    for (s, snap) in snapshots[..steps].iter().enumerate() {
        if snap.is_empty() {
            return Err(Error::Degenerate(format!("snapshot {s} is empty")));
        }
        alive.retain(|&i| i < snap.len());
        alive.extend(prev_len.min(snap.len())..snap.len());
        prev_len = snap.len();
        peak = peak.max(alive.len());

        current = snap.select(&alive)?;
        if s % cfg.interval == 0 {
            let m = target_count(current.len(), cfg.per_step_keep, cfg.primitive_cap);
            if m == 0 {
                return Err(Error::EmptySelection {
                    k: cfg.per_step_keep,
                    n: current.len(),
                });
            }
            let step = spectral_select(&current, m, cfg, &mut timings)?;
            last_graph = Some((step.tau, step.sigma));
            alive = step.selection.kept.iter().map(|&j| alive[j]).collect();
            current = Timer(&mut timings).time("compact", || current.select(&step.selection.kept))?;
        }
        per_step_counts.push(current.len());
    }

    let report = PruneReport {
        mode: PruneMode::Continuous,
        k: cfg.per_step_keep,
        gamma: cfg.gamma,
        tau: last_graph.map(|g| g.0),
        sigma: last_graph.map(|g| g.1),
        before_count: snapshots[0].len(),
        after_count: current.len(),
        peak_count: peak,
        per_step_counts,
        bytes_before: memory_report(&snapshots[0]).payload_bytes,
        bytes_after: memory_report(&current).payload_bytes,
        timings,
    };
    Ok((current, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GaussianPrimitive;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(n: usize, seed: u64) -> GaussianField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| GaussianPrimitive {
                center: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                ..Default::default()
            })
            .collect()
    }

    fn continuous(per_step_keep: f64) -> PruneConfig {
        PruneConfig {
            mode: PruneMode::Continuous,
            interval: 1,
            per_step_keep,
            ..Default::default()
        }
    }

    #[test]
    fn keep_all_is_identity() {
        let field = cloud(50, 1);
        let cfg = PruneConfig { k: 1.0, ..Default::default() };
        let (out, report) = prune_once(&field, &cfg).unwrap();
        assert_eq!(out, field);
        assert_eq!(report.after_count, 50);
    }

    #[test]
    fn exact_count_after_rounding() {
        let field = cloud(1000, 2);
        let (out, report) = prune_once(&field, &PruneConfig { k: 0.1, ..Default::default() }).unwrap();
        assert_eq!(out.len(), 100);
        assert_eq!(report.after_count, 100);
        assert_eq!(report.bytes_after, 100 * 248);
        assert_eq!(report.bytes_before, 1000 * 248);
    }

    #[test]
    fn idempotent_at_full_keep() {
        let field = cloud(200, 3);
        let (once, _) = prune_once(&field, &PruneConfig::default()).unwrap();
        let (twice, _) = prune_once(&once, &PruneConfig { k: 1.0, ..Default::default() }).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn empty_selection_and_bad_config() {
        let field = cloud(10, 4);
        assert!(matches!(
            prune_once(&field, &PruneConfig { k: 0.01, ..Default::default() }),
            Err(Error::EmptySelection { .. })
        ));
        assert!(matches!(
            prune_once(&field, &PruneConfig { k: 0.0, ..Default::default() }),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            prune_once(&field, &continuous(0.5)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn single_snapshot_matches_one_shot() {
        let field = cloud(300, 5);
        let (a, _) = prune_schedule(std::slice::from_ref(&field), &continuous(0.5)).unwrap();
        let (b, _) = prune_once(&field, &PruneConfig { k: 0.5, ..Default::default() }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cascade_counts() {
        let field = cloud(1000, 6);
        let snaps = vec![field.clone(), field.clone(), field];
        let (out, report) = prune_schedule(&snaps, &continuous(0.8)).unwrap();
        assert_eq!(report.per_step_counts, vec![1000, 800, 640, 512]);
        assert_eq!(report.peak_count, 1000);
        assert_eq!(out.len(), 512);
    }

    #[test]
    fn growth_between_prunes_and_interval() {
        let big = cloud(400, 7);
        let small = big.select(&(0..300).collect::<Vec<_>>()).unwrap();
        let snaps = vec![small, big.clone(), big];
        let cfg = PruneConfig {
            interval: 2,
            ..continuous(0.5)
        };
        let (_, report) = prune_schedule(&snaps, &cfg).unwrap();
        // step 0 prunes 300 → 150; step 1 adds 100 new → 250; step 2 prunes → 125.
        assert_eq!(report.per_step_counts, vec![300, 150, 250, 125]);
        assert_eq!(report.peak_count, 300);
    }

    #[test]
    fn cap_bounds_each_prune() {
        let field = cloud(500, 8);
        let cfg = PruneConfig {
            primitive_cap: Some(100),
            ..continuous(0.9)
        };
        let (_, report) = prune_schedule(&[field.clone(), field], &cfg).unwrap();
        assert_eq!(report.per_step_counts, vec![500, 100, 90]);
    }

    #[test]
    fn empty_snapshot_rejected() {
        let cfg = continuous(0.5);
        assert!(matches!(prune_schedule(&[], &cfg), Err(Error::Degenerate(_))));
        assert!(matches!(
            prune_schedule(&[cloud(10, 1), GaussianField::default()], &cfg),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn memory_examples() {
        assert_eq!(memory_report(&GaussianField::default()).payload_bytes, 0);
        assert_eq!(memory_report(&cloud(1, 0)).payload_bytes, 248);
        assert_eq!(ply::payload_bytes(1_000_000, 3), 248_000_000);
    }
}
