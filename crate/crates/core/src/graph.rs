//! τ-thresholded neighbourhood graph over primitive centers.
//!
//! Two centers closer than τ are joined by an edge of weight
//! `exp(-‖xᵢ - xⱼ‖² / 2σ²)`. The graph keeps its weighted adjacency `W` in
//! compressed rows (each undirected edge appears in both endpoint rows), the
//! degree vector `D`, and `λ_max(W)`, which scales `W` into the graph shift
//! `A = W / λ_max`.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{nn_cell_size, UniformGrid};
use crate::model::GaussianField;
use crate::signal::GraphSignal;

/// Default cap on undirected edges.
pub const DEFAULT_EDGE_CAP: u64 = 200_000_000;

/// Multiplier applied to the minimum nearest-neighbour distance for the default τ.
pub const TAU_NN_MULTIPLIER: f64 = 10.0;

/// How the τ threshold is compared against center separation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Edge iff `‖xᵢ - xⱼ‖ < τ`; τ is a distance.
    #[default]
    Distance,
    /// Edge iff `‖xᵢ - xⱼ‖² < τ`; τ is a squared distance.
    SquaredDistance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    /// Stop once `‖W v - λ v‖ ≤ tolerance · λ`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphConfig {
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    pub threshold: ThresholdMode,
    pub edge_cap: u64,
    pub power: PowerIteration,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            tau: None,
            sigma: None,
            threshold: ThresholdMode::Distance,
            edge_cap: DEFAULT_EDGE_CAP,
            power: PowerIteration::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestNeighborSummary {
    /// Smallest distance from any center to its nearest other center.
    pub min: f64,
    /// Same, ignoring coincident centers. `None` when all centers coincide.
    pub min_nonzero: Option<f64>,
}

/// Exact nearest-neighbour statistics over a point set, via a uniform grid.
pub fn nearest_neighbor_summary(centers: &[[f64; 3]]) -> Result<NearestNeighborSummary> {
    if centers.len() < 2 {
        return Err(Error::Degenerate(format!(
            "nearest-neighbour distance needs at least 2 centers, got {}",
            centers.len()
        )));
    }
    let grid = UniformGrid::new(centers, nn_cell_size(centers));
    let (min, min_nz) = centers
        .par_iter()
        .enumerate()
        .map(|(i, q)| grid.nearest(q, i as u32))
        .reduce(
            || (f64::INFINITY, f64::INFINITY),
            |a, b| (a.0.min(b.0), a.1.min(b.1)),
        );
    Ok(NearestNeighborSummary {
        min: min.sqrt(),
        min_nonzero: min_nz.is_finite().then(|| min_nz.sqrt()),
    })
}

pub fn min_nn_distance(centers: &[[f64; 3]]) -> Result<f64> {
    Ok(nearest_neighbor_summary(centers)?.min)
}

/// Ten times the minimum nearest-neighbour distance. When duplicates make
/// that zero, the smallest nonzero nearest-neighbour distance is used instead.
pub fn default_tau(centers: &[[f64; 3]]) -> Result<f64> {
    let s = nearest_neighbor_summary(centers)?;
    if s.min > 0.0 {
        return Ok(TAU_NN_MULTIPLIER * s.min);
    }
    s.min_nonzero
        .map(|d| TAU_NN_MULTIPLIER * d)
        .ok_or_else(|| Error::Degenerate("all centers coincide".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveGraph {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    weights: Vec<f64>,
    degree: Vec<f64>,
    tau: f64,
    sigma: f64,
    threshold: ThresholdMode,
    spectral_norm: Option<f64>,
}

impl PrimitiveGraph {
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.cols.len() / 2
    }

    pub fn degree(&self) -> &[f64] {
        &self.degree
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn threshold(&self) -> ThresholdMode {
        self.threshold
    }

    /// `λ_max(W)`, or `None` for a graph without edges.
    pub fn spectral_norm(&self) -> Option<f64> {
        self.spectral_norm
    }

    /// Neighbours of `i` with their weights, sorted by neighbour index.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.weights[r])
            .map(|(&j, &w)| (j as usize, w))
    }

    /// Each undirected edge once as `(i, j, w)` with `i < j`, sorted by `(i, j)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.neighbors(i)
                .filter(move |&(j, _)| j > i)
                .map(move |(j, w)| (i, j, w))
        })
    }

    /// `y = W x` without normalization.
    pub fn adjacency_apply(&self, x: &GraphSignal) -> Result<GraphSignal> {
        self.scaled_apply(x, 1.0)
    }

    fn scaled_apply(&self, x: &GraphSignal, scale: f64) -> Result<GraphSignal> {
        if x.rows() != self.n {
            return Err(Error::Shape {
                expected: self.n,
                got: x.rows(),
            });
        }
        let c = x.channels();
        let mut y = GraphSignal::zeros(self.n, c);
        if c == 0 {
            return Ok(y);
        }
        let xs = x.as_slice();
        y.as_mut_slice()
            .par_chunks_mut(c)
            .enumerate()
            .for_each(|(i, out)| {
                for (j, w) in self.neighbors(i) {
                    let src = &xs[j * c..(j + 1) * c];
                    for (o, s) in out.iter_mut().zip(src) {
                        *o += w * s;
                    }
                }
                for o in out.iter_mut() {
                    *o *= scale;
                }
            });
        Ok(y)
    }

    /// Single-channel `y = W x` without allocating.
    fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, out)| {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            *out = self.cols[s..e]
                .iter()
                .zip(&self.weights[s..e])
                .map(|(&j, w)| w * x[j as usize])
                .sum();
        });
    }

    /// Applies the graph shift `A = W / λ_max`. A graph without edges has
    /// `A = 0`.
    pub fn shift_apply(&self, x: &GraphSignal) -> Result<GraphSignal> {
        match self.spectral_norm {
            Some(norm) => self.scaled_apply(x, 1.0 / norm),
            None => {
                if x.rows() != self.n {
                    return Err(Error::Shape {
                        expected: self.n,
                        got: x.rows(),
                    });
                }
                Ok(GraphSignal::zeros(self.n, x.channels()))
            }
        }
    }

    pub fn metadata(&self) -> GraphMetadata {
        GraphMetadata {
            tau: self.tau,
            sigma: self.sigma,
            spectral_norm: self.spectral_norm,
            edge_count: self.edge_count() as u64,
        }
    }

    /// Builds a graph directly from a symmetric edge list. Mostly useful for
    /// tests and for graphs read back from a sidecar.
    pub fn from_edges(
        n: usize,
        edges: &[(usize, usize, f64)],
        tau: f64,
        sigma: f64,
        power: PowerIteration,
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::OutOfBounds {
                    index: i.max(j),
                    len: n,
                });
            }
            if i == j || !(w > 0.0) {
                return Err(Error::Config(format!("invalid edge ({i}, {j}, {w})")));
            }
            rows[i].push((j as u32, w));
            rows[j].push((i as u32, w));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Config("duplicate edge".into()));
            }
            for (j, w) in row {
                cols.push(j);
                weights.push(w);
            }
            row_ptr.push(cols.len());
        }
        let mut g = PrimitiveGraph {
            n,
            row_ptr,
            cols,
            weights,
            degree: Vec::new(),
            tau,
            sigma,
            threshold: ThresholdMode::Distance,
            spectral_norm: None,
        };
        g.finish(power);
        Ok(g)
    }

    fn finish(&mut self, power: PowerIteration) {
        self.degree = (0..self.n)
            .into_par_iter()
            .map(|i| self.neighbors(i).map(|(_, w)| w).sum())
            .collect();
        self.spectral_norm = spectral_norm_estimate(self, power).ok();
    }
}

/// Builds the graph over a field's centers.
pub fn build_graph(field: &GaussianField, cfg: &GraphConfig) -> Result<PrimitiveGraph> {
    build_graph_from_centers(&field.centers(), cfg)
}

pub fn build_graph_from_centers(centers: &[[f64; 3]], cfg: &GraphConfig) -> Result<PrimitiveGraph> {
    let n = centers.len();
    if n == 0 {
        return Err(Error::Degenerate("cannot build a graph over zero primitives".into()));
    }
    if n > u32::MAX as usize {
        return Err(Error::Capacity {
            edges: n as u64,
            cap: u32::MAX as u64,
        });
    }
    let tau = match cfg.tau {
        Some(t) => t,
        None => default_tau(centers)?,
    };
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Config(format!("tau must be positive and finite, got {tau}")));
    }
    if let Some(s) = cfg.sigma {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive and finite, got {s}")));
        }
    }
    let (radius, limit2) = match cfg.threshold {
        ThresholdMode::Distance => (tau, tau * tau),
        ThresholdMode::SquaredDistance => (tau.sqrt(), tau),
    };

    let grid = UniformGrid::new(centers, radius);
    let counts: Vec<usize> = centers
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let mut c = 0;
            grid.for_each_candidate(q, radius, |j, d2| {
                if j as usize != i && d2 < limit2 {
                    c += 1;
                }
            });
            c
        })
        .collect();
    let directed: u64 = counts.iter().map(|&c| c as u64).sum();
    let edges = directed / 2;
    if edges > cfg.edge_cap {
        return Err(Error::Capacity {
            edges,
            cap: cfg.edge_cap,
        });
    }

    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0usize);
    for &c in &counts {
        row_ptr.push(row_ptr.last().unwrap() + c);
    }
    drop(counts);
    let total = row_ptr[n];
    let mut cols = vec![0u32; total];
    // Holds squared distances until σ is known.
    let mut weights = vec![0f64; total];
    {
        let mut col_rows = Vec::with_capacity(n);
        let mut w_rows = Vec::with_capacity(n);
        let mut cr = cols.as_mut_slice();
        let mut wr = weights.as_mut_slice();
        for i in 0..n {
            let len = row_ptr[i + 1] - row_ptr[i];
            let (a, b) = cr.split_at_mut(len);
            let (c, d) = wr.split_at_mut(len);
            col_rows.push(a);
            w_rows.push(c);
            cr = b;
            wr = d;
        }
        col_rows
            .into_par_iter()
            .zip(w_rows)
            .enumerate()
            .for_each_init(Vec::new, |buf: &mut Vec<(u32, f64)>, (i, (cs, ws))| {
                buf.clear();
                grid.for_each_candidate(&centers[i], radius, |j, d2| {
                    if j as usize != i && d2 < limit2 {
                        buf.push((j, d2));
                    }
                });
                buf.sort_unstable_by_key(|&(j, _)| j);
                for (k, &(j, d2)) in buf.iter().enumerate() {
                    cs[k] = j;
                    ws[k] = d2;
                }
            });
    }
    drop(grid);

    let sigma = match cfg.sigma {
        Some(s) => s,
        None => edge_distance_sigma(&row_ptr, &cols, &weights),
    };
    if sigma > 0.0 {
        let inv = 1.0 / (2.0 * sigma * sigma);
        weights
            .par_iter_mut()
            .for_each(|w| *w = (-*w * inv).exp().max(f64::MIN_POSITIVE));
    }

    let mut g = PrimitiveGraph {
        n,
        row_ptr,
        cols,
        weights,
        degree: Vec::new(),
        tau,
        sigma,
        threshold: cfg.threshold,
        spectral_norm: None,
    };
    g.finish(cfg.power);
    Ok(g)
}

/// σ with σ² the variance of the edge lengths present in the graph. Falls
/// back to the mean edge length when all edges have (nearly) the same
/// length, and to 0 when there are no edges.
fn edge_distance_sigma(row_ptr: &[usize], cols: &[u32], d2: &[f64]) -> f64 {
    let upper = |i: usize| {
        (row_ptr[i]..row_ptr[i + 1])
            .filter(move |&k| cols[k] as usize > i)
            .map(|k| d2[k].sqrt())
    };
    let n = row_ptr.len() - 1;
    let (count, sum) = (0..n).fold((0u64, 0.0), |(c, s), i| {
        upper(i).fold((c, s), |(c, s), d| (c + 1, s + d))
    });
    if count == 0 {
        return 0.0;
    }
    let mean = sum / count as f64;
    let ss = (0..n).fold(0.0, |acc, i| {
        upper(i).fold(acc, |acc, d| acc + (d - mean) * (d - mean))
    });
    let var = ss / count as f64;
    if var <= 1e-12 * mean * mean {
        mean
    } else {
        var.sqrt()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.par_iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Deterministic pseudo-random positive start vector used when the all-ones
/// start stalls.
fn hashed_start(n: usize) -> Vec<f64> {
    (0..n as u64)
        .map(|i| {
            let mut z = i.wrapping_add(0x9E37_79B9_7F4A_7C15);
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            0.5 + (z >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

/// Estimates `λ_max(W)` by power iteration.
///
/// The iteration runs on `W + sI` with `s` half the mean nonzero degree so
/// that bipartite components, whose spectrum is symmetric, still converge.
/// The returned value is the Rayleigh quotient of `W`, which never exceeds
/// the true `λ_max`.
pub fn spectral_norm_estimate(g: &PrimitiveGraph, cfg: PowerIteration) -> Result<f64> {
    if g.edge_count() == 0 {
        return Err(Error::Degenerate("graph has no edges".into()));
    }
    let n = g.n;
    let (busy, total) = g
        .degree
        .iter()
        .filter(|&&d| d > 0.0)
        .fold((0usize, 0.0), |(c, s), &d| (c + 1, s + d));
    let shift = 0.5 * total / busy as f64;

    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut wx = vec![0.0; n];
    let mut reseeded = false;
    let mut lambda = 0.0;
    for _ in 0..cfg.max_iterations.max(1) {
        g.matvec(&x, &mut wx);
        lambda = dot(&x, &wx);
        if !(lambda > 0.0) {
            if reseeded {
                return Err(Error::Degenerate("power iteration stalled".into()));
            }
            reseeded = true;
            x = hashed_start(n);
            let norm = dot(&x, &x).sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
            continue;
        }
        let residual = wx
            .par_iter()
            .zip(&x)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= cfg.tolerance * lambda {
            break;
        }
        // x <- (W + sI) x, normalized; wx is reused as the scratch buffer.
        wx.par_iter_mut().zip(&x).for_each(|(a, b)| *a += shift * b);
        let norm = dot(&wx, &wx).sqrt();
        std::mem::swap(&mut x, &mut wx);
        x.par_iter_mut().for_each(|v| *v /= norm);
    }
    Ok(lambda)
}

/// JSON record written next to a graph sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMetadata {
    pub tau: f64,
    pub sigma: f64,
    pub spectral_norm: Option<f64>,
    pub edge_count: u64,
}

/// Magic bytes opening a graph sidecar.
pub const SIDECAR_MAGIC: [u8; 8] = *b"SPGRAPH1";

/// Writes the edge list: magic, `n` (u64), edge count (u64), then
/// `(u32 i, u32 j, f32 w)` triples with `i < j`, sorted by `(i, j)`.
/// All integers and floats are little-endian.
pub fn write_sidecar<W: Write>(g: &PrimitiveGraph, mut w: W) -> std::io::Result<()> {
    w.write_all(&SIDECAR_MAGIC)?;
    w.write_all(&(g.n as u64).to_le_bytes())?;
    w.write_all(&(g.edge_count() as u64).to_le_bytes())?;
    let mut rec = [0u8; 12];
    for (i, j, wt) in g.edges() {
        rec[..4].copy_from_slice(&(i as u32).to_le_bytes());
        rec[4..8].copy_from_slice(&(j as u32).to_le_bytes());
        rec[8..].copy_from_slice(&(wt as f32).to_le_bytes());
        w.write_all(&rec)?;
    }
    w.flush()
}

/// Reads a sidecar back as `(n, edges)`.
pub fn read_sidecar<R: Read>(mut r: R) -> Result<(usize, Vec<(u32, u32, f32)>)> {
    let io = |e| Error::io("<graph sidecar>", e);
    let mut head = [0u8; 24];
    r.read_exact(&mut head).map_err(io)?;
    if head[..8] != SIDECAR_MAGIC {
        return Err(Error::Format("bad graph sidecar magic".into()));
    }
    let n = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
    let m = u64::from_le_bytes(head[16..24].try_into().unwrap()) as usize;
    let mut edges = Vec::with_capacity(m);
    let mut rec = [0u8; 12];
    for _ in 0..m {
        r.read_exact(&mut rec).map_err(io)?;
        edges.push((
            u32::from_le_bytes(rec[..4].try_into().unwrap()),
            u32::from_le_bytes(rec[4..8].try_into().unwrap()),
            f32::from_le_bytes(rec[8..].try_into().unwrap()),
        ));
    }
    Ok((n, edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn brute_min_nn(pts: &[[f64; 3]]) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                if i != j {
                    best = best.min(crate::grid::dist2(&pts[i], &pts[j]).sqrt());
                }
            }
        }
        best
    }

    fn lattice() -> Vec<[f64; 3]> {
        let mut pts = Vec::new();
        for x in 0..3 {
            for y in 0..3 {
                for z in 0..3 {
                    pts.push([x as f64, y as f64, z as f64]);
                }
            }
        }
        pts
    }

    #[test]
    fn min_nn_examples() {
        let line = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [3.0, 0.0, 0.0]];
        assert_eq!(brute_min_nn(&line), 1.0);
        assert_eq!(min_nn_distance(&line).unwrap(), 1.0);
        assert_eq!(min_nn_distance(&[[0.5, 0.5, 0.5]; 2]).unwrap(), 0.0);
        let lat = lattice();
        assert_eq!(min_nn_distance(&lat).unwrap(), brute_min_nn(&lat));
        assert_eq!(min_nn_distance(&lat).unwrap(), 1.0);
        assert!(matches!(min_nn_distance(&[[0.0; 3]]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn default_tau_examples() {
        let pts = [[0.0, 0.0, 0.0], [0.2, 0.0, 0.0], [5.0, 0.0, 0.0]];
        assert_relative_eq!(default_tau(&pts).unwrap(), 2.0, epsilon = 1e-12);
        assert_eq!(default_tau(&lattice()).unwrap(), 10.0);
        let dup = [[0.0; 3], [0.0; 3], [0.5, 0.0, 0.0], [3.0, 0.0, 0.0]];
        assert_eq!(default_tau(&dup).unwrap(), 5.0);
        assert!(matches!(default_tau(&[[1.0; 3]; 4]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn two_point_weight() {
        let d = 0.5;
        let cfg = GraphConfig {
            tau: Some(2.0 * d),
            sigma: Some(d),
            ..Default::default()
        };
        let g = build_graph_from_centers(&[[0.0; 3], [d, 0.0, 0.0]], &cfg).unwrap();
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges.len(), 1);
        assert_relative_eq!(edges[0].2, (-0.5f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(edges[0].2, 0.60653, epsilon = 1e-5);
    }

    #[test]
    fn threshold_is_strict() {
        let cfg = GraphConfig {
            tau: Some(1.0),
            ..Default::default()
        };
        let g = build_graph_from_centers(&[[0.0; 3], [1.0, 0.0, 0.0]], &cfg).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.degree(), &[0.0, 0.0]);
        assert_eq!(g.spectral_norm(), None);
        assert_eq!(g.sigma(), 0.0);
    }

    #[test]
    fn collinear_triple() {
        let cfg = GraphConfig {
            tau: Some(1.5),
            ..Default::default()
        };
        let pts = [[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]];
        let g = build_graph_from_centers(&pts, &cfg).unwrap();
        let pairs: Vec<_> = g.edges().map(|(i, j, _)| (i, j)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2)]);
        let w = g.edges().next().unwrap().2;
        assert_eq!(g.degree(), &[w, 2.0 * w, w]);
        // Equal edge lengths: σ falls back to the mean length.
        assert_eq!(g.sigma(), 1.0);
        assert_relative_eq!(w, (-0.5f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn squared_threshold_mode() {
        let pts = [[0.0; 3], [1.5, 0.0, 0.0]];
        let cfg = GraphConfig {
            tau: Some(2.0),
            sigma: Some(1.0),
            threshold: ThresholdMode::SquaredDistance,
            ..Default::default()
        };
        // 1.5² = 2.25 ≥ 2: no edge, although 1.5 < 2.
        assert_eq!(build_graph_from_centers(&pts, &cfg).unwrap().edge_count(), 0);
        let cfg = GraphConfig {
            threshold: ThresholdMode::Distance,
            ..cfg
        };
        assert_eq!(build_graph_from_centers(&pts, &cfg).unwrap().edge_count(), 1);
    }

    #[test]
    fn edge_cap_enforced() {
        let cfg = GraphConfig {
            tau: Some(10.0),
            edge_cap: 10,
            ..Default::default()
        };
        match build_graph_from_centers(&lattice(), &cfg) {
            Err(Error::Capacity { edges, cap }) => {
                assert_eq!(edges, 27 * 26 / 2);
                assert_eq!(cap, 10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_field_rejected() {
        assert!(matches!(
            build_graph_from_centers(&[], &GraphConfig::default()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn spectral_norm_examples() {
        let p = PowerIteration::default();
        let single = PrimitiveGraph::from_edges(2, &[(0, 1, 0.3)], 1.0, 1.0, p).unwrap();
        assert_relative_eq!(single.spectral_norm().unwrap(), 0.3, max_relative = 1e-12);

        let k3 = PrimitiveGraph::from_edges(3, &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)], 1.0, 1.0, p)
            .unwrap();
        assert_relative_eq!(k3.spectral_norm().unwrap(), 2.0, max_relative = 1e-12);

        let both = PrimitiveGraph::from_edges(
            5,
            &[(0, 1, 0.3), (2, 3, 1.0), (2, 4, 1.0), (3, 4, 1.0)],
            1.0,
            1.0,
            p,
        )
        .unwrap();
        let est = both.spectral_norm().unwrap();
        assert!(est <= 2.0 && est >= 2.0 * (1.0 - 1e-5), "{est}");

        let empty = PrimitiveGraph::from_edges(3, &[], 1.0, 1.0, p).unwrap();
        assert!(spectral_norm_estimate(&empty, p).is_err());
    }

    #[test]
    fn bipartite_path_converges() {
        // P3: eigenvalues ±√2, 0.
        let g = PrimitiveGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)], 1.0, 1.0, Default::default())
            .unwrap();
        let est = g.spectral_norm().unwrap();
        let exact = 2f64.sqrt();
        assert!(est <= exact && est >= exact * (1.0 - 1e-5), "{est}");
    }

    #[test]
    fn two_node_shift_swaps() {
        let g = PrimitiveGraph::from_edges(2, &[(0, 1, 0.37)], 1.0, 1.0, Default::default()).unwrap();
        let x = GraphSignal::new(2, 1, vec![3.0, -7.0]).unwrap();
        let y = g.shift_apply(&x).unwrap();
        assert_relative_eq!(y.as_slice()[0], -7.0, max_relative = 1e-12);
        assert_relative_eq!(y.as_slice()[1], 3.0, max_relative = 1e-12);
    }

    #[test]
    fn isolated_graph_shift_is_zero() {
        let g = PrimitiveGraph::from_edges(3, &[], 1.0, 1.0, Default::default()).unwrap();
        let x = GraphSignal::new(3, 2, vec![1.0; 6]).unwrap();
        assert_eq!(g.shift_apply(&x).unwrap(), GraphSignal::zeros(3, 2));
        let bad = GraphSignal::zeros(2, 2);
        assert!(matches!(g.shift_apply(&bad), Err(Error::Shape { .. })));
    }

    #[test]
    fn sidecar_round_trip() {
        let cfg = GraphConfig {
            tau: Some(1.5),
            ..Default::default()
        };
        let g = build_graph_from_centers(&lattice(), &cfg).unwrap();
        let mut buf = Vec::new();
        write_sidecar(&g, &mut buf).unwrap();
        assert_eq!(buf.len(), 24 + 12 * g.edge_count());
        let (n, edges) = read_sidecar(buf.as_slice()).unwrap();
        assert_eq!(n, 27);
        let want: Vec<_> = g.edges().map(|(i, j, w)| (i as u32, j as u32, w as f32)).collect();
        assert_eq!(edges, want);
    }
}
