//! Haar-like graph filters and band-limited sampling.
//!
//! With the shift `A` normalized so that its largest eigenvalue is one, the
//! high-pass filter is `I - A` and the low-pass filter is `I + A`. Each node
//! is scored by the squared norm of its filtered row; the sampler keeps the
//! strongest high-pass responses (detail) together with the weakest ones
//! (smooth background).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::PrimitiveGraph;
use crate::signal::GraphSignal;

/// Largest eigenvalue of the normalized shift. The low-pass division by it
/// is a no-op, but it is kept explicit.
const LAMBDA_0: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    HighPass,
    LowPass,
}

/// What the filtered signal was.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    /// Primitive centers as a three-channel signal.
    Centers,
    Custom(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterResponse {
    pub pi: Vec<f64>,
    pub filter_kind: FilterKind,
    pub signal_kind: SignalKind,
}

/// Kept indices split into the high- and low-response bands.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneSelection {
    /// Sorted ascending.
    pub kept: Vec<usize>,
    pub high_band: Vec<usize>,
    pub low_band: Vec<usize>,
    pub k: f64,
    pub gamma: f64,
}

impl PruneSelection {
    /// Selection keeping every index of an `n`-primitive field.
    pub fn all(n: usize) -> Self {
        Self {
            kept: (0..n).collect(),
            high_band: Vec::new(),
            low_band: (0..n).collect(),
            k: 1.0,
            gamma: 0.0,
        }
    }
}

/// `x - A x`.
pub fn high_pass(g: &PrimitiveGraph, x: &GraphSignal) -> Result<GraphSignal> {
    x.axpy(-1.0, &g.shift_apply(x)?)
}

/// `x + A x / λ₀`.
pub fn low_pass(g: &PrimitiveGraph, x: &GraphSignal) -> Result<GraphSignal> {
    debug_assert_eq!(LAMBDA_0, 1.0);
    x.axpy(1.0 / LAMBDA_0, &g.shift_apply(x)?)
}

pub fn apply_filter(g: &PrimitiveGraph, x: &GraphSignal, kind: FilterKind) -> Result<GraphSignal> {
    match kind {
        FilterKind::HighPass => high_pass(g, x),
        FilterKind::LowPass => low_pass(g, x),
    }
}

/// Squared norm of each row of the filtered signal.
pub fn response_magnitudes(
    g: &PrimitiveGraph,
    x: &GraphSignal,
    kind: FilterKind,
) -> Result<FilterResponse> {
    let f = apply_filter(g, x, kind)?;
    let c = f.channels();
    let pi = if c == 0 {
        vec![0.0; f.rows()]
    } else {
        f.as_slice()
            .chunks_exact(c)
            .map(|row| row.iter().map(|v| v * v).sum())
            .collect()
    };
    Ok(FilterResponse {
        pi,
        filter_kind: kind,
        signal_kind: SignalKind::Centers,
    })
}

/// `round(fraction · n)` with halves rounded up. The small slack absorbs
/// binary representation error such as `0.7 · 5 = 3.4999…`.
pub fn round_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64) + 0.5 + 1e-9).floor() as usize
}

/// Size of the high band when `m` primitives are kept. The low band gets
/// `round(m · (1 − γ))` with halves rounded up and the high band the
/// remainder, so an odd split like γ = 0.5, m = 5 keeps 2 high and 3 low.
pub fn high_band_count(gamma: f64, m: usize) -> usize {
    m - round_count(1.0 - gamma, m).min(m)
}

fn check_fractions(k: f64, gamma: f64) -> Result<()> {
    if !(k > 0.0 && k <= 1.0) {
        return Err(Error::Config(format!("keep fraction k must lie in (0, 1], got {k}")));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Config(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    Ok(())
}

/// Keeps `round(k·n)` nodes: the `round(γ·m)` largest high-pass responses
/// and the smallest responses among the rest. Ties go to the lower index.
pub fn band_limited_select(resp: &FilterResponse, k: f64, gamma: f64) -> Result<PruneSelection> {
    check_fractions(k, gamma)?;
    let m = round_count(k, resp.pi.len());
    select_count(resp, m, gamma).map(|mut s| {
        s.k = k;
        s
    })
}

/// Same as [`band_limited_select`] with an explicit kept count `m ≤ n`.
pub fn select_count(resp: &FilterResponse, m: usize, gamma: f64) -> Result<PruneSelection> {
    if resp.filter_kind != FilterKind::HighPass {
        return Err(Error::Config("band-limited selection ranks high-pass responses".into()));
    }
    check_fractions(1.0, gamma)?;
    let n = resp.pi.len();
    if m > n {
        return Err(Error::Config(format!("cannot keep {m} of {n} primitives")));
    }
    if m == 0 {
        return Err(Error::EmptySelection {
            k: if n == 0 { 0.0 } else { m as f64 / n as f64 },
            n,
        });
    }
    let h = high_band_count(gamma, m);
    let pi = &resp.pi;

    let mut order: Vec<usize> = (0..n).collect();
    // Descending by response, ascending index on ties.
    order.sort_unstable_by(|&a, &b| pi[b].total_cmp(&pi[a]).then(a.cmp(&b)));
    let mut high_band: Vec<usize> = order[..h].to_vec();
    let mut rest: Vec<usize> = order[h..].to_vec();
    rest.sort_unstable_by(|&a, &b| pi[a].total_cmp(&pi[b]).then(a.cmp(&b)));
    let mut low_band: Vec<usize> = rest[..m - h].to_vec();

    high_band.sort_unstable();
    low_band.sort_unstable();
    let mut kept: Vec<usize> = high_band.iter().chain(&low_band).copied().collect();
    kept.sort_unstable();
    Ok(PruneSelection {
        kept,
        high_band,
        low_band,
        k: m as f64 / n as f64,
        gamma,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSummary {
    pub n: usize,
    pub kind: FilterKind,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl FilterResponse {
    pub fn summary(&self) -> ResponseSummary {
        let n = self.pi.len();
        let (min, max, sum) = self.pi.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, 0.0),
            |(lo, hi, s), &v| (lo.min(v), hi.max(v), s + v),
        );
        ResponseSummary {
            n,
            kind: self.filter_kind,
            min: if n == 0 { 0.0 } else { min },
            max: if n == 0 { 0.0 } else { max },
            mean: if n == 0 { 0.0 } else { sum / n as f64 },
        }
    }

    /// Flat little-endian `f32` dump of `pi`.
    pub fn to_f32_bytes(&self) -> Vec<u8> {
        self.pi.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionCounts {
    pub kept: usize,
    pub high_band: usize,
    pub low_band: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionHeader {
    pub k: f64,
    pub gamma: f64,
    pub counts: SelectionCounts,
}

impl PruneSelection {
    pub fn header(&self) -> SelectionHeader {
        SelectionHeader {
            k: self.k,
            gamma: self.gamma,
            counts: SelectionCounts {
                kept: self.kept.len(),
                high_band: self.high_band.len(),
                low_band: self.low_band.len(),
            },
        }
    }

    /// Sorted kept indices as little-endian `u32`.
    pub fn to_u32_bytes(&self) -> Vec<u8> {
        self.kept.iter().flat_map(|&i| (i as u32).to_le_bytes()).collect()
    }
}
