//! Spectral graph pruning for Gaussian-splat fields.
//!
//! A graph is built over primitive centers, the centers are passed through
//! a high-pass graph filter, and a mix of the strongest and weakest
//! responses is kept. A CPU splatting renderer and PSNR/SSIM metrics
//! measure what the pruning costs.

pub mod buffer;
pub mod error;
pub mod filter;
pub mod graph;
mod grid;
pub mod metrics;
pub mod model;
pub mod ply;
pub mod pruner;
pub mod raster;
pub mod signal;
pub mod synth;

pub use buffer::RgbImage;
pub use error::{Error, Result};
pub use filter::{
    band_limited_select, high_pass, low_pass, response_magnitudes, FilterKind, FilterResponse,
    PruneSelection, SignalKind,
};
pub use graph::{build_graph, GraphConfig, PrimitiveGraph, ThresholdMode};
pub use metrics::{psnr, ssim, ImagePair, MetricRecord, Psnr};
pub use model::{compact, Covariance3, GaussianField, GaussianPrimitive};
pub use pruner::{prune_once, prune_schedule, PruneConfig, PruneMode, PruneReport};
pub use raster::{render, CameraModel, RenderConfig, RenderTarget};
pub use signal::GraphSignal;
pub use synth::{Region, SceneSpec, SyntheticScene};
