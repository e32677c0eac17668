//! Splatting: project each primitive to an image-space Gaussian, sort all
//! of them front to back, and alpha-composite per pixel.

use nalgebra::{Matrix2, Matrix2x3, Vector3};
use rayon::prelude::*;

use crate::buffer::RgbImage;
use crate::model::{covariance_of, Covariance3, GaussianField};

use super::camera::CameraModel;
use super::sh::evaluate_sh;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderConfig {
    /// Points with camera depth at or below this are culled.
    pub near: f64,
    /// Added to the diagonal of every projected covariance, px².
    pub cov_floor: f64,
    /// Upper clamp on per-fragment opacity.
    pub max_beta: f64,
    /// Contributions below this are skipped.
    pub min_beta: f64,
    /// A pixel stops compositing once its transmittance drops below this.
    pub min_transmittance: f64,
    /// Footprint half-width in standard deviations.
    pub extent_sigmas: f64,
    /// Projected covariances with determinant at or below this are skipped.
    pub min_determinant: f64,
    /// Frustum margin as a fraction of the image size: primitives whose
    /// projected center falls further outside the image are culled. Points
    /// grazing the camera plane otherwise blow up into screen-filling splats.
    pub guard_band: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            near: 0.01,
            cov_floor: 0.3,
            max_beta: 0.99,
            min_beta: 1.0 / 255.0,
            min_transmittance: 1e-4,
            extent_sigmas: 3.0,
            min_determinant: 1e-12,
            guard_band: 0.5,
        }
    }
}

/// Perspective projection of a world point: pixel position and camera depth,
/// or `None` when the point is at or behind the near plane.
pub fn project_center(x: &Vector3<f64>, cam: &CameraModel, near: f64) -> Option<([f64; 2], f64)> {
    let t = cam.to_camera(x);
    if t.z <= near {
        return None;
    }
    Some((
        [cam.fx * t.x / t.z + cam.cx, cam.fy * t.y / t.z + cam.cy],
        t.z,
    ))
}

/// Jacobian of the perspective map at camera-space point `t`.
pub fn projection_jacobian(t: &Vector3<f64>, cam: &CameraModel) -> Matrix2x3<f64> {
    let iz = 1.0 / t.z;
    Matrix2x3::new(
        cam.fx * iz,
        0.0,
        -cam.fx * t.x * iz * iz,
        0.0,
        cam.fy * iz,
        -cam.fy * t.y * iz * iz,
    )
}

/// Image-space covariance `J R Σ Rᵀ Jᵀ + floor · I` at world point `x`.
pub fn project_covariance(
    cov: &Covariance3,
    x: &Vector3<f64>,
    cam: &CameraModel,
    cfg: &RenderConfig,
) -> Option<Matrix2<f64>> {
    let t = cam.to_camera(x);
    if t.z <= cfg.near {
        return None;
    }
    let jw = projection_jacobian(&t, cam) * cam.rotation;
    let m = jw * cov.0 * jw.transpose();
    let sym = (m + m.transpose()) * 0.5;
    Some(sym + Matrix2::identity() * cfg.cov_floor)
}

/// A projected primitive with `C` colour or feature channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SplatFragment<const C: usize> {
    /// Index of the source primitive.
    pub index: u32,
    pub pixel_center: [f64; 2],
    pub cov2d: Matrix2<f64>,
    /// Inverse of `cov2d` as `(a, b, c)` for `[[a, b], [b, c]]`.
    pub conic: [f64; 3],
    pub depth: f64,
    pub color: [f64; C],
    pub opacity: f64,
}

impl<const C: usize> SplatFragment<C> {
    /// `exp(-½ dᵀ Σ⁻¹ d)` at pixel `p`.
    #[inline]
    pub fn falloff(&self, p: [f64; 2]) -> f64 {
        let dx = p[0] - self.pixel_center[0];
        let dy = p[1] - self.pixel_center[1];
        let [a, b, c] = self.conic;
        (-0.5 * (a * dx * dx + 2.0 * b * dx * dy + c * dy * dy)).exp()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct RenderStats {
    pub fragments: usize,
    pub culled: usize,
    pub degenerate: usize,
}

/// Composited output with `C` channels per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTarget<const C: usize> {
    pub width: usize,
    pub height: usize,
    pub values: Vec<[f64; C]>,
    pub alpha: Vec<f64>,
    pub stats: RenderStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderTarget {
    pub rgb: RgbImage,
    pub alpha: Vec<f32>,
    pub stats: RenderStats,
}

impl RenderTarget {
    pub fn width(&self) -> usize {
        self.rgb.width()
    }

    pub fn height(&self) -> usize {
        self.rgb.height()
    }
}

enum Projected<const C: usize> {
    Culled,
    Degenerate,
    Fragment(SplatFragment<C>),
}

fn project_primitive<const C: usize>(
    field: &GaussianField,
    index: usize,
    cam: &CameraModel,
    cfg: &RenderConfig,
    color: impl Fn(usize, &Vector3<f64>) -> [f64; C],
) -> Projected<C> {
    let p = &field.primitives()[index];
    let x = p.center();
    let Some((pixel_center, depth)) = project_center(&x, cam, cfg.near) else {
        return Projected::Culled;
    };
    let (w, h) = (cam.width as f64, cam.height as f64);
    let [px, py] = pixel_center;
    if px < -cfg.guard_band * w
        || px > (1.0 + cfg.guard_band) * w
        || py < -cfg.guard_band * h
        || py > (1.0 + cfg.guard_band) * h
    {
        return Projected::Culled;
    }
    let Some(cov2d) = project_covariance(&covariance_of(p), &x, cam, cfg) else {
        return Projected::Culled;
    };
    let det = cov2d.determinant();
    if !(det > cfg.min_determinant) || !det.is_finite() {
        return Projected::Degenerate;
    }
    let conic = [cov2d[(1, 1)] / det, -cov2d[(0, 1)] / det, cov2d[(0, 0)] / det];
    let dir = (x - cam.center()).normalize();
    Projected::Fragment(SplatFragment {
        index: index as u32,
        pixel_center,
        cov2d,
        conic,
        depth,
        color: color(index, &dir),
        opacity: p.opacity(),
    })
}

/// Projects every primitive, in primitive order.
pub fn fragments<const C: usize>(
    field: &GaussianField,
    cam: &CameraModel,
    cfg: &RenderConfig,
    color: impl Fn(usize, &Vector3<f64>) -> [f64; C] + Sync,
) -> (Vec<SplatFragment<C>>, RenderStats) {
    let projected: Vec<Projected<C>> = (0..field.len())
        .into_par_iter()
        .map(|i| project_primitive(field, i, cam, cfg, &color))
        .collect();
    let mut stats = RenderStats::default();
    let mut frags = Vec::with_capacity(projected.len());
    for p in projected {
        match p {
            Projected::Culled => stats.culled += 1,
            Projected::Degenerate => stats.degenerate += 1,
            Projected::Fragment(f) => frags.push(f),
        }
    }
    stats.fragments = frags.len();
    (frags, stats)
}

/// Front-to-back compositing of fragments into a `width × height` target.
pub fn composite<const C: usize>(
    mut frags: Vec<SplatFragment<C>>,
    width: usize,
    height: usize,
    cfg: &RenderConfig,
) -> (Vec<[f64; C]>, Vec<f64>) {
    frags.sort_by(|a, b| a.depth.total_cmp(&b.depth).then(a.index.cmp(&b.index)));

    // Per-row fragment lists, each in depth order, with the column span.
    let mut rows: Vec<Vec<(u32, u32, u32)>> = vec![Vec::new(); height];
    for (k, f) in frags.iter().enumerate() {
        let rx = cfg.extent_sigmas * f.cov2d[(0, 0)].sqrt();
        let ry = cfg.extent_sigmas * f.cov2d[(1, 1)].sqrt();
        let [px, py] = f.pixel_center;
        let x0 = (px - rx).ceil().max(0.0);
        let x1 = (px + rx).floor().min(width as f64 - 1.0);
        let y0 = (py - ry).ceil().max(0.0);
        let y1 = (py + ry).floor().min(height as f64 - 1.0);
        if !(x0 <= x1 && y0 <= y1) {
            continue;
        }
        for row in &mut rows[y0 as usize..=y1 as usize] {
            row.push((k as u32, x0 as u32, x1 as u32));
        }
    }

    let mut values = vec![[0.0; C]; width * height];
    let mut alpha = vec![0.0; width * height];
    values
        .par_chunks_mut(width)
        .zip(alpha.par_chunks_mut(width))
        .zip(rows.par_iter())
        .enumerate()
        .for_each(|(y, ((vals, alphas), list))| {
            let mut transmit = vec![1.0f64; width];
            for &(k, x0, x1) in list {
                let f = &frags[k as usize];
                for x in x0 as usize..=x1 as usize {
                    let t = transmit[x];
                    if t < cfg.min_transmittance {
                        continue;
                    }
                    let beta = (f.opacity * f.falloff([x as f64, y as f64])).min(cfg.max_beta);
                    if beta < cfg.min_beta {
                        continue;
                    }
                    for (v, c) in vals[x].iter_mut().zip(&f.color) {
                        *v += c * beta * t;
                    }
                    transmit[x] = t * (1.0 - beta);
                }
            }
            for (a, t) in alphas.iter_mut().zip(&transmit) {
                *a = 1.0 - t;
            }
        });
    (values, alpha)
}

/// Renders per-primitive feature vectors instead of SH colour.
pub fn render_features<const C: usize>(
    field: &GaussianField,
    features: &[[f64; C]],
    cam: &CameraModel,
    cfg: &RenderConfig,
) -> FeatureTarget<C> {
    assert_eq!(features.len(), field.len(), "one feature vector per primitive");
    let (frags, stats) = fragments(field, cam, cfg, |i, _| features[i]);
    let (values, alpha) = composite(frags, cam.width, cam.height, cfg);
    FeatureTarget {
        width: cam.width,
        height: cam.height,
        values,
        alpha,
        stats,
    }
}

/// Renders a field with SH-evaluated colour on a black background.
pub fn render(field: &GaussianField, cam: &CameraModel, cfg: &RenderConfig) -> RenderTarget {
    let degree = field.sh_degree();
    let prims = field.primitives();
    let (frags, stats) = fragments(field, cam, cfg, |i, dir| {
        evaluate_sh(&prims[i].sh_coeffs, dir, degree)
    });
    let (values, alpha) = composite(frags, cam.width, cam.height, cfg);
    let data = values
        .iter()
        .flat_map(|v| v.map(|c| c.clamp(0.0, 1.0) as f32))
        .collect();
    RenderTarget {
        rgb: RgbImage::new(cam.width, cam.height, data).expect("sized by camera"),
        alpha: alpha.iter().map(|&a| a.clamp(0.0, 1.0) as f32).collect(),
        stats,
    }
}
