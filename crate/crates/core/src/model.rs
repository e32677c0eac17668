//! Gaussian-splat primitives and the fields that hold them.
//!
//! Values are stored exactly as they appear in a checkpoint (`f32`, logit
//! opacity, log scale) so that a field can be written back bit for bit.
//! Activated quantities (`scale`, `opacity`, rotation matrix, covariance)
//! are computed on demand in `f64`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::filter::PruneSelection;

/// Number of spherical-harmonic coefficients per primitive (degree 3, RGB).
pub const SH_COEFFS: usize = 48;

/// Highest supported SH degree.
pub const MAX_SH_DEGREE: u8 = 3;

/// Quaternions whose norm is within this distance of one are left untouched
/// when normalizing, which makes normalization idempotent on `f32` data.
const UNIT_NORM_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPrimitive {
    pub center: [f32; 3],
    /// Carried through I/O untouched; not used by any algorithm.
    pub normal: [f32; 3],
    /// Unit quaternion in `(w, x, y, z)` order.
    pub rotation: [f32; 4],
    pub log_scale: [f32; 3],
    pub opacity_logit: f32,
    /// `[dc_r, dc_g, dc_b, rest_r[15], rest_g[15], rest_b[15]]`, the
    /// channel-major layout of conventional checkpoints.
    pub sh_coeffs: [f32; SH_COEFFS],
}

impl Default for GaussianPrimitive {
    fn default() -> Self {
        Self {
            center: [0.0; 3],
            normal: [0.0; 3],
            rotation: [1.0, 0.0, 0.0, 0.0],
            log_scale: [0.0; 3],
            opacity_logit: 0.0,
            sh_coeffs: [0.0; SH_COEFFS],
        }
    }
}

impl GaussianPrimitive {
    pub fn center(&self) -> Vector3<f64> {
        Vector3::new(
            self.center[0] as f64,
            self.center[1] as f64,
            self.center[2] as f64,
        )
    }

    pub fn scale(&self) -> Vector3<f64> {
        Vector3::new(
            (self.log_scale[0] as f64).exp(),
            (self.log_scale[1] as f64).exp(),
            (self.log_scale[2] as f64).exp(),
        )
    }

    pub fn opacity(&self) -> f64 {
        sigmoid(self.opacity_logit as f64)
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        rotation_matrix(self.rotation)
    }

    /// SH coefficient of basis function `basis` (0..16) for colour channel `channel`.
    #[inline]
    pub fn sh(&self, channel: usize, basis: usize) -> f32 {
        if basis == 0 {
            self.sh_coeffs[channel]
        } else {
            self.sh_coeffs[3 + channel * 15 + basis - 1]
        }
    }

    pub fn set_sh(&mut self, channel: usize, basis: usize, value: f32) {
        if basis == 0 {
            self.sh_coeffs[channel] = value;
        } else {
            self.sh_coeffs[3 + channel * 15 + basis - 1] = value;
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Normalizes a `(w, x, y, z)` quaternion. Zero or non-finite input maps to
/// the identity rotation.
pub fn normalize_quaternion(q: [f32; 4]) -> [f32; 4] {
    let norm = q.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>().sqrt();
    if !norm.is_finite() || norm == 0.0 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    if (norm - 1.0).abs() <= UNIT_NORM_SLACK {
        return q;
    }
    q.map(|c| (c as f64 / norm) as f32)
}

/// Rotation matrix of a unit `(w, x, y, z)` quaternion. Every entry is a
/// product of two components, so `q` and `-q` give bit-identical matrices.
pub fn rotation_matrix(q: [f32; 4]) -> Matrix3<f64> {
    let [w, x, y, z] = q.map(|c| c as f64);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Symmetric positive semi-definite 3×3 covariance in world units².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance3(pub Matrix3<f64>);

impl Covariance3 {
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }
}

/// `R · diag(scale)² · Rᵀ` for the primitive's rotation and activated scale.
pub fn covariance_of(p: &GaussianPrimitive) -> Covariance3 {
    let r = p.rotation_matrix();
    let s = p.scale();
    let m = r * Matrix3::from_diagonal(&s.component_mul(&s)) * r.transpose();
    // Exact symmetrization: rounding in the product can differ across the diagonal.
    Covariance3((m + m.transpose()) * 0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianField {
    primitives: Vec<GaussianPrimitive>,
    sh_degree: u8,
}

impl Default for GaussianField {
    fn default() -> Self {
        Self {
            primitives: Vec::new(),
            sh_degree: MAX_SH_DEGREE,
        }
    }
}

impl GaussianField {
    pub fn new(primitives: Vec<GaussianPrimitive>, sh_degree: u8) -> Result<Self> {
        if sh_degree > MAX_SH_DEGREE {
            return Err(Error::Config(format!(
                "SH degree {sh_degree} exceeds the maximum of {MAX_SH_DEGREE}"
            )));
        }
        Ok(Self {
            primitives,
            sh_degree,
        })
    }

    pub fn primitives(&self) -> &[GaussianPrimitive] {
        &self.primitives
    }

    pub fn into_primitives(self) -> Vec<GaussianPrimitive> {
        self.primitives
    }

    pub fn sh_degree(&self) -> u8 {
        self.sh_degree
    }

    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&GaussianPrimitive> {
        self.primitives.get(index)
    }

    pub fn centers(&self) -> Vec<[f64; 3]> {
        self.primitives
            .iter()
            .map(|p| p.center.map(|c| c as f64))
            .collect()
    }

    /// Axis-aligned bounding box of the centers, `None` for an empty field.
    pub fn bounding_box(&self) -> Option<([f64; 3], [f64; 3])> {
        let mut it = self.primitives.iter();
        let first = it.next()?.center.map(|c| c as f64);
        Some(it.fold((first, first), |(mut lo, mut hi), p| {
            for a in 0..3 {
                lo[a] = lo[a].min(p.center[a] as f64);
                hi[a] = hi[a].max(p.center[a] as f64);
            }
            (lo, hi)
        }))
    }

    /// New field holding exactly the primitives at `kept`, in ascending
    /// index order. Indices must be unique and in range.
    pub fn select(&self, kept: &[usize]) -> Result<GaussianField> {
        let mut order = kept.to_vec();
        order.sort_unstable();
        if let Some(w) = order.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate kept index {}", w[0])));
        }
        if let Some(&last) = order.last() {
            if last >= self.len() {
                return Err(Error::OutOfBounds {
                    index: last,
                    len: self.len(),
                });
            }
        }
        Ok(GaussianField {
            primitives: order.iter().map(|&i| self.primitives[i]).collect(),
            sh_degree: self.sh_degree,
        })
    }
}

impl FromIterator<GaussianPrimitive> for GaussianField {
    fn from_iter<I: IntoIterator<Item = GaussianPrimitive>>(iter: I) -> Self {
        Self {
            primitives: iter.into_iter().collect(),
            sh_degree: MAX_SH_DEGREE,
        }
    }
}

/// Compacts `field` down to the primitives in `keep`.
pub fn compact(field: &GaussianField, keep: &PruneSelection) -> Result<GaussianField> {
    field.select(&keep.kept)
}
