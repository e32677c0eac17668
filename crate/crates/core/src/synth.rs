//! Deterministic test scenes: a smooth ground plane plus a dense detail
//! cluster standing on it.

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{logit, GaussianField, GaussianPrimitive, MAX_SH_DEGREE};
use crate::raster::camera::CameraModel;
use crate::raster::sh::dc_for_color;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    /// Primitives on the ground plane.
    pub plane: usize,
    /// Primitives in the detail cluster.
    pub cluster: usize,
    /// Lattice spacing on the plane, world units.
    pub plane_spacing: f64,
    /// Lattice spacing inside the cluster; smaller than `plane_spacing`.
    pub cluster_spacing: f64,
    /// Center of the plane; the plane is horizontal (constant z).
    pub plane_center: [f64; 3],
    /// Center of the cluster.
    pub cluster_center: [f64; 3],
    /// Per-axis lattice jitter as a fraction of the spacing.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self::with_counts(18_000, 2_000)
    }
}

/// Which part of the scene a generated primitive belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Plane,
    Cluster,
}

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub field: GaussianField,
    /// Region of each primitive, in field order.
    pub regions: Vec<Region>,
    pub spec: SceneSpec,
}

impl SyntheticScene {
    pub fn cluster_fraction(&self) -> f64 {
        self.regions.iter().filter(|&&r| r == Region::Cluster).count() as f64 / self.regions.len() as f64
    }
}

impl SceneSpec {
    /// Plane centered on the origin with the cluster resting on its middle.
    pub fn with_counts(plane: usize, cluster: usize) -> Self {
        let mut spec = Self {
            plane,
            cluster,
            plane_spacing: 1.0,
            cluster_spacing: 0.25,
            plane_center: [0.0; 3],
            cluster_center: [0.0; 3],
            jitter: 0.3,
            seed: 0,
        };
        spec.cluster_center[2] = spec.cluster_half_extent() + 0.5 * spec.plane_spacing;
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if self.plane == 0 || self.cluster == 0 {
            return Err(Error::Degenerate("synthetic scene needs nonzero plane and cluster counts".into()));
        }
        if !(self.plane_spacing > 0.0 && self.cluster_spacing > 0.0) {
            return Err(Error::Config("spacings must be positive".into()));
        }
        if self.cluster_spacing >= self.plane_spacing {
            return Err(Error::Config("cluster_spacing must be below plane_spacing".into()));
        }
        if !(0.0..0.5).contains(&self.jitter) {
            return Err(Error::Config("jitter must lie in [0, 0.5)".into()));
        }
        Ok(())
    }

    /// Half-width of the square the plane lattice covers.
    pub fn plane_half_extent(&self) -> f64 {
        let side = (self.plane as f64).sqrt().ceil();
        0.5 * side * self.plane_spacing
    }

    pub fn cluster_half_extent(&self) -> f64 {
        let side = (self.cluster as f64).cbrt().ceil();
        0.5 * side * self.cluster_spacing
    }

    /// True when `x` lies in the cluster's bounding cube, padded by one spacing.
    pub fn in_cluster(&self, x: [f64; 3]) -> bool {
        let r = self.cluster_half_extent() + self.cluster_spacing;
        (0..3).all(|a| (x[a] - self.cluster_center[a]).abs() <= r)
    }

    pub fn generate(&self) -> Result<SyntheticScene> {
        self.validate()?;
        let mut prims = Vec::with_capacity(self.plane + self.cluster);
        let mut regions = Vec::with_capacity(self.plane + self.cluster);

        // Independent streams so changing one count leaves the other part alone.
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1);
        let side = (self.plane as f64).sqrt().ceil() as usize;
        let half = self.plane_half_extent();
        let s = self.plane_spacing;
        for i in 0..self.plane {
            let (gx, gy) = ((i % side) as f64, (i / side) as f64);
            let x = self.plane_center[0] - half + (gx + 0.5) * s + s * self.jitter * rng.gen_range(-1.0..1.0);
            let y = self.plane_center[1] - half + (gy + 0.5) * s + s * self.jitter * rng.gen_range(-1.0..1.0);
            let z = self.plane_center[2] + 0.02 * s * rng.gen_range(-1.0..1.0);
            let u = (x - self.plane_center[0]) / half;
            let v = (y - self.plane_center[1]) / half;
            let rgb = [
                0.45 + 0.25 * (1.3 * u).sin(),
                0.50 + 0.20 * (1.1 * v).cos(),
                0.40 + 0.15 * (u + v),
            ];
            let yaw = rng.gen_range(0.0..std::f64::consts::PI);
            let q = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw);
            prims.push(primitive(
                [x, y, z],
                [0.7 * s, 0.5 * s, 0.05 * s],
                q,
                0.9,
                rgb,
            ));
            regions.push(Region::Plane);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(2);
        let side = (self.cluster as f64).cbrt().ceil() as usize;
        let half = self.cluster_half_extent();
        let s = self.cluster_spacing;
        for i in 0..self.cluster {
            let g = [(i % side) as f64, ((i / side) % side) as f64, (i / (side * side)) as f64];
            let mut x = [0.0; 3];
            for a in 0..3 {
                x[a] = self.cluster_center[a] - half + (g[a] + 0.5) * s + s * self.jitter * rng.gen_range(-1.0..1.0);
            }
            let rgb = [rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)];
            let q = UnitQuaternion::from_euler_angles(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let scale = [
                s * rng.gen_range(0.35..0.7),
                s * rng.gen_range(0.25..0.5),
                s * rng.gen_range(0.15..0.35),
            ];
            prims.push(primitive(x, scale, q, 0.85, rgb));
            regions.push(Region::Cluster);
        }

        Ok(SyntheticScene {
            field: GaussianField::new(prims, MAX_SH_DEGREE)?,
            regions,
            spec: self.clone(),
        })
    }

    /// Oblique view of the cluster with the plane behind it; not aligned
    /// with either lattice.
    pub fn held_out_camera(&self, width: usize, height: usize) -> Result<CameraModel> {
        let target = Vector3::from(self.cluster_center);
        let r = 6.0 * self.cluster_half_extent().max(self.plane_spacing);
        let eye = target + Vector3::new(0.37, -0.81, 0.46).normalize() * r;
        CameraModel::look_at(eye, target, Vector3::z(), width, height, 0.9)
    }
}

fn primitive(
    center: [f64; 3],
    scale: [f64; 3],
    q: UnitQuaternion<f64>,
    opacity: f64,
    rgb: [f64; 3],
) -> GaussianPrimitive {
    let mut p = GaussianPrimitive {
        center: center.map(|v| v as f32),
        normal: [0.0; 3],
        rotation: [q.w as f32, q.i as f32, q.j as f32, q.k as f32],
        log_scale: scale.map(|v| v.ln() as f32),
        opacity_logit: logit(opacity) as f32,
        ..Default::default()
    };
    for (c, v) in rgb.iter().enumerate() {
        p.sh_coeffs[c] = dc_for_color(v.clamp(0.0, 1.0));
    }
    p
}
