//! CPU reference renderer.

pub mod camera;
pub mod render;
pub mod sh;

pub use camera::{CameraFile, CameraModel};
pub use render::{
    composite, fragments, project_center, project_covariance, projection_jacobian, render,
    render_features, FeatureTarget, RenderConfig, RenderStats, RenderTarget, SplatFragment,
};
pub use sh::{evaluate_sh, sh_basis};
