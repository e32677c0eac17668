//! Real spherical-harmonic radiance, degree 0 through 3, in the sign and
//! ordering convention of common 3DGS checkpoints.

use nalgebra::Vector3;

use crate::model::SH_COEFFS;

pub const SH_C0: f64 = 0.282_094_791_773_878_14;
const SH_C1: f64 = 0.488_602_511_902_919_9;
const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
const SH_C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

/// Basis values for a unit direction; entries above `degree` are zero.
pub fn sh_basis(dir: &Vector3<f64>, degree: u8) -> [f64; 16] {
    let (x, y, z) = (dir.x, dir.y, dir.z);
    let mut b = [0.0; 16];
    b[0] = SH_C0;
    if degree >= 1 {
        b[1] = -SH_C1 * y;
        b[2] = SH_C1 * z;
        b[3] = -SH_C1 * x;
    }
    if degree >= 2 {
        let (xx, yy, zz) = (x * x, y * y, z * z);
        b[4] = SH_C2[0] * x * y;
        b[5] = SH_C2[1] * y * z;
        b[6] = SH_C2[2] * (2.0 * zz - xx - yy);
        b[7] = SH_C2[3] * x * z;
        b[8] = SH_C2[4] * (xx - yy);
        if degree >= 3 {
            b[9] = SH_C3[0] * y * (3.0 * xx - yy);
            b[10] = SH_C3[1] * x * y * z;
            b[11] = SH_C3[2] * y * (4.0 * zz - xx - yy);
            b[12] = SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
            b[13] = SH_C3[4] * x * (4.0 * zz - xx - yy);
            b[14] = SH_C3[5] * z * (xx - yy);
            b[15] = SH_C3[6] * x * (xx - 3.0 * yy);
        }
    }
    b
}

/// RGB seen along `view_dir`: basis contracted with the coefficients per
/// channel, offset by 0.5 and clamped to `[0, 1]`.
pub fn evaluate_sh(coeffs: &[f32; SH_COEFFS], view_dir: &Vector3<f64>, degree: u8) -> [f64; 3] {
    let basis = sh_basis(view_dir, degree);
    let terms = (degree as usize + 1).pow(2);
    let mut rgb = [0.0; 3];
    for (c, out) in rgb.iter_mut().enumerate() {
        let mut v = basis[0] * coeffs[c] as f64;
        for (k, b) in basis.iter().enumerate().take(terms).skip(1) {
            v += b * coeffs[3 + c * 15 + k - 1] as f64;
        }
        *out = (v + 0.5).clamp(0.0, 1.0);
    }
    rgb
}

/// DC coefficient that evaluates to `value` after the 0.5 offset.
pub fn dc_for_color(value: f64) -> f32 {
    ((value - 0.5) / SH_C0) as f32
}
