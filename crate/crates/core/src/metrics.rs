//! PSNR and single-scale SSIM on float RGB images with peak value 1.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::buffer::RgbImage;
use crate::error::{Error, Result};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Reference and candidate of equal size.
#[derive(Debug, Clone, Copy)]
pub struct ImagePair<'a> {
    reference: &'a RgbImage,
    candidate: &'a RgbImage,
}

impl<'a> ImagePair<'a> {
    pub fn new(reference: &'a RgbImage, candidate: &'a RgbImage) -> Result<Self> {
        if reference.width() != candidate.width() || reference.height() != candidate.height() {
            return Err(Error::Shape {
                expected: reference.width() * reference.height(),
                got: candidate.width() * candidate.height(),
            });
        }
        let finite = |img: &RgbImage| img.as_slice().iter().all(|v| v.is_finite());
        if !finite(reference) || !finite(candidate) {
            return Err(Error::Format("image contains non-finite values".into()));
        }
        Ok(Self { reference, candidate })
    }

    pub fn reference(&self) -> &RgbImage {
        self.reference
    }

    pub fn candidate(&self) -> &RgbImage {
        self.candidate
    }
}

/// PSNR in dB; identical images get `Infinite` instead of a float infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Finite(f64),
    Infinite,
}

impl Psnr {
    /// Value as `f64`, mapping the sentinel to `f64::INFINITY`.
    pub fn db(self) -> f64 {
        match self {
            Psnr::Finite(v) => v,
            Psnr::Infinite => f64::INFINITY,
        }
    }
}

impl std::fmt::Display for Psnr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Psnr::Finite(v) => write!(f, "{v:.4}"),
            Psnr::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Psnr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Psnr::Finite(v) => s.serialize_f64(*v),
            Psnr::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Psnr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Psnr::Finite(v)),
            Raw::Str(s) if s == "inf" => Ok(Psnr::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad psnr value {s:?}"))),
        }
    }
}

pub fn mse(pair: &ImagePair) -> f64 {
    let a = pair.reference.as_slice();
    let b = pair.candidate.as_slice();
    if a.is_empty() {
        return 0.0;
    }
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    sum / a.len() as f64
}

pub fn psnr(pair: &ImagePair) -> Psnr {
    let e = mse(pair);
    if e == 0.0 {
        Psnr::Infinite
    } else {
        Psnr::Finite(10.0 * (1.0 / e).log10())
    }
}

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
pub fn gaussian_taps(size: usize, sigma: f64) -> Vec<f64> {
    let mid = (size as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - mid;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Valid-mode separable filtering of a `w × h` plane.
fn filter_valid(plane: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (ow, oh) = (w + 1 - k, h + 1 - k);
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz[y * ow + x] = taps.iter().zip(&row[x..x + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps
                .iter()
                .enumerate()
                .map(|(j, t)| t * horiz[(y + j) * ow + x])
                .sum();
        }
    }
    out
}

/// Local SSIM map of one channel over valid window positions.
pub fn ssim_map(a: &[f64], b: &[f64], w: usize, h: usize) -> Vec<f64> {
    let taps = gaussian_taps(SSIM_WINDOW, SSIM_SIGMA);
    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);
    let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
        a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
    };
    let mu_a = filter_valid(a, w, h, &taps);
    let mu_b = filter_valid(b, w, h, &taps);
    let aa = filter_valid(&prod(&|x, _| x * x), w, h, &taps);
    let bb = filter_valid(&prod(&|_, y| y * y), w, h, &taps);
    let ab = filter_valid(&prod(&|x, y| x * y), w, h, &taps);
    (0..mu_a.len())
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .collect()
}

/// Mean SSIM, per channel then averaged over channels.
pub fn ssim(pair: &ImagePair) -> Result<f64> {
    let (w, h) = (pair.reference.width(), pair.reference.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::Degenerate(format!(
            "image {w}x{h} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )));
    }
    let mut total = 0.0;
    for c in 0..3 {
        let a: Vec<f64> = pair.reference.channel(c).iter().map(|&v| v as f64).collect();
        let b: Vec<f64> = pair.candidate.channel(c).iter().map(|&v| v as f64).collect();
        let map = ssim_map(&a, &b, w, h);
        total += map.iter().sum::<f64>() / map.len() as f64;
    }
    Ok(total / 3.0)
}

/// Record written by `eval`. `lpips` is reserved and never filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub psnr_db: Psnr,
    pub ssim: f64,
    pub width: usize,
    pub height: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lpips: Option<f64>,
}

pub fn evaluate(pair: &ImagePair) -> Result<MetricRecord> {
    Ok(MetricRecord {
        psnr_db: psnr(pair),
        ssim: ssim(pair)?,
        width: pair.reference.width(),
        height: pair.reference.height(),
        lpips: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(w: usize, h: usize, seed: u64) -> RgbImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RgbImage::new(w, h, (0..w * h * 3).map(|_| rng.gen::<f32>()).collect()).unwrap()
    }

    /// Direct windowed SSIM with weighted sums at every valid position.
    fn brute_ssim(a: &RgbImage, b: &RgbImage) -> f64 {
        let (w, h) = (a.width(), a.height());
        let g = gaussian_taps(SSIM_WINDOW, SSIM_SIGMA);
        let (c1, c2) = (0.01f64 * 0.01, 0.03f64 * 0.03);
        let mut sum = 0.0;
        let mut n = 0;
        for c in 0..3 {
            for y0 in 0..=h - SSIM_WINDOW {
                for x0 in 0..=w - SSIM_WINDOW {
                    let (mut ma, mut mb) = (0.0, 0.0);
                    for j in 0..SSIM_WINDOW {
                        for i in 0..SSIM_WINDOW {
                            let wt = g[i] * g[j];
                            ma += wt * a.pixel(x0 + i, y0 + j)[c] as f64;
                            mb += wt * b.pixel(x0 + i, y0 + j)[c] as f64;
                        }
                    }
                    let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                    for j in 0..SSIM_WINDOW {
                        for i in 0..SSIM_WINDOW {
                            let wt = g[i] * g[j];
                            let da = a.pixel(x0 + i, y0 + j)[c] as f64 - ma;
                            let db = b.pixel(x0 + i, y0 + j)[c] as f64 - mb;
                            va += wt * da * da;
                            vb += wt * db * db;
                            cov += wt * da * db;
                        }
                    }
                    sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                        / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                    n += 1;
                }
            }
        }
        sum / n as f64
    }

    #[test]
    fn psnr_examples() {
        let black = RgbImage::filled(4, 4, [0.0; 3]);
        let grey = RgbImage::filled(4, 4, [0.5; 3]);
        let white = RgbImage::filled(4, 4, [1.0; 3]);
        let p = psnr(&ImagePair::new(&black, &grey).unwrap()).db();
        assert!((p - 6.020_599_913_279_624).abs() < 1e-9, "{p}");
        assert_eq!(psnr(&ImagePair::new(&black, &white).unwrap()), Psnr::Finite(0.0));
        assert_eq!(psnr(&ImagePair::new(&grey, &grey).unwrap()), Psnr::Infinite);
    }

    #[test]
    fn psnr_json_sentinel() {
        let r = MetricRecord {
            psnr_db: Psnr::Infinite,
            ssim: 1.0,
            width: 2,
            height: 3,
            lpips: None,
        };
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"psnr_db":"inf","ssim":1.0,"width":2,"height":3}"#);
        assert_eq!(serde_json::from_str::<MetricRecord>(&s).unwrap(), r);
        let f: Psnr = serde_json::from_str("12.5").unwrap();
        assert_eq!(f, Psnr::Finite(12.5));
    }

    #[test]
    fn shape_mismatch() {
        let a = RgbImage::filled(4, 4, [0.0; 3]);
        let b = RgbImage::filled(4, 5, [0.0; 3]);
        assert!(matches!(ImagePair::new(&a, &b), Err(Error::Shape { .. })));
    }

    #[test]
    fn ssim_self_is_one() {
        let a = noise(24, 19, 1);
        let s = ssim(&ImagePair::new(&a, &a).unwrap()).unwrap();
        assert!((s - 1.0).abs() < 1e-9, "{s}");
    }

    #[test]
    fn ssim_matches_brute_force() {
        for seed in 0..4 {
            let a = noise(16, 16, seed);
            let b = noise(16, 16, seed + 100);
            let fast = ssim(&ImagePair::new(&a, &b).unwrap()).unwrap();
            let slow = brute_ssim(&a, &b);
            assert!((fast - slow).abs() < 1e-6, "{fast} vs {slow}");
        }
    }

    #[test]
    fn ssim_negative_and_noise() {
        let a = noise(16, 16, 7);
        let mut neg = a.clone();
        neg.as_mut_slice().iter_mut().for_each(|v| *v = 1.0 - *v);
        assert!(ssim(&ImagePair::new(&a, &neg).unwrap()).unwrap() < 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let flat = RgbImage::filled(16, 16, [0.5; 3]);
        let mut noisy = flat.clone();
        for v in noisy.as_mut_slice() {
            let g: f64 = rand_distr_normal(&mut rng);
            *v += (0.01 * g) as f32;
        }
        let pair = ImagePair::new(&flat, &noisy).unwrap();
        let s = ssim(&pair).unwrap();
        assert!(s > 0.9 && s < 1.0, "{s}");
        assert!((s - brute_ssim(&flat, &noisy)).abs() < 1e-6);
    }

    fn rand_distr_normal(rng: &mut impl Rng) -> f64 {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    #[test]
    fn ssim_too_small() {
        let a = RgbImage::filled(10, 30, [0.0; 3]);
        assert!(matches!(ssim(&ImagePair::new(&a, &a).unwrap()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn symmetric() {
        let a = noise(13, 12, 5);
        let b = noise(13, 12, 6);
        let ab = ImagePair::new(&a, &b).unwrap();
        let ba = ImagePair::new(&b, &a).unwrap();
        assert_eq!(psnr(&ab), psnr(&ba));
        assert!((ssim(&ab).unwrap() - ssim(&ba).unwrap()).abs() < 1e-9);
    }
}
