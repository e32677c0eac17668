//! Independent oracles shared by the integration and acceptance tests.
//! Nothing here goes through the sparse graph code paths.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Jittered-lattice point set of `n` points; the jitter keeps nearest
/// neighbour distances varied so the default τ gives a nontrivial graph.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 3]> {
    let side = (n as f64).cbrt().ceil() as usize;
    let spacing = rng.gen_range(0.5..2.0);
    let jitter = rng.gen_range(0.05..0.45);
    let offset = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
    (0..n)
        .map(|i| {
            let g = [i % side, (i / side) % side, i / (side * side)];
            let mut p = [0.0; 3];
            for a in 0..3 {
                p[a] = offset[a] + spacing * (g[a] as f64 + jitter * rng.gen_range(-1.0..1.0));
            }
            p
        })
        .collect()
}

pub fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Dense weight matrix from every pair, with the given τ and σ.
pub fn dense_weights(points: &[[f64; 3]], tau: f64, sigma: f64) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| {
        let d = dist(&points[i], &points[j]);
        if i != j && d < tau {
            (-d * d / (2.0 * sigma * sigma)).exp()
        } else {
            0.0
        }
    })
}

/// Pairwise distances under τ, brute force.
pub fn edge_lengths(points: &[[f64; 3]], tau: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = dist(&points[i], &points[j]);
            if d < tau {
                out.push(d);
            }
        }
    }
    out
}

/// Spectral route: with `W = V M Vᵀ` and `A = W / max(M)`, returns
/// `V (I + sign · M / max(M)) Vᵀ x` per channel. `sign = -1` is the
/// high-pass filter and `+1` the low-pass filter.
pub struct DenseSpectrum {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
    pub lambda_max: f64,
}

impl DenseSpectrum {
    pub fn of(w: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(w.clone());
        let lambda_max = eig.eigenvalues.max();
        Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
            lambda_max,
        }
    }

    pub fn filter(&self, x: &DMatrix<f64>, sign: f64) -> DMatrix<f64> {
        let gain = self.values.map(|m| 1.0 + sign * m / self.lambda_max);
        let coeffs = self.vectors.transpose() * x;
        let scaled = DMatrix::from_fn(coeffs.nrows(), coeffs.ncols(), |r, c| gain[r] * coeffs[(r, c)]);
        &self.vectors * scaled
    }

    /// Unit eigenvector of the largest eigenvalue.
    pub fn top_vector(&self) -> DVector<f64> {
        let k = self.values.imax();
        self.vectors.column(k).into_owned()
    }
}

/// Row-major `n × c` buffer as a matrix.
pub fn to_matrix(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, data)
}

pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Full-sort reference for band-limited selection: `h` largest by
/// (value desc, index asc), then the smallest of the rest by (value asc,
/// index asc).
pub fn brute_select(pi: &[f64], m: usize, h: usize) -> (Vec<usize>, Vec<usize>) {
    let n = pi.len();
    let mut desc: Vec<usize> = (0..n).collect();
    desc.sort_by(|&a, &b| pi[b].partial_cmp(&pi[a]).unwrap().then(a.cmp(&b)));
    let mut high: Vec<usize> = desc[..h].to_vec();
    let mut rest: Vec<usize> = (0..n).filter(|i| !high.contains(i)).collect();
    rest.sort_by(|&a, &b| pi[a].partial_cmp(&pi[b]).unwrap().then(a.cmp(&b)));
    let mut low: Vec<usize> = rest[..m - h].to_vec();
    high.sort();
    low.sort();
    (high, low)
}
