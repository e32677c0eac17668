mod common;

use common::*;
use nalgebra::{DMatrix, Rotation3, Vector3};
use rand::Rng;
use splatprune::filter::{high_pass, low_pass, response_magnitudes, FilterKind};
use splatprune::graph::{build_graph_from_centers, GraphConfig, PrimitiveGraph};
use splatprune::signal::GraphSignal;

fn random_graph(seed: u64) -> (Vec<[f64; 3]>, PrimitiveGraph) {
    let mut r = rng(seed);
    let n = r.gen_range(8..=200);
    let pts = random_points(&mut r, n);
    let g = build_graph_from_centers(&pts, &GraphConfig::default()).unwrap();
    (pts, g)
}

fn random_signal(seed: u64, n: usize, c: usize) -> GraphSignal {
    let mut r = rng(seed);
    GraphSignal::new(n, c, (0..n * c).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap()
}

#[test]
fn weights_match_dense_construction() {
    for seed in 0..20 {
        let (pts, g) = random_graph(seed);
        let lengths = edge_lengths(&pts, g.tau());
        let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
        let var = lengths.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / lengths.len() as f64;
        assert!((g.sigma() - var.sqrt()).abs() < 1e-9 * var.sqrt().max(1.0), "seed {seed}");

        let w = dense_weights(&pts, g.tau(), g.sigma());
        let mut sparse = DMatrix::zeros(pts.len(), pts.len());
        for (i, j, wij) in g.edges() {
            sparse[(i, j)] = wij;
            sparse[(j, i)] = wij;
        }
        assert!((&sparse - &w).abs().max() < 1e-12, "seed {seed}");
        assert_eq!(g.edge_count(), lengths.len());
    }
}

#[test]
fn spectral_norm_matches_eigendecomposition() {
    for seed in 0..60 {
        let (pts, g) = random_graph(seed);
        let exact = DenseSpectrum::of(&dense_weights(&pts, g.tau(), g.sigma())).lambda_max;
        let est = g.spectral_norm().unwrap();
        assert!((est - exact).abs() <= 1e-9 * exact, "seed {seed}: {est} vs {exact}");
    }
}

#[test]
fn filters_match_spectral_route() {
    for seed in 0..60 {
        let (pts, g) = random_graph(seed);
        let n = pts.len();
        let spec = DenseSpectrum::of(&dense_weights(&pts, g.tau(), g.sigma()));
        let x = random_signal(seed + 1000, n, 3);
        let xm = to_matrix(n, 3, x.as_slice());
        let hp = to_matrix(n, 3, high_pass(&g, &x).unwrap().as_slice());
        let lp = to_matrix(n, 3, low_pass(&g, &x).unwrap().as_slice());
        assert!(rel_err(&hp, &spec.filter(&xm, -1.0)) < 1e-6, "seed {seed}");
        assert!(rel_err(&lp, &spec.filter(&xm, 1.0)) < 1e-6, "seed {seed}");
    }
}

#[test]
fn operator_identity_and_linearity() {
    for seed in 0..100 {
        let (_, g) = random_graph(seed);
        let n = g.node_count();
        let x = random_signal(seed + 7, n, 3);
        let y = random_signal(seed + 9, n, 3);
        let sum = high_pass(&g, &x).unwrap().axpy(1.0, &low_pass(&g, &x).unwrap()).unwrap();
        for (s, v) in sum.as_slice().iter().zip(x.as_slice()) {
            assert!((s - 2.0 * v).abs() < 1e-9);
        }
        let (a, b) = (0.7, -1.3);
        let mix = GraphSignal::new(
            n,
            3,
            x.as_slice().iter().zip(y.as_slice()).map(|(p, q)| a * p + b * q).collect(),
        )
        .unwrap();
        let lhs = high_pass(&g, &mix).unwrap();
        let hx = high_pass(&g, &x).unwrap();
        let hy = high_pass(&g, &y).unwrap();
        for i in 0..n * 3 {
            let rhs = a * hx.as_slice()[i] + b * hy.as_slice()[i];
            assert!((lhs.as_slice()[i] - rhs).abs() < 1e-9);
        }
    }
}

#[test]
fn shift_is_symmetric() {
    for seed in 0..30 {
        let (_, g) = random_graph(seed);
        let n = g.node_count();
        let x = random_signal(seed + 11, n, 1);
        let y = random_signal(seed + 13, n, 1);
        let ax = g.shift_apply(&x).unwrap();
        let ay = g.shift_apply(&y).unwrap();
        let d1: f64 = y.as_slice().iter().zip(ax.as_slice()).map(|(a, b)| a * b).sum();
        let d2: f64 = x.as_slice().iter().zip(ay.as_slice()).map(|(a, b)| a * b).sum();
        assert!((d1 - d2).abs() < 1e-9);
    }
}

#[test]
fn top_eigenvector_is_attenuated_by_high_pass() {
    for seed in 0..20 {
        let (pts, g) = random_graph(seed);
        let n = pts.len();
        let spec = DenseSpectrum::of(&dense_weights(&pts, g.tau(), g.sigma()));
        let v = spec.top_vector();
        let x = GraphSignal::new(n, 1, v.iter().copied().collect()).unwrap();
        let norm = v.norm();
        let h = high_pass(&g, &x).unwrap();
        let l = low_pass(&g, &x).unwrap();
        let hn = h.as_slice().iter().map(|a| a * a).sum::<f64>().sqrt();
        let ln = l.as_slice().iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(hn <= 1e-6 * norm, "seed {seed}: {hn}");
        assert!((ln - 2.0 * norm).abs() <= 1e-6 * 2.0 * norm, "seed {seed}");
    }
}

#[test]
fn response_is_rotation_invariant() {
    for seed in 0..20 {
        let (pts, g) = random_graph(seed);
        let mut r = rng(seed + 500);
        let rot = Rotation3::from_euler_angles(r.gen_range(-3.0..3.0), r.gen_range(-1.5..1.5), r.gen_range(-3.0..3.0));
        let turned: Vec<[f64; 3]> = pts
            .iter()
            .map(|p| (rot * Vector3::from(*p)).into())
            .collect();
        let g2 = build_graph_from_centers(&turned, &GraphConfig {
            tau: Some(g.tau()),
            sigma: Some(g.sigma()),
            ..Default::default()
        })
        .unwrap();
        let a = response_magnitudes(&g, &GraphSignal::from_points(&pts), FilterKind::HighPass).unwrap();
        let b = response_magnitudes(&g2, &GraphSignal::from_points(&turned), FilterKind::HighPass).unwrap();
        for (p, q) in a.pi.iter().zip(&b.pi) {
            assert!((p - q).abs() <= 1e-8 * p.abs().max(1.0), "seed {seed}");
        }
    }
}
