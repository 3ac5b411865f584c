//! Δ(k) against a dense LU determinant of I − T(k).

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qgspec::graph::library;
use qgspec::{determinant, determinant_sum, transition_matrix, QuantumGraph};

fn dense_det(g: &QuantumGraph, k: f64) -> Complex64 {
    let t = transition_matrix(g).at(k);
    let n = t.dim();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
        id - t[(i, j)]
    });
    m.determinant()
}

fn ks(count: usize, seed: u64) -> Vec<f64> {
    // fixed pseudo-random points in [0, 200)
    let mut x = seed;
    (0..count)
        .map(|_| {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (x >> 11) as f64 / (1u64 << 53) as f64 * 200.0
        })
        .collect()
}

#[test]
fn benchmark_graphs_match_dense_determinant() {
    for g in [library::regular_star(), library::standard_quadrangle()] {
        let raw = determinant_sum(&transition_matrix(&g)).unwrap();
        let f = determinant(&transition_matrix(&g)).unwrap();
        for k in ks(100, 17) {
            let exact = dense_det(&g, k);
            assert!((raw.evaluate(k) - exact).norm() < 1e-9, "k = {k}");
            assert!((f.unrecentered(k) - exact).norm() < 1e-9, "k = {k}");
        }
    }
}

#[test]
fn single_bond_determinant_is_one_minus_e2ikl() {
    let g = library::single_bond(0.8);
    let raw = determinant_sum(&transition_matrix(&g)).unwrap();
    assert_eq!(raw.len(), 2);
    for k in [0.1, 1.3, 7.7] {
        let expect = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, 1.6 * k);
        assert!((raw.evaluate(k) - expect).norm() < 1e-14);
    }
}

#[test]
fn recentered_levels_are_real() {
    for g in [library::regular_star(), library::standard_quadrangle()] {
        let f = determinant(&transition_matrix(&g)).unwrap();
        for j in 0..4 {
            let d = f.derivative_level(j).unwrap();
            assert!(d.is_real(), "level {j}");
            for k in ks(50, 3 + j as u64) {
                let z = d.value_complex(Complex64::new(k, 0.0));
                assert!(z.im.abs() <= 1e-10 * d.magnitude(), "level {j}, k = {k}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn random_quadrangles_match_dense_determinant(seed in 0u64..1_000_000) {
        let l = library::random_irrational_lengths(6, seed);
        let g = library::quadrangle(l.try_into().unwrap());
        let raw = determinant_sum(&transition_matrix(&g)).unwrap();
        for k in ks(10, seed) {
            prop_assert!((raw.evaluate(k) - dense_det(&g, k)).norm() < 1e-9);
        }
    }
}
