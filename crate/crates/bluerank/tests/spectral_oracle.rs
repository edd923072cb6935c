//! Cross-checks of the QL eigensolver against the independent Jacobi
//! oracle, plus property-based spectral invariants.

mod common;

use bluerank::{
    build_knn_graph, eigendecompose, gft, low_band_energy, normalized_laplacian,
    synthesize_blue_noise, GraphParams,
};
use common::{dataset_rows, jacobi_eigh, random_dataset, ReferencePipeline};
use proptest::prelude::*;

fn knn_laplacian(n: usize, d: usize, seed: u64, k: usize) -> ndarray::Array2<f64> {
    let ds = random_dataset(n, d, seed);
    let g = build_knn_graph(
        &ds,
        &GraphParams {
            k_neighbors: k,
            ..GraphParams::default()
        },
    )
    .unwrap();
    normalized_laplacian(&g).unwrap()
}

#[test]
fn eight_node_graph_matches_jacobi_oracle() {
    let l = knn_laplacian(8, 3, 17, 3);
    let basis = eigendecompose(&l).unwrap();
    let (oracle_vals, _) = jacobi_eigh(&l);
    for (a, b) in basis.eigenvalues().iter().zip(oracle_vals.iter()) {
        assert!((a - b).abs() <= 1e-7, "{a} vs oracle {b}");
    }
    // residual |L U - U Lambda|max
    let u = basis.eigenvectors();
    let lu = l.dot(u);
    for k in 0..8 {
        for i in 0..8 {
            let resid = (lu[[i, k]] - basis.eigenvalues()[k] * u[[i, k]]).abs();
            assert!(resid <= 1e-7, "residual {resid} at ({i},{k})");
        }
    }
}

#[test]
fn eigenvalues_match_oracle_across_sizes() {
    for (i, &n) in [4usize, 5, 9, 16, 23, 32, 47, 64].iter().enumerate() {
        let l = knn_laplacian(n, 4, 100 + i as u64, 3.min(n - 1));
        let basis = eigendecompose(&l).unwrap();
        let (oracle_vals, _) = jacobi_eigh(&l);
        for (a, b) in basis.eigenvalues().iter().zip(oracle_vals.iter()) {
            assert!((a - b).abs() <= 1e-7, "n={n}: {a} vs {b}");
        }
        assert!(basis.eigenvalues()[0] >= -1e-9);
        assert!(*basis.eigenvalues().last().unwrap() <= 2.0 + 1e-9);
    }
}

#[test]
fn reference_pipeline_builds_same_laplacian() {
    let ds = random_dataset(20, 5, 3);
    let g = build_knn_graph(
        &ds,
        &GraphParams {
            k_neighbors: 4,
            ..GraphParams::default()
        },
    )
    .unwrap();
    let l = normalized_laplacian(&g).unwrap();
    let reference = ReferencePipeline {
        k_neighbors: 4,
        heat_kernel: true,
    };
    let l_ref = ReferencePipeline::normalized_laplacian(&reference.adjacency(&dataset_rows(&ds)));
    for i in 0..20 {
        for j in 0..20 {
            assert!(
                (l[[i, j]] - l_ref[[i, j]]).abs() <= 1e-12,
                "L mismatch at ({i},{j}): {} vs {}",
                l[[i, j]],
                l_ref[[i, j]]
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval_holds(seed in 0u64..1000, n in 6usize..32) {
        let l = knn_laplacian(n, 3, seed, 3);
        let basis = eigendecompose(&l).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed ^ 0xabcd);
        let signal: Vec<f64> = (0..n)
            .map(|_| rand::Rng::gen_range(&mut rng, -2.0..2.0))
            .collect();
        let spectrum = gft(&basis, &signal).unwrap();
        let ns: f64 = signal.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nh: f64 = spectrum.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((ns - nh).abs() <= 1e-9 * ns.max(1.0));
    }

    #[test]
    fn blue_noise_identities(seed in 0u64..1000, n in 6usize..32) {
        let l = knn_laplacian(n, 3, seed, 3);
        let basis = eigendecompose(&l).unwrap();
        for k0 in [1, n / 4 + 1, n - 1] {
            let blue = synthesize_blue_noise(&basis, k0).unwrap();
            prop_assert_eq!(low_band_energy(&blue.spectrum, k0).unwrap(), 0.0);
            let energy: f64 = blue.signal.iter().map(|v| v * v).sum();
            prop_assert!((energy - (n - k0) as f64).abs() <= 1e-8);
            let spectrum = gft(&basis, &blue.signal).unwrap();
            for (a, b) in spectrum.iter().zip(blue.spectrum.iter()) {
                prop_assert!((a - b).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn orthonormality_holds(seed in 0u64..1000, n in 4usize..40) {
        let l = knn_laplacian(n, 4, seed, 3.min(n - 1));
        let basis = eigendecompose(&l).unwrap();
        let u = basis.eigenvectors();
        let gram = u.t().dot(u);
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((gram[[i, j]] - expect).abs() <= 1e-8);
            }
        }
    }
}
