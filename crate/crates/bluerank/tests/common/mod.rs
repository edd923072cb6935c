//! Shared test oracles, independent of the library's implementation path:
//! a cyclic Jacobi-rotation eigensolver and a straight-line reference
//! pipeline (brute-force distances, simple kNN rules, Jacobi basis) for
//! cross-checking blue-noise scores.

#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use bluerank::Dataset;

/// Plain Gaussian dataset, no cluster structure.
pub fn random_dataset(n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = Array2::from_shape_fn((n, d), |_| {
        let v: f64 = rng.sample(StandardNormal);
        v
    });
    let names = (0..d).map(|j| format!("f{j}")).collect();
    Dataset::new(values, names, None).unwrap()
}

/// Cyclic Jacobi eigensolver for symmetric matrices. O(n^3) per sweep and
/// foolproof for small n; eigenpairs are returned sorted ascending.
pub fn jacobi_eigh(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v: Array2<f64> = Array2::eye(n);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[[p, q]] * m[[p, q]];
            }
        }
        if off <= 1e-24 {
            break;
        }
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for i in 0..n {
                    let mip = m[[i, p]];
                    let miq = m[[i, q]];
                    m[[i, p]] = c * mip - s * miq;
                    m[[i, q]] = s * mip + c * miq;
                }
                for i in 0..n {
                    let mpi = m[[p, i]];
                    let mqi = m[[q, i]];
                    m[[p, i]] = c * mpi - s * mqi;
                    m[[q, i]] = s * mpi + c * mqi;
                }
                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = c * vip - s * viq;
                    v[[i, q]] = s * vip + c * viq;
                }
            }
        }
    }

    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|j| (m[[j, j]], v.column(j).to_vec()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let eigenvalues: Vec<f64> = pairs.iter().map(|(l, _)| *l).collect();
    let mut vectors = Array2::zeros((n, n));
    for (j, (_, col)) in pairs.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            vectors[[i, j]] = x;
        }
    }
    (eigenvalues, vectors)
}

/// Reference pipeline over plain nested Vecs: brute-force distances,
/// union-symmetrized kNN with ties by smaller index, median heat-kernel
/// bandwidth, normalized Laplacian, Jacobi eigenbasis with the library's
/// declared sign/tie conventions applied independently.
pub struct ReferencePipeline {
    pub k_neighbors: usize,
    pub heat_kernel: bool,
}

impl ReferencePipeline {
    fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..a.len() {
            acc += (a[i] - b[i]) * (a[i] - b[i]);
        }
        acc
    }

    pub fn adjacency(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = rows.len();
        let k = self.k_neighbors;
        let mut chosen: Vec<Vec<(usize, f64)>> = Vec::new();
        for i in 0..n {
            let mut dists: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (Self::sq_dist(&rows[i], &rows[j]), j))
                .collect();
            dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            chosen.push(dists[..k].iter().map(|&(d2, j)| (j, d2)).collect());
        }
        let sigma = if self.heat_kernel {
            let mut all: Vec<f64> = chosen
                .iter()
                .flat_map(|c| c.iter().map(|&(_, d2)| d2.sqrt()))
                .collect();
            all.sort_by(|a, b| a.total_cmp(b));
            let m = all.len();
            Some(if m % 2 == 1 {
                all[m / 2]
            } else {
                0.5 * (all[m / 2 - 1] + all[m / 2])
            })
        } else {
            None
        };
        let mut adj = vec![vec![0.0; n]; n];
        for i in 0..n {
            for &(j, d2) in &chosen[i] {
                let w = match sigma {
                    None => 1.0,
                    Some(s) => {
                        if d2 == 0.0 {
                            1.0
                        } else {
                            (-d2 / (s * s)).exp()
                        }
                    }
                };
                adj[i][j] = w;
                adj[j][i] = w;
            }
        }
        adj
    }

    pub fn normalized_laplacian(adj: &[Vec<f64>]) -> Array2<f64> {
        let n = adj.len();
        let degree: Vec<f64> = adj.iter().map(|row| row.iter().sum()).collect();
        let mut l = Array2::eye(n);
        for i in 0..n {
            for j in 0..n {
                if i != j && adj[i][j] != 0.0 {
                    l[[i, j]] = -adj[i][j] / (degree[i] * degree[j]).sqrt();
                }
            }
        }
        l
    }

    /// Jacobi basis with the declared sign convention (largest-|entry|
    /// positive) and lexicographic ordering of exact eigenvalue ties.
    pub fn basis(&self, rows: &[Vec<f64>]) -> (Vec<f64>, Array2<f64>) {
        let adj = self.adjacency(rows);
        let l = Self::normalized_laplacian(&adj);
        let (eigenvalues, mut vectors) = jacobi_eigh(&l);
        let n = eigenvalues.len();
        for j in 0..n {
            let mut best = 0;
            for i in 0..n {
                if vectors[[i, j]].abs() > vectors[[best, j]].abs() {
                    best = i;
                }
            }
            if vectors[[best, j]] < 0.0 {
                for i in 0..n {
                    vectors[[i, j]] = -vectors[[i, j]];
                }
            }
        }
        (eigenvalues, vectors)
    }

    /// γ for every dimension: mask, rebuild, re-expand the unmasked
    /// blue-noise signal, negate its low-band energy.
    pub fn gammas(&self, rows: &[Vec<f64>], k0: usize) -> Vec<f64> {
        let n = rows.len();
        let dims = rows[0].len();
        let (_, u) = self.basis(rows);
        let mut signal = vec![0.0; n];
        for k in k0..n {
            for i in 0..n {
                signal[i] += u[[i, k]];
            }
        }

        let mut gammas = Vec::with_capacity(dims);
        for d in 0..dims {
            let mut masked = rows.to_vec();
            for row in &mut masked {
                row[d] = 0.0;
            }
            let (_, ud) = self.basis(&masked);
            let mut energy = 0.0;
            for k in 0..k0 {
                let mut coeff = 0.0;
                for i in 0..n {
                    coeff += ud[[i, k]] * signal[i];
                }
                energy += coeff * coeff;
            }
            gammas.push(-energy);
        }
        gammas
    }
}

/// Rows of a dataset as plain nested Vecs (reference-pipeline input).
pub fn dataset_rows(ds: &Dataset) -> Vec<Vec<f64>> {
    ds.values()
        .rows()
        .into_iter()
        .map(|r| r.to_vec())
        .collect()
}
