//! k-nearest-neighbor sample graph and its normalized Laplacian.

use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataio::Dataset;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("k_neighbors {k} out of range for {n} samples (need 1 <= k <= N-1)")]
    KOutOfRange { k: usize, n: usize },
    #[error("heat-kernel bandwidth must be > 0, got {0}")]
    BadBandwidth(f64),
    #[error("node {0} has zero degree; normalized Laplacian undefined")]
    ZeroDegree(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Edge weighting scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Binary,
    HeatKernel,
}

/// How the heat-kernel bandwidth σ is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthRule {
    /// σ = median of all selected directed kNN distances.
    MedianKnnDistance,
    /// σ supplied by the caller.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GraphParams {
    pub k_neighbors: usize,
    pub weighting: Weighting,
    pub bandwidth_rule: BandwidthRule,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            k_neighbors: 10,
            weighting: Weighting::HeatKernel,
            bandwidth_rule: BandwidthRule::MedianKnnDistance,
        }
    }
}

/// Symmetric non-negative weighted adjacency over N sample nodes,
/// stored as an undirected edge list plus per-node neighbor lists.
/// `adjacency(i,j) == adjacency(j,i)` holds exactly: each undirected
/// edge carries a single weight value.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    /// Undirected edges (i < j), sorted lexicographically.
    edges: Vec<(usize, usize, f64)>,
    /// Per-node (neighbor, weight) lists, sorted by neighbor index.
    neighbors: Vec<Vec<(usize, f64)>>,
    /// Bandwidth actually used for heat-kernel weights, if any.
    sigma: Option<f64>,
}

impl Graph {
    fn from_edges(n: usize, mut edges: Vec<(usize, usize, f64)>, sigma: Option<f64>) -> Self {
        edges.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j, w) in &edges {
            neighbors[i].push((j, w));
            neighbors[j].push((i, w));
        }
        for list in &mut neighbors {
            list.sort_unstable_by_key(|&(j, _)| j);
        }
        Self {
            n,
            edges,
            neighbors,
            sigma,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Undirected edges (i < j, sorted by (i, j)).
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    /// Weighted degree of node `i`.
    pub fn degree(&self, i: usize) -> f64 {
        self.neighbors[i].iter().map(|&(_, w)| w).sum()
    }

    /// Heat-kernel bandwidth used to weight this graph, if any.
    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    /// Dense symmetric adjacency (diagnostics and small-N tests).
    pub fn adjacency_dense(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.n, self.n));
        for &(i, j, w) in &self.edges {
            a[[i, j]] = w;
            a[[j, i]] = w;
        }
        a
    }

    /// Debug dump: one "i j weight" line per undirected edge, sorted by (i, j).
    pub fn write_edge_list(&self, mut w: impl Write) -> Result<(), GraphError> {
        for &(i, j, weight) in &self.edges {
            writeln!(w, "{i} {j} {weight}")?;
        }
        Ok(())
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        for lane in 0..4 {
            let d = a[i + lane] - b[i + lane];
            acc[lane] += d * d;
        }
    }
    let mut tail = 0.0;
    for i in (chunks * 4)..a.len() {
        let d = a[i] - b[i];
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Full symmetric matrix of pairwise squared Euclidean distances
/// (flat row-major, `n * n`).
fn pairwise_sq_distances(values: &ndarray::ArrayView2<f64>, n: usize, d: usize) -> Vec<f64> {
    let standard = values.as_standard_layout();
    let data: &[f64] = standard.as_slice().expect("standard layout has a slice");
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        let xi = &data[i * d..(i + 1) * d];
        for j in (i + 1)..n {
            let d2 = squared_distance(xi, &data[j * d..(j + 1) * d]);
            out[i * n + j] = d2;
            out[j * n + i] = d2;
        }
    }
    out
}

/// Median of an unsorted slice; even lengths average the two middle values.
fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(|a, b| a.total_cmp(b));
    let m = values.len();
    if m == 0 {
        return 0.0;
    }
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

/// Build the directed kNN graph under Euclidean distance and symmetrize by
/// union (an edge is kept if either endpoint selects the other). Distance
/// ties are broken by the smaller node index so results are reproducible.
pub fn build_knn_graph(ds: &Dataset, params: &GraphParams) -> Result<Graph, GraphError> {
    let n = ds.n();
    let k = params.k_neighbors;
    if k == 0 || k > n - 1 {
        return Err(GraphError::KOutOfRange { k, n });
    }
    if let BandwidthRule::Fixed(sigma) = params.bandwidth_rule {
        if !(sigma > 0.0) {
            return Err(GraphError::BadBandwidth(sigma));
        }
    }

    let d2_matrix = pairwise_sq_distances(&ds.values().view(), n, ds.d());
    // Directed selection: the k smallest (distance, index) pairs per node.
    let mut selected: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        scratch.clear();
        let row = &d2_matrix[i * n..(i + 1) * n];
        for (j, &d2) in row.iter().enumerate() {
            if j != i {
                scratch.push((d2, j));
            }
        }
        scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        selected.push(scratch[..k].iter().map(|&(d2, j)| (j, d2)).collect());
    }

    let sigma = match (params.weighting, params.bandwidth_rule) {
        (Weighting::Binary, _) => None,
        (Weighting::HeatKernel, BandwidthRule::Fixed(s)) => Some(s),
        (Weighting::HeatKernel, BandwidthRule::MedianKnnDistance) => {
            let mut dists: Vec<f64> = selected
                .iter()
                .flat_map(|list| list.iter().map(|&(_, d2)| d2.sqrt()))
                .collect();
            Some(median(&mut dists))
        }
    };

    // Union symmetrization over the directed selections.
    let mut edge_d2: std::collections::BTreeMap<(usize, usize), f64> =
        std::collections::BTreeMap::new();
    for (i, list) in selected.iter().enumerate() {
        for &(j, d2) in list {
            let key = if i < j { (i, j) } else { (j, i) };
            edge_d2.entry(key).or_insert(d2);
        }
    }

    let edges: Vec<(usize, usize, f64)> = edge_d2
        .into_iter()
        .map(|((i, j), d2)| {
            let w = match params.weighting {
                Weighting::Binary => 1.0,
                Weighting::HeatKernel => {
                    let s = sigma.unwrap();
                    if d2 == 0.0 {
                        1.0
                    } else {
                        (-d2 / (s * s)).exp()
                    }
                }
            };
            (i, j, w)
        })
        .collect();

    Ok(Graph::from_edges(n, edges, sigma))
}

/// L = I − D^{−1/2} A D^{−1/2}. Diagonal entries are exactly 1; the
/// off-diagonal block is exactly symmetric because each undirected edge
/// is computed once and mirrored.
pub fn normalized_laplacian(g: &Graph) -> Result<Array2<f64>, GraphError> {
    let n = g.n();
    let mut degree = vec![0.0; n];
    for &(i, j, w) in g.edges() {
        degree[i] += w;
        degree[j] += w;
    }
    for (i, &d) in degree.iter().enumerate() {
        if !(d > 0.0) {
            return Err(GraphError::ZeroDegree(i));
        }
    }
    let mut l = Array2::eye(n);
    for &(i, j, w) in g.edges() {
        let off = -w / (degree[i] * degree[j]).sqrt();
        l[[i, j]] = off;
        l[[j, i]] = off;
    }
    Ok(l)
}
