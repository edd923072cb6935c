//! Per-dimension importance scoring by mask-and-rescore, plus baselines.
//!
//! For each dimension `d` the sample graph is rebuilt with column `d`
//! masked and the blue-noise signal (synthesized once from the unmasked
//! graph) is re-expanded in the masked graph's Fourier basis. The score
//!
//! ```text
//! γ_d = ‖ŝ[..k0]‖² − ‖ŝ_d[..k0]‖² = 0 − ‖(U_dᵀ s)[..k0]‖² ≤ 0
//! ```
//!
//! is the (negated) low-frequency energy the masking injects. Masking an
//! important dimension rewires neighborhoods, so the old high-band signal
//! gains a smooth component in the new basis and γ_d goes strongly
//! negative; the ranking is ascending γ (most negative first).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataio::Dataset;
use crate::graph::{build_knn_graph, normalized_laplacian, BandwidthRule, GraphError, GraphParams, Weighting};
use crate::spectral::{
    eigendecompose, gft, low_band_energy, synthesize_blue_noise, BlueNoiseSignal, SpectralError,
};

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("dimension {d} out of range (dataset has {dims} dimensions)")]
    DimensionOutOfRange { d: usize, dims: usize },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("graph construction failed{}: {source}", fmt_dim(.dim))]
    Graph {
        dim: Option<usize>,
        #[source]
        source: GraphError,
    },
    #[error("spectral decomposition failed{}: {source}", fmt_dim(.dim))]
    Spectral {
        dim: Option<usize>,
        #[source]
        source: SpectralError,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn fmt_dim(dim: &Option<usize>) -> String {
    match dim {
        Some(d) => format!(" while scoring dimension {d}"),
        None => String::new(),
    }
}

/// How a masked column is filled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskPolicy {
    Zero,
    Constant(f64),
}

/// Parameters for blue-noise scoring.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScoringParams {
    /// Requested zero-region width; clamped to ⌊N/4⌋ (at least 1) so the
    /// zero region never exceeds a quarter of the spectrum.
    pub k0: usize,
    pub graph: GraphParams,
    pub mask_policy: MaskPolicy,
    /// Reuse the unmasked graph's heat-kernel bandwidth for masked graphs
    /// instead of recomputing the median per masked dataset (ablation).
    pub reuse_bandwidth: bool,
}

impl Default for ScoringParams {
    fn default() -> Self {
        Self {
            k0: 100,
            graph: GraphParams::default(),
            mask_policy: MaskPolicy::Zero,
            reuse_bandwidth: false,
        }
    }
}

impl ScoringParams {
    /// Zero-region width actually used for `n` samples.
    pub fn effective_k0(&self, n: usize) -> usize {
        self.k0.min((n / 4).max(1))
    }
}

/// Which ranker produced an [`ImportanceRanking`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMethod {
    BlueNoise,
    Pcoa,
    /// Same sum-of-squares ranking as [`RankMethod::Pcoa`]; kept as a
    /// separate tag so artifacts record what the caller asked for.
    Variance,
    Random,
}

impl RankMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            RankMethod::BlueNoise => "blue_noise",
            RankMethod::Pcoa => "pcoa",
            RankMethod::Variance => "variance",
            RankMethod::Random => "random",
        }
    }
}

/// The full parameter record embedded in every ranking artifact.
///
/// Contains every result-affecting input. Worker counts and output paths
/// are deliberately absent: rankings are schedule-independent.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RankingParams {
    BlueNoise {
        k0_requested: usize,
        k0_effective: usize,
        k_neighbors: usize,
        weighting: Weighting,
        bandwidth_rule: BandwidthRule,
        mask_policy: MaskPolicy,
        reuse_bandwidth: bool,
        standardized_input: bool,
    },
    SumOfSquares {
        standardized_input: bool,
    },
    Random {
        seed: u64,
    },
}

/// Per-dimension scores and the induced importance order (best first).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImportanceRanking {
    pub method: RankMethod,
    pub params: RankingParams,
    pub scores: Vec<f64>,
    pub order: Vec<usize>,
    /// Opaque dataset provenance attached by artifact writers (the CLI);
    /// omitted from JSON when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<serde_json::Value>,
}

impl ImportanceRanking {
    pub fn d(&self) -> usize {
        self.scores.len()
    }

    /// The top `count` dimensions, best first.
    pub fn top(&self, count: usize) -> &[usize] {
        &self.order[..count.min(self.order.len())]
    }

    pub fn to_json_string(&self) -> Result<String, SelectionError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<(), SelectionError> {
        let json = self.to_json_string()?;
        std::fs::write(path, json.as_bytes()).map_err(|source| SelectionError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read_json(path: &Path) -> Result<Self, SelectionError> {
        let text = std::fs::read_to_string(path).map_err(|source| SelectionError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Plain-text ranked list: `rank,dimension,feature_name,score`.
    pub fn write_text_list(&self, names: &[String], path: &Path) -> Result<(), SelectionError> {
        let io_err = |source| SelectionError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = File::create(path).map_err(io_err)?;
        let mut w = BufWriter::new(file);
        writeln!(w, "rank,dimension,feature_name,score").map_err(io_err)?;
        for (rank, &d) in self.order.iter().enumerate() {
            let name = names.get(d).map(String::as_str).unwrap_or("");
            writeln!(w, "{},{},{},{}", rank, d, name, self.scores[d]).map_err(io_err)?;
        }
        Ok(())
    }
}

/// Replace column `d` with zero (or a constant); other columns untouched.
pub fn mask_dimension(
    ds: &Dataset,
    d: usize,
    policy: MaskPolicy,
) -> Result<Dataset, SelectionError> {
    if d >= ds.d() {
        return Err(SelectionError::DimensionOutOfRange { d, dims: ds.d() });
    }
    let fill = match policy {
        MaskPolicy::Zero => 0.0,
        MaskPolicy::Constant(c) => {
            if !c.is_finite() {
                return Err(SelectionError::BadParameter(format!(
                    "mask constant must be finite, got {c}"
                )));
            }
            c
        }
    };
    let mut values = ds.values().clone();
    values.column_mut(d).fill(fill);
    Ok(Dataset::from_parts(
        values,
        ds.feature_names().to_vec(),
        ds.labels().map(<[String]>::to_vec),
        ds.is_standardized(),
    ))
}

/// Resolve the graph parameters used for masked rebuilds: with
/// `reuse_bandwidth` the unmasked median bandwidth is frozen into a fixed σ.
fn masked_graph_params(
    ds: &Dataset,
    params: &ScoringParams,
) -> Result<GraphParams, SelectionError> {
    let mut gp = params.graph;
    if params.reuse_bandwidth
        && gp.weighting == Weighting::HeatKernel
        && gp.bandwidth_rule == BandwidthRule::MedianKnnDistance
    {
        let unmasked = build_knn_graph(ds, &gp)
            .map_err(|source| SelectionError::Graph { dim: None, source })?;
        if let Some(sigma) = unmasked.sigma() {
            if sigma > 0.0 {
                gp.bandwidth_rule = BandwidthRule::Fixed(sigma);
            }
        }
    }
    Ok(gp)
}

fn low_band_energy_of_masked(
    ds: &Dataset,
    blue: &BlueNoiseSignal,
    d: usize,
    mask_policy: MaskPolicy,
    graph_params: &GraphParams,
) -> Result<f64, SelectionError> {
    let masked = mask_dimension(ds, d, mask_policy)?;
    let graph = build_knn_graph(&masked, graph_params).map_err(|source| SelectionError::Graph {
        dim: Some(d),
        source,
    })?;
    let laplacian = normalized_laplacian(&graph).map_err(|source| SelectionError::Graph {
        dim: Some(d),
        source,
    })?;
    let basis = eigendecompose(&laplacian).map_err(|source| SelectionError::Spectral {
        dim: Some(d),
        source,
    })?;
    let spectrum = gft(&basis, &blue.signal).map_err(|source| SelectionError::Spectral {
        dim: Some(d),
        source,
    })?;
    low_band_energy(&spectrum, blue.k0).map_err(|source| SelectionError::Spectral {
        dim: Some(d),
        source,
    })
}

/// γ_d for a single dimension. `blue` must have been synthesized from the
/// unmasked graph of `ds` with the same parameters.
pub fn score_dimension(
    ds: &Dataset,
    blue: &BlueNoiseSignal,
    d: usize,
    params: &ScoringParams,
) -> Result<f64, SelectionError> {
    let gp = masked_graph_params(ds, params)?;
    let injected = low_band_energy_of_masked(ds, blue, d, params.mask_policy, &gp)?;
    Ok(0.0 - injected)
}

/// Rank every dimension by blue-noise importance.
///
/// The unmasked graph, basis, and blue-noise signal are built once; the D
/// per-dimension rescorings fan out over `parallelism` workers. Scores and
/// order are identical for any worker count.
pub fn rank_dimensions(
    ds: &Dataset,
    params: &ScoringParams,
    parallelism: usize,
) -> Result<ImportanceRanking, SelectionError> {
    if parallelism == 0 {
        return Err(SelectionError::BadParameter(
            "parallelism must be at least 1".into(),
        ));
    }
    let n = ds.n();
    let k0 = params.effective_k0(n);
    if k0 >= n {
        return Err(SelectionError::BadParameter(format!(
            "effective k0 = {k0} must be below N = {n}"
        )));
    }

    let unmasked = build_knn_graph(ds, &params.graph)
        .map_err(|source| SelectionError::Graph { dim: None, source })?;
    let laplacian = normalized_laplacian(&unmasked)
        .map_err(|source| SelectionError::Graph { dim: None, source })?;
    let basis = eigendecompose(&laplacian)
        .map_err(|source| SelectionError::Spectral { dim: None, source })?;
    let blue = synthesize_blue_noise(&basis, k0)
        .map_err(|source| SelectionError::Spectral { dim: None, source })?;

    // Freeze the masked-graph parameters once so workers share them.
    let mut gp = params.graph;
    if params.reuse_bandwidth
        && gp.weighting == Weighting::HeatKernel
        && gp.bandwidth_rule == BandwidthRule::MedianKnnDistance
    {
        if let Some(sigma) = unmasked.sigma() {
            if sigma > 0.0 {
                gp.bandwidth_rule = BandwidthRule::Fixed(sigma);
            }
        }
    }

    let dims = ds.d();
    let results: Vec<Result<f64, SelectionError>> = if parallelism == 1 {
        (0..dims)
            .map(|d| {
                low_band_energy_of_masked(ds, &blue, d, params.mask_policy, &gp)
                    .map(|energy| 0.0 - energy)
            })
            .collect()
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| SelectionError::BadParameter(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..dims)
                .into_par_iter()
                .map(|d| {
                    low_band_energy_of_masked(ds, &blue, d, params.mask_policy, &gp)
                        .map(|energy| 0.0 - energy)
                })
                .collect()
        })
    };

    // Fail on the lowest-indexed failing dimension regardless of schedule.
    let mut scores = Vec::with_capacity(dims);
    for result in results {
        scores.push(result?);
    }

    let order = sort_order(&scores, SortDirection::Ascending);
    Ok(ImportanceRanking {
        method: RankMethod::BlueNoise,
        params: RankingParams::BlueNoise {
            k0_requested: params.k0,
            k0_effective: k0,
            k_neighbors: params.graph.k_neighbors,
            weighting: params.graph.weighting,
            bandwidth_rule: params.graph.bandwidth_rule,
            mask_policy: params.mask_policy,
            reuse_bandwidth: params.reuse_bandwidth,
            standardized_input: ds.is_standardized(),
        },
        scores,
        order,
        dataset: None,
    })
}

enum SortDirection {
    Ascending,
    Descending,
}

fn sort_order(scores: &[f64], direction: SortDirection) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        let cmp = match direction {
            SortDirection::Ascending => scores[a].total_cmp(&scores[b]),
            SortDirection::Descending => scores[b].total_cmp(&scores[a]),
        };
        cmp.then(a.cmp(&b))
    });
    order
}

fn sum_of_squares_ranking(ds: &Dataset, method: RankMethod) -> ImportanceRanking {
    let n = ds.n() as f64;
    let scores: Vec<f64> = ds
        .values()
        .columns()
        .into_iter()
        .map(|col| {
            let mean = col.sum() / n;
            col.iter().map(|v| (v - mean) * (v - mean)).sum()
        })
        .collect();
    let order = sort_order(&scores, SortDirection::Descending);
    ImportanceRanking {
        method,
        params: RankingParams::SumOfSquares {
            standardized_input: ds.is_standardized(),
        },
        scores,
        order,
        dataset: None,
    }
}

/// Principal-coordinate baseline: dimensions ranked by descending sum of
/// squared deviations from the column mean (ties by smaller index).
pub fn pcoa_rank(ds: &Dataset) -> ImportanceRanking {
    sum_of_squares_ranking(ds, RankMethod::Pcoa)
}

/// Same ranking as [`pcoa_rank`], tagged as a plain variance baseline.
pub fn variance_rank(ds: &Dataset) -> ImportanceRanking {
    sum_of_squares_ranking(ds, RankMethod::Variance)
}

/// Seeded uniform permutation baseline; scores are all zero.
pub fn random_rank(ds: &Dataset, seed: u64) -> ImportanceRanking {
    let mut order: Vec<usize> = (0..ds.d()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    ImportanceRanking {
        method: RankMethod::Random,
        params: RankingParams::Random { seed },
        scores: vec![0.0; ds.d()],
        order,
        dataset: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn dataset(values: ndarray::Array2<f64>) -> Dataset {
        let d = values.ncols();
        let names = (0..d).map(|j| format!("f{j}")).collect();
        Dataset::new(values, names, None).unwrap()
    }

    #[test]
    fn mask_replaces_column() {
        let ds = dataset(array![[1.0, 2.0], [3.0, 4.0]]);
        let masked = mask_dimension(&ds, 0, MaskPolicy::Zero).unwrap();
        assert_eq!(masked.values(), &array![[0.0, 2.0], [0.0, 4.0]]);
        // original untouched
        assert_eq!(ds.values()[[0, 0]], 1.0);
        let shifted = mask_dimension(&ds, 1, MaskPolicy::Constant(9.0)).unwrap();
        assert_eq!(shifted.values(), &array![[1.0, 9.0], [3.0, 9.0]]);
    }

    #[test]
    fn mask_all_zero_column_is_fixed_point() {
        let ds = dataset(array![[0.0, 2.0], [0.0, 4.0]]);
        let masked = mask_dimension(&ds, 0, MaskPolicy::Zero).unwrap();
        assert_eq!(masked.values(), ds.values());
    }

    #[test]
    fn mask_out_of_range() {
        let ds = dataset(array![[1.0, 2.0], [3.0, 4.0]]);
        assert!(matches!(
            mask_dimension(&ds, 2, MaskPolicy::Zero),
            Err(SelectionError::DimensionOutOfRange { d: 2, dims: 2 })
        ));
    }

    #[test]
    fn effective_k0_clamping() {
        let params = ScoringParams::default();
        assert_eq!(params.effective_k0(1000), 100);
        assert_eq!(params.effective_k0(500), 100);
        assert_eq!(params.effective_k0(400), 100);
        assert_eq!(params.effective_k0(200), 50);
        assert_eq!(params.effective_k0(2), 1);
    }

    #[test]
    fn constant_dimension_scores_zero() {
        let ds = crate::dataio::make_planted_dataset(40, 1, 2, 3.0, 0.4, 2).unwrap();
        let mut wide = ds.values().clone();
        wide.push_column(ndarray::ArrayView1::from(&vec![3.25; ds.n()][..]))
            .unwrap();
        let ds = dataset(wide);
        let params = ScoringParams::default();
        let ranking = rank_dimensions(&ds, &params, 1).unwrap();
        let constant_dim = ds.d() - 1;
        assert!(
            ranking.scores[constant_dim].abs() <= 1e-8,
            "gamma = {}",
            ranking.scores[constant_dim]
        );
        // all scores are non-positive up to roundoff
        for &g in &ranking.scores {
            assert!(g <= 1e-9);
        }
        // a constant column can never rank first
        assert_ne!(ranking.order[0], constant_dim);
    }

    #[test]
    fn zero_and_constant_masks_give_identical_scores() {
        // pairwise distances depend only on within-column differences,
        // so the fill value cannot matter
        let ds = crate::dataio::make_planted_dataset(30, 1, 3, 2.0, 0.5, 4).unwrap();
        let zero = ScoringParams::default();
        let constant = ScoringParams {
            mask_policy: MaskPolicy::Constant(12.5),
            ..zero
        };
        let a = rank_dimensions(&ds, &zero, 1).unwrap();
        let b = rank_dimensions(&ds, &constant, 1).unwrap();
        assert_eq!(a.scores, b.scores);
        assert_eq!(a.order, b.order);
    }

    #[test]
    fn parallelism_does_not_change_output() {
        let ds = crate::dataio::make_planted_dataset(36, 2, 4, 3.0, 0.5, 6).unwrap();
        let params = ScoringParams::default();
        let one = rank_dimensions(&ds, &params, 1).unwrap();
        let eight = rank_dimensions(&ds, &params, 8).unwrap();
        assert_eq!(one.scores, eight.scores);
        assert_eq!(one.order, eight.order);
        let json_one = one.to_json_string().unwrap();
        let json_eight = eight.to_json_string().unwrap();
        assert_eq!(json_one, json_eight);
    }

    #[test]
    fn pcoa_hand_computed() {
        let ds = dataset(array![[0.0, 0.0], [2.0, 0.0], [4.0, 0.0]]);
        let ranking = pcoa_rank(&ds);
        assert_eq!(ranking.scores, vec![8.0, 0.0]);
        assert_eq!(ranking.order, vec![0, 1]);
    }

    #[test]
    fn pcoa_tie_break_by_index() {
        let ds = dataset(array![[1.0, 1.0, 1.0], [2.0, 2.0, 2.0], [3.0, 3.0, 3.0]]);
        let ranking = pcoa_rank(&ds);
        assert_eq!(ranking.order, vec![0, 1, 2]);
    }

    #[test]
    fn pcoa_scaling_moves_rank() {
        let base = crate::dataio::standardize(
            &crate::dataio::make_planted_dataset(20, 1, 3, 2.0, 1.0, 5).unwrap(),
        );
        let mut values = base.values().clone();
        let scaled = &values.column(2) * 10.0;
        values.column_mut(2).assign(&scaled);
        let ranking = pcoa_rank(&dataset(values));
        assert_eq!(ranking.order[0], 2);
    }

    #[test]
    fn random_rank_is_seeded_permutation() {
        let ds = crate::dataio::make_planted_dataset(10, 2, 6, 2.0, 0.5, 0).unwrap();
        let a = random_rank(&ds, 42);
        let b = random_rank(&ds, 42);
        assert_eq!(a.order, b.order);
        let mut sorted = a.order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..8).collect::<Vec<_>>());
        assert!(a.scores.iter().all(|&s| s == 0.0));
        let c = random_rank(&ds, 43);
        assert_ne!(a.order, c.order);
    }

    #[test]
    fn ranking_json_roundtrip() {
        let ds = crate::dataio::make_planted_dataset(24, 1, 3, 3.0, 0.3, 9).unwrap();
        let ranking = rank_dimensions(&ds, &ScoringParams::default(), 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ranking.json");
        ranking.write_json(&path).unwrap();
        let back = ImportanceRanking::read_json(&path).unwrap();
        assert_eq!(back.scores, ranking.scores);
        assert_eq!(back.order, ranking.order);
        assert_eq!(back.method, RankMethod::BlueNoise);
    }
}
