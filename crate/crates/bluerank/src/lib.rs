//! Unsupervised dimension selection via blue-noise graph signals.
//!
//! The idea: build a k-nearest-neighbor graph over the samples, synthesize a
//! signal whose graph spectrum is *blue noise* (zero energy on the lowest
//! `k0` frequencies, flat above), then mask one feature dimension at a time,
//! rebuild the graph, and measure how much low-frequency energy the masked
//! graph's Fourier basis assigns to that signal. Dimensions whose masking
//! injects the most low-frequency energy are ranked most important.
//!
//! Pipeline, end to end:
//!
//! ```text
//! Dataset ──▶ kNN graph ──▶ normalized Laplacian ──▶ eigenbasis U
//!                                                        │
//!                         blue-noise signal s = U · [0,…,0,1,…,1]
//!                                                        │
//! for each dimension d:  mask column d ──▶ rebuild graph ──▶ basis U_d
//!                         γ_d = −‖(U_dᵀ s)[..k0]‖²   (ascending γ = ranking)
//! ```
//!
//! Start with the runnable examples (`cargo run --release --example …`):
//!
//! - `rank_planted` — rank a synthetic planted-cluster dataset
//! - `blue_noise_spectrum` — construct the signal, dump Fig-1-style CSVs
//! - `mask_and_rescore` — per-dimension spectra for one masked dimension
//! - `neighbor_recovery` — image-masking style evaluation curves
//! - `classifier_curve` — incremental-feature F1 curves on real data
//! - `mnist_masks` — rank MNIST pixels and write a PGM mask image
//!
//! The `bluerank` binary wires the same pieces behind `rank`, `recover`,
//! `classify`, `mask-image`, and `synth` subcommands.

pub mod cli;
pub mod dataio;
pub mod eval;
pub mod graph;
pub mod selection;
pub mod spectral;

pub use dataio::Dataset;
pub use graph::{build_knn_graph, normalized_laplacian, BandwidthRule, Graph, GraphParams, Weighting};
pub use selection::{
    mask_dimension, pcoa_rank, random_rank, rank_dimensions, score_dimension, ImportanceRanking,
    MaskPolicy, RankMethod, ScoringParams,
};
pub use spectral::{
    eigendecompose, gft, inverse_gft, low_band_energy, synthesize_blue_noise, BlueNoiseSignal,
    SpectralBasis,
};
