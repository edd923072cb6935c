//! Command-line front end: ingestion → ranking → evaluation → artifacts.
//!
//! Single binary, five subcommands (`rank`, `recover`, `classify`,
//! `mask-image`, `synth`), pipelines composed through files so every
//! intermediate is inspectable. All randomness flows from `--seed`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataio::{self, Dataset};
use crate::eval;
use crate::graph::{BandwidthRule, GraphParams, Weighting};
use crate::selection::{self, ImportanceRanking, MaskPolicy, ScoringParams};
use crate::spectral;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Data(#[from] dataio::DataError),
    #[error("{0}")]
    Graph(#[from] crate::graph::GraphError),
    #[error("{0}")]
    Spectral(#[from] spectral::SpectralError),
    #[error("{0}")]
    Selection(#[from] selection::SelectionError),
    #[error("{0}")]
    Eval(#[from] eval::EvalError),
    #[error("ranking has {ranking} dimensions but dataset has {dataset}")]
    DimensionMismatch { ranking: usize, dataset: usize },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    BadArgs(String),
}

#[derive(Parser, Debug)]
#[command(
    name = "bluerank",
    version,
    about = "Unsupervised dimension selection via blue-noise graph signals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Rank dimensions of a dataset; writes <output>.json and <output>.txt.
    Rank(RankArgs),
    /// Neighbor-recovery curve for a ranking; writes <output>.csv/.json.
    Recover(RecoverArgs),
    /// Incremental-feature F1 curve; writes <output>.csv/.json.
    Classify(ClassifyArgs),
    /// Render the top-ranked dimensions as a PGM mask image.
    MaskImage(MaskImageArgs),
    /// Generate a planted two-cluster dataset as CSV.
    Synth(SynthArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodArg {
    BlueNoise,
    Pcoa,
    Variance,
    Random,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightingArg {
    HeatKernel,
    Binary,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum StandardizeArg {
    /// Standardize CSV input, leave IDX images on their [0,1] scale.
    Auto,
    On,
    Off,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskPolicyArg {
    Zero,
    Constant,
}

/// Dataset source flags shared by rank/recover/classify.
#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// CSV dataset path.
    #[arg(long, conflicts_with = "images")]
    pub input: Option<PathBuf>,
    /// Treat the first CSV record as data, not a header.
    #[arg(long, default_value_t = false)]
    pub no_header: bool,
    /// Name of the CSV column holding class labels.
    #[arg(long)]
    pub label_column: Option<String>,
    /// IDX image file (big-endian, magic 0x00000803).
    #[arg(long, requires = "images", conflicts_with = "input")]
    pub images: Option<PathBuf>,
    /// IDX label file (magic 0x00000801).
    #[arg(long, requires = "images")]
    pub idx_labels: Option<PathBuf>,
    /// Keep only a seeded random subset of this many rows (stratified
    /// per class when labels are present).
    #[arg(long)]
    pub limit: Option<usize>,
    /// Column standardization of the loaded dataset.
    #[arg(long, value_enum, default_value_t = StandardizeArg::Auto)]
    pub standardize: StandardizeArg,
}

impl InputArgs {
    fn load(&self, seed: u64) -> Result<Dataset, CliError> {
        let (ds, default_standardize) = match (&self.input, &self.images) {
            (Some(csv), None) => (
                dataio::load_csv(csv, !self.no_header, self.label_column.as_deref())?,
                true,
            ),
            (None, Some(images)) => (
                dataio::load_idx_images(images, self.idx_labels.as_deref(), self.limit, seed)?,
                false,
            ),
            _ => {
                return Err(CliError::BadArgs(
                    "exactly one of --input or --images is required".into(),
                ))
            }
        };
        let standardize = match self.standardize {
            StandardizeArg::Auto => default_standardize,
            StandardizeArg::On => true,
            StandardizeArg::Off => false,
        };
        Ok(if standardize {
            dataio::standardize(&ds)
        } else {
            ds
        })
    }

    fn provenance(&self, seed: u64) -> DatasetProvenance {
        let source = self
            .input
            .as_ref()
            .or(self.images.as_ref())
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        DatasetProvenance {
            source,
            label_file: self.idx_labels.as_ref().map(|p| p.display().to_string()),
            label_column: self.label_column.clone(),
            limit: self.limit,
            seed,
        }
    }
}

/// Where the dataset came from; embedded in artifacts for re-derivability.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetProvenance {
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
    pub seed: u64,
}

/// Ranking-method flags shared by rank/recover/classify.
#[derive(Args, Debug, Clone)]
pub struct MethodArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::BlueNoise)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 10)]
    pub k_neighbors: usize,
    /// Zero-region width of the blue-noise spectrum (clamped to N/4).
    #[arg(long, default_value_t = 100)]
    pub k0: usize,
    #[arg(long, value_enum, default_value_t = WeightingArg::HeatKernel)]
    pub weighting: WeightingArg,
    /// Fixed heat-kernel bandwidth; omit to use the median kNN distance.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, value_enum, default_value_t = MaskPolicyArg::Zero)]
    pub mask_policy: MaskPolicyArg,
    /// Fill value when --mask-policy constant.
    #[arg(long, default_value_t = 0.0)]
    pub mask_constant: f64,
    /// Reuse the unmasked graph's bandwidth for masked graphs (ablation).
    #[arg(long, default_value_t = false)]
    pub reuse_bandwidth: bool,
}

impl MethodArgs {
    fn scoring_params(&self) -> ScoringParams {
        ScoringParams {
            k0: self.k0,
            graph: GraphParams {
                k_neighbors: self.k_neighbors,
                weighting: match self.weighting {
                    WeightingArg::HeatKernel => Weighting::HeatKernel,
                    WeightingArg::Binary => Weighting::Binary,
                },
                bandwidth_rule: match self.bandwidth {
                    Some(sigma) => BandwidthRule::Fixed(sigma),
                    None => BandwidthRule::MedianKnnDistance,
                },
            },
            mask_policy: match self.mask_policy {
                MaskPolicyArg::Zero => MaskPolicy::Zero,
                MaskPolicyArg::Constant => MaskPolicy::Constant(self.mask_constant),
            },
            reuse_bandwidth: self.reuse_bandwidth,
        }
    }

    fn rank(
        &self,
        ds: &Dataset,
        seed: u64,
        parallelism: usize,
    ) -> Result<ImportanceRanking, CliError> {
        Ok(match self.method {
            MethodArg::BlueNoise => {
                let params = self.scoring_params();
                let effective = params.effective_k0(ds.n());
                if effective != params.k0 {
                    eprintln!(
                        "bluerank: k0 clamped from {} to {} for N = {}",
                        params.k0,
                        effective,
                        ds.n()
                    );
                }
                selection::rank_dimensions(ds, &params, parallelism)?
            }
            MethodArg::Pcoa => selection::pcoa_rank(ds),
            MethodArg::Variance => selection::variance_rank(ds),
            MethodArg::Random => selection::random_rank(ds, seed),
        })
    }
}

#[derive(Args, Debug)]
pub struct RankArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker count for per-dimension scoring; 0 means all cores.
    /// The BLUERANK_THREADS environment variable overrides this flag.
    #[arg(long, default_value_t = 0)]
    pub parallelism: usize,
    /// Output prefix; writes <output>.json and <output>.txt.
    #[arg(long)]
    pub output: PathBuf,
    /// Also dump the unmasked graph edge list ("i j weight" lines).
    #[arg(long)]
    pub dump_edges: Option<PathBuf>,
    /// Also dump the blue-noise spectrum as index,eigenvalue,coefficient.
    #[arg(long)]
    pub dump_spectrum: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RecoverArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Ranking JSON produced by `rank`; omit to rank in-process.
    #[arg(long)]
    pub ranking: Option<PathBuf>,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Ascending subset sizes, e.g. --sizes 10,25,50,100.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub n_neighbors: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub parallelism: usize,
    /// Output prefix; writes <output>.csv and <output>.json.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Ranking JSON produced by `rank`; omit to rank in-process.
    #[arg(long)]
    pub ranking: Option<PathBuf>,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Feature counts to evaluate, e.g. --counts 1,2,5,10.
    #[arg(long, value_delimiter = ',', required = true)]
    pub counts: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// k of the k-nearest-neighbor classifier.
    #[arg(long, default_value_t = 5)]
    pub knn_k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub parallelism: usize,
    /// Output prefix; writes <output>.csv and <output>.json.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct MaskImageArgs {
    /// Ranking JSON produced by `rank`.
    #[arg(long)]
    pub ranking: PathBuf,
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    /// How many top-ranked dimensions are painted white.
    #[arg(long)]
    pub top: usize,
    /// Output PGM path.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub informative_dims: usize,
    #[arg(long, default_value_t = 8)]
    pub noise_dims: usize,
    #[arg(long, default_value_t = 5.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0.1)]
    pub noise_scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path (labels land in a trailing `label` column).
    #[arg(long)]
    pub output: PathBuf,
}

/// Resolve the worker count: explicit flag, overridden by BLUERANK_THREADS,
/// with 0 meaning all available cores.
fn resolve_parallelism(flag: usize) -> Result<usize, CliError> {
    let mut value = flag;
    if let Ok(text) = std::env::var("BLUERANK_THREADS") {
        value = text.parse().map_err(|_| {
            CliError::BadArgs(format!("BLUERANK_THREADS must be a number, got {text:?}"))
        })?;
    }
    if value == 0 {
        value = std::thread::available_parallelism()
            .map(std::num::NonZeroUsize::get)
            .unwrap_or(1);
    }
    Ok(value)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Rank(args) => cmd_rank(&args),
        Command::Recover(args) => cmd_recover(&args),
        Command::Classify(args) => cmd_classify(&args),
        Command::MaskImage(args) => cmd_mask_image(&args),
        Command::Synth(args) => cmd_synth(&args),
    }
}

fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut path = prefix.as_os_str().to_os_string();
    path.push(".");
    path.push(ext);
    PathBuf::from(path)
}

pub fn cmd_rank(args: &RankArgs) -> Result<(), CliError> {
    let parallelism = resolve_parallelism(args.parallelism)?;
    let ds = args.input.load(args.seed)?;
    let mut ranking = args.method.rank(&ds, args.seed, parallelism)?;
    ranking.dataset = Some(serde_json::to_value(args.input.provenance(args.seed))?);

    let json_path = with_extension(&args.output, "json");
    let txt_path = with_extension(&args.output, "txt");
    ranking.write_json(&json_path)?;
    ranking.write_text_list(ds.feature_names(), &txt_path)?;

    if args.dump_edges.is_some() || args.dump_spectrum.is_some() {
        let params = args.method.scoring_params();
        let graph = crate::graph::build_knn_graph(&ds, &params.graph)?;
        if let Some(ref path) = args.dump_edges {
            let file = File::create(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            graph.write_edge_list(BufWriter::new(file))?;
        }
        if let Some(ref path) = args.dump_spectrum {
            let laplacian = crate::graph::normalized_laplacian(&graph)?;
            let basis = spectral::eigendecompose(&laplacian)?;
            let blue =
                spectral::synthesize_blue_noise(&basis, params.effective_k0(ds.n()))?;
            let file = File::create(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            spectral::write_spectrum_csv(&basis, &blue.spectrum, BufWriter::new(file))?;
        }
    }
    Ok(())
}

fn obtain_ranking(
    ds: &Dataset,
    ranking_path: &Option<PathBuf>,
    method: &MethodArgs,
    seed: u64,
    parallelism: usize,
) -> Result<ImportanceRanking, CliError> {
    let ranking = match ranking_path {
        Some(path) => ImportanceRanking::read_json(path)?,
        None => method.rank(ds, seed, parallelism)?,
    };
    if ranking.d() != ds.d() {
        return Err(CliError::DimensionMismatch {
            ranking: ranking.d(),
            dataset: ds.d(),
        });
    }
    Ok(ranking)
}

fn write_curve_json<C: Serialize>(
    path: &Path,
    config: &serde_json::Value,
    curve: &C,
) -> Result<(), CliError> {
    let doc = serde_json::json!({ "config": config, "curve": curve });
    let file = File::create(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &doc)?;
    w.write_all(b"\n").map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

pub fn cmd_recover(args: &RecoverArgs) -> Result<(), CliError> {
    let parallelism = resolve_parallelism(args.parallelism)?;
    let ds = args.input.load(args.seed)?;
    let ranking = obtain_ranking(&ds, &args.ranking, &args.method, args.seed, parallelism)?;
    let curve = eval::recovery_curve(&ds, &ranking, &args.sizes, args.n_neighbors)?;

    let config = serde_json::json!({
        "command": "recover",
        "dataset": args.input.provenance(args.seed),
        "ranking_file": args.ranking.as_ref().map(|p| p.display().to_string()),
        "ranking_method": ranking.method.as_str(),
        "ranking_params": &ranking.params,
        "n_neighbors": args.n_neighbors,
        "seed": args.seed,
    });
    let csv_path = with_extension(&args.output, "csv");
    curve.write_csv(&csv_path, &[format!("config: {config}")])?;
    write_curve_json(&with_extension(&args.output, "json"), &config, &curve)?;
    Ok(())
}

pub fn cmd_classify(args: &ClassifyArgs) -> Result<(), CliError> {
    let parallelism = resolve_parallelism(args.parallelism)?;
    let ds = args.input.load(args.seed)?;
    let ranking = obtain_ranking(&ds, &args.ranking, &args.method, args.seed, parallelism)?;
    let curve = eval::f1_curve(&ds, &ranking, &args.counts, args.folds, args.knn_k, args.seed)?;

    let config = serde_json::json!({
        "command": "classify",
        "dataset": args.input.provenance(args.seed),
        "ranking_file": args.ranking.as_ref().map(|p| p.display().to_string()),
        "ranking_method": ranking.method.as_str(),
        "ranking_params": &ranking.params,
        "folds": args.folds,
        "knn_k": args.knn_k,
        "seed": args.seed,
        "f1_averaging": "macro",
        "folds_stratified": true,
    });
    let csv_path = with_extension(&args.output, "csv");
    curve.write_csv(&csv_path, &[format!("config: {config}")])?;
    write_curve_json(&with_extension(&args.output, "json"), &config, &curve)?;
    Ok(())
}

pub fn cmd_mask_image(args: &MaskImageArgs) -> Result<(), CliError> {
    let ranking = ImportanceRanking::read_json(&args.ranking)?;
    eval::export_mask_image(&ranking, args.rows, args.cols, args.top, &args.output)?;
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let ds = dataio::make_planted_dataset(
        args.n,
        args.informative_dims,
        args.noise_dims,
        args.separation,
        args.noise_scale,
        args.seed,
    )?;
    let io_err = |source| CliError::Io {
        path: args.output.display().to_string(),
        source,
    };
    let file = File::create(&args.output).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    let header = ds
        .feature_names()
        .iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .join(",");
    writeln!(w, "{header},label").map_err(io_err)?;
    let labels = ds.labels().expect("planted datasets are labeled");
    for (i, row) in ds.values().rows().into_iter().enumerate() {
        let fields = row
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "{fields},{}", labels[i]).map_err(io_err)?;
    }
    Ok(())
}
