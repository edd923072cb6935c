//! Dataset loading, generation, and normalization.
//!
//! Everything downstream consumes the immutable [`Dataset`] produced here:
//! CSV files, IDX image files (MNIST layout), and a seeded planted-cluster
//! generator used as a ground-truth oracle in tests.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Standard deviations below this are treated as zero (constant column).
pub const CONSTANT_COLUMN_STD: f64 = 1e-12;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("cannot parse {value:?} as a number at row {row}, column {column}")]
    Parse {
        value: String,
        row: usize,
        column: String,
    },
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: String },
    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("label column {0:?} not found in header")]
    UnknownLabelColumn(String),
    #[error("bad magic number {found:#010x} in {path} (expected {expected:#010x})")]
    BadMagic {
        path: String,
        found: u32,
        expected: u32,
    },
    #[error("image/label count mismatch: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("limit {limit} not satisfiable: {reason}")]
    Unsatisfiable { limit: usize, reason: String },
    #[error("invalid dataset shape: need N >= 2 and D >= 1, got {n} x {d}")]
    BadShape { n: usize, d: usize },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

/// An N×D numeric matrix plus feature names and optional per-row labels.
///
/// Immutable after construction; safe to share read-only across scorers.
#[derive(Debug, Clone)]
pub struct Dataset {
    values: Array2<f64>,
    feature_names: Vec<String>,
    labels: Option<Vec<String>>,
    standardized: bool,
}

impl Dataset {
    /// Validates shape, name count, label count, and finiteness.
    pub fn new(
        values: Array2<f64>,
        feature_names: Vec<String>,
        labels: Option<Vec<String>>,
    ) -> Result<Self, DataError> {
        let (n, d) = values.dim();
        if n < 2 || d == 0 {
            return Err(DataError::BadShape { n, d });
        }
        if feature_names.len() != d {
            return Err(DataError::BadParameter(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                d
            )));
        }
        if let Some(ref l) = labels {
            if l.len() != n {
                return Err(DataError::BadParameter(format!(
                    "{} labels for {} rows",
                    l.len(),
                    n
                )));
            }
        }
        for ((i, j), v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(DataError::NonFinite {
                    row: i + 1,
                    column: feature_names[j].clone(),
                });
            }
        }
        Ok(Self {
            values,
            feature_names,
            labels,
            standardized: false,
        })
    }

    /// Internal constructor for datasets derived from an already-valid one.
    pub(crate) fn from_parts(
        values: Array2<f64>,
        feature_names: Vec<String>,
        labels: Option<Vec<String>>,
        standardized: bool,
    ) -> Self {
        Self {
            values,
            feature_names,
            labels,
            standardized,
        }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Number of samples (rows).
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Number of feature dimensions (columns).
    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }
}

fn synth_names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("f{j}")).collect()
}

/// Load an RFC-4180-style CSV of real numbers ("." decimal separator).
///
/// With `has_header`, the first record supplies feature names; otherwise
/// names are synthesized as `f0..f{D-1}`. If `label_column` names one of
/// the columns, that column is split off as categorical labels.
/// Row numbers in errors are 1-based over data rows (header excluded).
pub fn load_csv(
    path: &Path,
    has_header: bool,
    label_column: Option<&str>,
) -> Result<Dataset, DataError> {
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .from_reader(BufReader::new(file));

    let mut names: Option<Vec<String>> = None;
    if has_header {
        let headers = reader.headers()?.clone();
        if headers.is_empty() {
            return Err(DataError::Empty(path.display().to_string()));
        }
        names = Some(headers.iter().map(|s| s.trim().to_string()).collect());
    }

    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let fields: Vec<String> = record.iter().map(|s| s.trim().to_string()).collect();
        let expected = names
            .as_ref()
            .map(|n| n.len())
            .unwrap_or_else(|| rows.first().map(|r| r.len()).unwrap_or(fields.len()));
        if fields.len() != expected {
            return Err(DataError::RaggedRow {
                row: i + 1,
                expected,
                found: fields.len(),
            });
        }
        rows.push(fields);
    }
    if rows.is_empty() {
        return Err(DataError::Empty(path.display().to_string()));
    }

    let all_names = names.unwrap_or_else(|| synth_names(rows[0].len()));
    let label_idx = match label_column {
        Some(name) => Some(
            all_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| DataError::UnknownLabelColumn(name.to_string()))?,
        ),
        None => None,
    };

    let feature_names: Vec<String> = all_names
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != label_idx)
        .map(|(_, n)| n.clone())
        .collect();
    let n = rows.len();
    let d = feature_names.len();
    if d == 0 {
        return Err(DataError::Empty(format!(
            "{}: no feature columns left",
            path.display()
        )));
    }

    let mut values = Array2::zeros((n, d));
    let mut labels = label_idx.map(|_| Vec::with_capacity(n));
    for (i, fields) in rows.iter().enumerate() {
        let mut col = 0;
        for (j, field) in fields.iter().enumerate() {
            if Some(j) == label_idx {
                labels.as_mut().unwrap().push(field.clone());
                continue;
            }
            let v: f64 = field.parse().map_err(|_| DataError::Parse {
                value: field.clone(),
                row: i + 1,
                column: all_names[j].clone(),
            })?;
            if !v.is_finite() {
                return Err(DataError::NonFinite {
                    row: i + 1,
                    column: all_names[j].clone(),
                });
            }
            values[[i, col]] = v;
            col += 1;
        }
    }

    Dataset::new(values, feature_names, labels)
}

fn read_idx_header(
    reader: &mut impl Read,
    path: &Path,
    expected_magic: u32,
) -> Result<u32, DataError> {
    let io_err = |source| DataError::Io {
        path: path.display().to_string(),
        source,
    };
    let magic = reader.read_u32::<BigEndian>().map_err(io_err)?;
    if magic != expected_magic {
        return Err(DataError::BadMagic {
            path: path.display().to_string(),
            found: magic,
            expected: expected_magic,
        });
    }
    reader.read_u32::<BigEndian>().map_err(io_err)
}

/// Load IDX images (and optionally labels), flattening each image row-major
/// into a `rows*cols`-dimensional feature vector scaled to `[0, 1]`.
///
/// With `limit`, a seeded uniform subset is taken; when labels are present
/// the subset is stratified per class (equal counts, the first
/// `limit % classes` classes in ascending label order get one extra).
/// Selected rows keep their original file order.
pub fn load_idx_images(
    images_path: &Path,
    labels_path: Option<&Path>,
    limit: Option<usize>,
    seed: u64,
) -> Result<Dataset, DataError> {
    let io_err = |path: &Path| {
        let p = path.display().to_string();
        move |source| DataError::Io {
            path: p.clone(),
            source,
        }
    };

    let file = File::open(images_path).map_err(io_err(images_path))?;
    let mut reader = BufReader::new(file);
    let count = read_idx_header(&mut reader, images_path, IDX_IMAGES_MAGIC)? as usize;
    let rows = reader
        .read_u32::<BigEndian>()
        .map_err(io_err(images_path))? as usize;
    let cols = reader
        .read_u32::<BigEndian>()
        .map_err(io_err(images_path))? as usize;
    let d = rows * cols;
    if count == 0 || d == 0 {
        return Err(DataError::Empty(images_path.display().to_string()));
    }
    let mut raw = vec![0u8; count * d];
    reader
        .read_exact(&mut raw)
        .map_err(io_err(images_path))?;

    let labels: Option<Vec<u8>> = match labels_path {
        Some(lp) => {
            let file = File::open(lp).map_err(io_err(lp))?;
            let mut reader = BufReader::new(file);
            let lcount = read_idx_header(&mut reader, lp, IDX_LABELS_MAGIC)? as usize;
            if lcount != count {
                return Err(DataError::CountMismatch {
                    images: count,
                    labels: lcount,
                });
            }
            let mut lraw = vec![0u8; lcount];
            reader.read_exact(&mut lraw).map_err(io_err(lp))?;
            Some(lraw)
        }
        None => None,
    };

    let selected: Vec<usize> = match limit {
        None => (0..count).collect(),
        Some(limit) => {
            if limit == 0 {
                return Err(DataError::Unsatisfiable {
                    limit,
                    reason: "limit must be at least 1".into(),
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            match labels {
                Some(ref lab) => stratified_subset(lab, limit, &mut rng)?,
                None => {
                    if limit > count {
                        return Err(DataError::Unsatisfiable {
                            limit,
                            reason: format!("only {count} images available"),
                        });
                    }
                    let mut idx: Vec<usize> = (0..count).collect();
                    idx.shuffle(&mut rng);
                    idx.truncate(limit);
                    idx.sort_unstable();
                    idx
                }
            }
        }
    };

    let n = selected.len();
    let mut values = Array2::zeros((n, d));
    for (out, &src) in selected.iter().enumerate() {
        for j in 0..d {
            values[[out, j]] = f64::from(raw[src * d + j]) / 255.0;
        }
    }
    let out_labels =
        labels.map(|lab| selected.iter().map(|&i| lab[i].to_string()).collect());

    Dataset::new(values, synth_names(d), out_labels)
}

/// Per-class seeded sampling with equal quotas; ascending class order, the
/// first `limit % classes` classes absorb the remainder. Result is sorted
/// so the original file order is preserved.
fn stratified_subset(
    labels: &[u8],
    limit: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>, DataError> {
    let mut classes: Vec<u8> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let c = classes.len();
    let base = limit / c;
    let rem = limit % c;

    let mut selected = Vec::with_capacity(limit);
    for (ci, class) in classes.iter().enumerate() {
        let quota = base + usize::from(ci < rem);
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == *class).collect();
        if members.len() < quota {
            return Err(DataError::Unsatisfiable {
                limit,
                reason: format!(
                    "class {} has {} members, stratum needs {}",
                    class,
                    members.len(),
                    quota
                ),
            });
        }
        members.shuffle(rng);
        selected.extend_from_slice(&members[..quota]);
    }
    selected.sort_unstable();
    Ok(selected)
}

/// Per-column z-score with population (1/N) variance.
///
/// Columns with standard deviation below [`CONSTANT_COLUMN_STD`] map to
/// all-zero rather than erroring: real datasets contain constant columns
/// and the scorer must assign them zero importance.
pub fn standardize(ds: &Dataset) -> Dataset {
    let n = ds.n() as f64;
    let mut values = ds.values.clone();
    for mut col in values.columns_mut() {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if std < CONSTANT_COLUMN_STD {
            col.fill(0.0);
        } else {
            col.mapv_inplace(|v| (v - mean) / std);
        }
    }
    Dataset::from_parts(
        values,
        ds.feature_names.clone(),
        ds.labels.clone(),
        true,
    )
}

/// Generate two equal Gaussian clusters whose means differ by `separation`
/// along every informative dimension (informative columns first). All
/// entries carry additive N(0, noise_scale²) noise. Deterministic per seed.
pub fn make_planted_dataset(
    n: usize,
    informative_dims: usize,
    noise_dims: usize,
    separation: f64,
    noise_scale: f64,
    seed: u64,
) -> Result<Dataset, DataError> {
    if n < 2 || n % 2 != 0 {
        return Err(DataError::BadParameter(format!(
            "n must be even and >= 2, got {n}"
        )));
    }
    if informative_dims == 0 || noise_dims == 0 {
        return Err(DataError::BadParameter(
            "informative_dims and noise_dims must be >= 1".into(),
        ));
    }
    if !(separation > 0.0) {
        return Err(DataError::BadParameter(format!(
            "separation must be > 0, got {separation}"
        )));
    }
    if !(noise_scale >= 0.0) {
        return Err(DataError::BadParameter(format!(
            "noise_scale must be >= 0, got {noise_scale}"
        )));
    }

    let d = informative_dims + noise_dims;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Array2::zeros((n, d));
    let half = n / 2;
    for i in 0..n {
        let offset = if i < half {
            -separation / 2.0
        } else {
            separation / 2.0
        };
        for j in 0..d {
            let noise: f64 = rng.sample(StandardNormal);
            let base = if j < informative_dims { offset } else { 0.0 };
            values[[i, j]] = base + noise_scale * noise;
        }
    }
    let labels: Vec<String> = (0..n)
        .map(|i| if i < half { "0".into() } else { "1".into() })
        .collect();
    Dataset::new(values, synth_names(d), Some(labels))
}
