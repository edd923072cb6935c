//! Evaluation protocols: neighbor recovery for dimension subsets,
//! incremental-feature classifier curves, and PGM mask images.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataio::Dataset;
use crate::selection::ImportanceRanking;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("selection is empty")]
    EmptySelection,
    #[error("duplicate dimension index {0} in selection")]
    DuplicateIndex(usize),
    #[error("dimension {d} out of range (dataset has {dims} dimensions)")]
    DimensionOutOfRange { d: usize, dims: usize },
    #[error("n_neighbors {k} out of range for {n} samples")]
    NeighborsOutOfRange { k: usize, n: usize },
    #[error("dataset has no labels")]
    MissingLabels,
    #[error("class {label:?} has {count} members, fewer than {folds} folds")]
    ClassTooSmall {
        label: String,
        count: usize,
        folds: usize,
    },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("mask shape {rows}x{cols} does not match dimension count {dims}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        dims: usize,
    },
    #[error("malformed PGM: {0}")]
    MalformedPgm(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Neighbor-recovery as a function of how many ranked dimensions are kept.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryCurve {
    pub subset_sizes: Vec<usize>,
    pub recovery: Vec<f64>,
    pub n_neighbors: usize,
}

/// Macro-F1 as a function of how many ranked features the classifier sees.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct F1Curve {
    pub feature_counts: Vec<usize>,
    pub f1: Vec<f64>,
    pub folds: usize,
    pub classifier: String,
}

fn write_curve_csv(
    path: &Path,
    comments: &[String],
    points: impl Iterator<Item = (usize, f64)>,
) -> Result<(), EvalError> {
    let io_err = |source| EvalError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    for line in comments {
        writeln!(w, "# {line}").map_err(io_err)?;
    }
    writeln!(w, "x,value").map_err(io_err)?;
    for (x, value) in points {
        writeln!(w, "{x},{value}").map_err(io_err)?;
    }
    Ok(())
}

impl RecoveryCurve {
    /// CSV `x,value` rows prefixed with `# `-comment metadata lines.
    pub fn write_csv(&self, path: &Path, comments: &[String]) -> Result<(), EvalError> {
        write_curve_csv(
            path,
            comments,
            self.subset_sizes.iter().copied().zip(self.recovery.iter().copied()),
        )
    }
}

impl F1Curve {
    pub fn write_csv(&self, path: &Path, comments: &[String]) -> Result<(), EvalError> {
        write_curve_csv(
            path,
            comments,
            self.feature_counts.iter().copied().zip(self.f1.iter().copied()),
        )
    }
}

fn validate_selection(ds: &Dataset, selected: &[usize]) -> Result<Vec<usize>, EvalError> {
    if selected.is_empty() {
        return Err(EvalError::EmptySelection);
    }
    let mut sorted = selected.to_vec();
    sorted.sort_unstable();
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] {
            return Err(EvalError::DuplicateIndex(pair[0]));
        }
    }
    if let Some(&d) = sorted.last() {
        if d >= ds.d() {
            return Err(EvalError::DimensionOutOfRange { d, dims: ds.d() });
        }
    }
    Ok(sorted)
}

/// Squared distance over a sorted subset of dimensions, accumulated in
/// ascending dimension order so a constant column contributes an exact
/// zero term and restricted distances stay bit-identical to full ones.
fn restricted_sq_dist(
    values: &ndarray::Array2<f64>,
    i: usize,
    j: usize,
    dims: &[usize],
) -> f64 {
    let mut acc = 0.0;
    for &d in dims {
        let delta = values[[i, d]] - values[[j, d]];
        acc += delta * delta;
    }
    acc
}

/// The `n_neighbors` nearest neighbors of every sample over the given
/// dimensions; distance ties broken by smaller index, self excluded.
fn knn_lists(
    values: &ndarray::Array2<f64>,
    dims: &[usize],
    n_neighbors: usize,
) -> Vec<Vec<usize>> {
    let n = values.nrows();
    let mut lists = Vec::with_capacity(n);
    let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        scratch.clear();
        for j in 0..n {
            if j != i {
                scratch.push((restricted_sq_dist(values, i, j, dims), j));
            }
        }
        scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        lists.push(scratch[..n_neighbors].iter().map(|&(_, j)| j).collect());
    }
    lists
}

/// Mean fraction of each sample's full-space nearest neighbors that remain
/// among its nearest neighbors when distances use only `selected` dims.
pub fn neighbor_recovery(
    ds: &Dataset,
    selected: &[usize],
    n_neighbors: usize,
) -> Result<f64, EvalError> {
    let n = ds.n();
    if n_neighbors == 0 || n_neighbors >= n {
        return Err(EvalError::NeighborsOutOfRange { k: n_neighbors, n });
    }
    let dims = validate_selection(ds, selected)?;
    let all_dims: Vec<usize> = (0..ds.d()).collect();
    let full = knn_lists(ds.values(), &all_dims, n_neighbors);
    let restricted = knn_lists(ds.values(), &dims, n_neighbors);

    let mut total = 0.0;
    let mut member = vec![false; n];
    for i in 0..n {
        for &j in &full[i] {
            member[j] = true;
        }
        let hits = restricted[i].iter().filter(|&&j| member[j]).count();
        total += hits as f64 / n_neighbors as f64;
        for &j in &full[i] {
            member[j] = false;
        }
    }
    Ok(total / n as f64)
}

/// Neighbor recovery of the top-`size` ranked dimensions at each size.
pub fn recovery_curve(
    ds: &Dataset,
    ranking: &ImportanceRanking,
    sizes: &[usize],
    n_neighbors: usize,
) -> Result<RecoveryCurve, EvalError> {
    if ranking.d() != ds.d() {
        return Err(EvalError::ShapeMismatch {
            rows: ranking.d(),
            cols: 1,
            dims: ds.d(),
        });
    }
    for pair in sizes.windows(2) {
        if pair[1] <= pair[0] {
            return Err(EvalError::BadParameter(format!(
                "subset sizes must be ascending, got {} after {}",
                pair[1], pair[0]
            )));
        }
    }
    let mut recovery = Vec::with_capacity(sizes.len());
    for &size in sizes {
        if size == 0 || size > ds.d() {
            return Err(EvalError::BadParameter(format!(
                "subset size {size} out of range (D = {})",
                ds.d()
            )));
        }
        recovery.push(neighbor_recovery(ds, ranking.top(size), n_neighbors)?);
    }
    Ok(RecoveryCurve {
        subset_sizes: sizes.to_vec(),
        recovery,
        n_neighbors,
    })
}

/// Classes in ascending label order with each sample's class id.
fn class_index(labels: &[String]) -> (Vec<String>, Vec<usize>) {
    let mut classes: Vec<String> = labels.to_vec();
    classes.sort();
    classes.dedup();
    let lookup: BTreeMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(c, l)| (l.as_str(), c))
        .collect();
    let ids = labels.iter().map(|l| lookup[l.as_str()]).collect();
    (classes, ids)
}

/// Seeded stratified fold assignment: per class (ascending label order),
/// members are shuffled and dealt round-robin across folds.
fn stratified_fold_assignment(
    labels: &[String],
    folds: usize,
    seed: u64,
) -> Result<Vec<usize>, EvalError> {
    let (classes, ids) = class_index(labels);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; labels.len()];
    for (c, class) in classes.iter().enumerate() {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| ids[i] == c).collect();
        if members.len() < folds {
            return Err(EvalError::ClassTooSmall {
                label: class.clone(),
                count: members.len(),
                folds,
            });
        }
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            assignment[i] = pos % folds;
        }
    }
    Ok(assignment)
}

/// Stratified k-fold macro-F1 of a k-nearest-neighbor majority vote in the
/// restricted feature space. Distance ties break by smaller sample index,
/// vote ties by smallest class label; a class with no true and no predicted
/// positives in a fold contributes F1 = 0.
pub fn knn_classify_cv(
    ds: &Dataset,
    selected: &[usize],
    folds: usize,
    k: usize,
    seed: u64,
) -> Result<f64, EvalError> {
    let labels = ds.labels().ok_or(EvalError::MissingLabels)?;
    if folds < 2 {
        return Err(EvalError::BadParameter(format!(
            "folds must be at least 2, got {folds}"
        )));
    }
    if k == 0 {
        return Err(EvalError::BadParameter("k must be at least 1".into()));
    }
    let dims = validate_selection(ds, selected)?;
    let (classes, ids) = class_index(labels);
    let assignment = stratified_fold_assignment(labels, folds, seed)?;
    let values = ds.values();

    let mut fold_f1 = Vec::with_capacity(folds);
    let mut scratch: Vec<(f64, usize)> = Vec::new();
    for fold in 0..folds {
        let train: Vec<usize> = (0..ds.n()).filter(|&i| assignment[i] != fold).collect();
        let test: Vec<usize> = (0..ds.n()).filter(|&i| assignment[i] == fold).collect();

        // confusion counts per class
        let mut tp = vec![0usize; classes.len()];
        let mut fp = vec![0usize; classes.len()];
        let mut fnc = vec![0usize; classes.len()];
        let kk = k.min(train.len());
        for &t in &test {
            scratch.clear();
            for &tr in &train {
                scratch.push((restricted_sq_dist(values, t, tr, &dims), tr));
            }
            scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut votes = vec![0usize; classes.len()];
            for &(_, tr) in &scratch[..kk] {
                votes[ids[tr]] += 1;
            }
            let best = votes
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .map(|(c, _)| c)
                .unwrap();
            let truth = ids[t];
            if best == truth {
                tp[truth] += 1;
            } else {
                fp[best] += 1;
                fnc[truth] += 1;
            }
        }

        let mut sum = 0.0;
        for c in 0..classes.len() {
            let denom = 2 * tp[c] + fp[c] + fnc[c];
            if denom > 0 {
                sum += 2.0 * tp[c] as f64 / denom as f64;
            }
        }
        fold_f1.push(sum / classes.len() as f64);
    }
    Ok(fold_f1.iter().sum::<f64>() / folds as f64)
}

/// F1 at each feature count, with the same seeded folds across counts so
/// curve differences reflect features, not splits.
pub fn f1_curve(
    ds: &Dataset,
    ranking: &ImportanceRanking,
    counts: &[usize],
    folds: usize,
    k: usize,
    seed: u64,
) -> Result<F1Curve, EvalError> {
    if ranking.d() != ds.d() {
        return Err(EvalError::ShapeMismatch {
            rows: ranking.d(),
            cols: 1,
            dims: ds.d(),
        });
    }
    let mut f1 = Vec::with_capacity(counts.len());
    for &count in counts {
        if count == 0 || count > ds.d() {
            return Err(EvalError::BadParameter(format!(
                "feature count {count} out of range (D = {})",
                ds.d()
            )));
        }
        f1.push(knn_classify_cv(ds, ranking.top(count), folds, k, seed)?);
    }
    Ok(F1Curve {
        feature_counts: counts.to_vec(),
        f1,
        folds,
        classifier: format!("knn(k={k})"),
    })
}

/// Write an ASCII PGM (P2, maxval 255): white at the top-`top` ranked
/// pixel positions, black elsewhere, dimensions mapped row-major.
/// The ranking parameters ride along in a `#` comment for provenance.
pub fn export_mask_image(
    ranking: &ImportanceRanking,
    rows: usize,
    cols: usize,
    top: usize,
    path: &Path,
) -> Result<(), EvalError> {
    if rows * cols != ranking.d() {
        return Err(EvalError::ShapeMismatch {
            rows,
            cols,
            dims: ranking.d(),
        });
    }
    if top > ranking.d() {
        return Err(EvalError::BadParameter(format!(
            "top {top} exceeds dimension count {}",
            ranking.d()
        )));
    }
    let mut white = vec![false; ranking.d()];
    for &d in ranking.top(top) {
        white[d] = true;
    }

    let io_err = |source| EvalError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    let meta = serde_json::to_string(&serde_json::json!({
        "method": ranking.method.as_str(),
        "params": &ranking.params,
        "top": top,
    }))?;
    writeln!(w, "P2").map_err(io_err)?;
    writeln!(w, "# {meta}").map_err(io_err)?;
    writeln!(w, "{cols} {rows}").map_err(io_err)?;
    writeln!(w, "255").map_err(io_err)?;
    // keep lines within the conventional 70-character PGM limit
    let mut line = String::new();
    for r in 0..rows {
        for c in 0..cols {
            let token = if white[r * cols + c] { "255" } else { "0" };
            if line.is_empty() {
                line.push_str(token);
            } else if line.len() + 1 + token.len() > 70 {
                writeln!(w, "{line}").map_err(io_err)?;
                line.clear();
                line.push_str(token);
            } else {
                line.push(' ');
                line.push_str(token);
            }
        }
    }
    if !line.is_empty() {
        writeln!(w, "{line}").map_err(io_err)?;
    }
    Ok(())
}

/// Parse a P2 PGM written by [`export_mask_image`]; returns
/// `(rows, cols, white_positions)` with positions sorted ascending.
pub fn parse_mask_image(path: &Path) -> Result<(usize, usize, Vec<usize>), EvalError> {
    let io_err = |source| EvalError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut text = String::new();
    File::open(path)
        .map_err(io_err)?
        .read_to_string(&mut text)
        .map_err(io_err)?;
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    let magic = tokens
        .next()
        .ok_or_else(|| EvalError::MalformedPgm("missing magic".into()))?;
    if magic != "P2" {
        return Err(EvalError::MalformedPgm(format!(
            "expected P2, found {magic:?}"
        )));
    }
    let mut next_number = |what: &str| -> Result<usize, EvalError> {
        tokens
            .next()
            .ok_or_else(|| EvalError::MalformedPgm(format!("missing {what}")))?
            .parse()
            .map_err(|_| EvalError::MalformedPgm(format!("bad {what}")))
    };
    let cols = next_number("width")?;
    let rows = next_number("height")?;
    let maxval = next_number("maxval")?;
    if maxval != 255 {
        return Err(EvalError::MalformedPgm(format!(
            "expected maxval 255, found {maxval}"
        )));
    }
    let mut white = Vec::new();
    for idx in 0..rows * cols {
        let v = next_number("pixel")?;
        if v == 255 {
            white.push(idx);
        } else if v != 0 {
            return Err(EvalError::MalformedPgm(format!(
                "mask pixel must be 0 or 255, found {v}"
            )));
        }
    }
    Ok((rows, cols, white))
}
