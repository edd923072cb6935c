//! Graph Fourier basis: eigendecomposition of the normalized Laplacian,
//! forward/inverse GFT, and blue-noise signal synthesis.
//!
//! The eigensolver is a dense symmetric Householder tridiagonalization
//! followed by implicit-shift QL with eigenvector accumulation (the classic
//! EISPACK tred2/tql2 pair). All eigenpairs are computed: masked graphs need
//! the full low band and the blue-noise signal needs every high-band vector.

use std::io::Write;

use ndarray::{Array2, ShapeBuilder};
use thiserror::Error;

/// Maximum QL iterations per eigenvalue before giving up.
const MAX_QL_ITERATIONS: usize = 50;

/// Required symmetry of the input: |L - Lᵀ|max below this.
const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("input matrix is not symmetric: |L - Lt| = {0:.3e} at ({1}, {2})")]
    NotSymmetric(f64, usize, usize),
    #[error("input matrix is not square: {0} x {1}")]
    NotSquare(usize, usize),
    #[error("QL iteration failed to converge after {iterations} iterations on eigenvalue {index}")]
    NoConvergence { iterations: usize, index: usize },
    #[error("signal length {signal} does not match basis size {basis}")]
    LengthMismatch { signal: usize, basis: usize },
    #[error("k0 = {k0} out of range for n = {n} (need {min} <= k0 <= {max})")]
    K0OutOfRange {
        k0: usize,
        n: usize,
        min: usize,
        max: usize,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Orthonormal eigenvectors and ascending eigenvalues of a symmetric matrix —
/// for the normalized Laplacian this is the graph Fourier basis.
///
/// Sign convention: in each eigenvector the entry of largest absolute value
/// is positive (ties broken by lowest index). Exactly equal eigenvalues are
/// ordered by lexicographic comparison of their sign-fixed eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    eigenvalues: Vec<f64>,
    /// Column k is the eigenvector of `eigenvalues[k]` (column-major layout).
    eigenvectors: Array2<f64>,
}

impl SpectralBasis {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, k: usize) -> ndarray::ArrayView1<'_, f64> {
        self.eigenvectors.column(k)
    }
}

/// The blue-noise spectrum (zero on the `k0` lowest frequencies, one above)
/// together with its node-domain reconstruction `signal = U · spectrum`.
#[derive(Debug, Clone)]
pub struct BlueNoiseSignal {
    pub k0: usize,
    pub spectrum: Vec<f64>,
    pub signal: Vec<f64>,
}

/// Full eigendecomposition of a symmetric matrix, ascending eigenvalues.
pub fn eigendecompose(l: &Array2<f64>) -> Result<SpectralBasis, SpectralError> {
    let (rows, cols) = l.dim();
    if rows != cols {
        return Err(SpectralError::NotSquare(rows, cols));
    }
    let n = rows;
    for i in 0..n {
        for j in (i + 1)..n {
            let delta = (l[[i, j]] - l[[j, i]]).abs();
            if delta > SYMMETRY_TOL {
                return Err(SpectralError::NotSymmetric(delta, i, j));
            }
        }
    }

    // Column-major working copy: v[j * n + k] is row k of column j.
    let mut v = vec![0.0; n * n];
    for j in 0..n {
        for k in 0..n {
            v[j * n + k] = l[[k, j]];
        }
    }
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    tred2(n, &mut v, &mut diag, &mut off);
    tql2(n, &mut v, &mut diag, &mut off)?;

    // Sign convention before ordering so eigenvalue ties sort on fixed vectors.
    for j in 0..n {
        let col = &mut v[j * n..(j + 1) * n];
        let mut best = 0;
        for (k, val) in col.iter().enumerate() {
            if val.abs() > col[best].abs() {
                best = k;
            }
        }
        if col[best] < 0.0 {
            for val in col.iter_mut() {
                *val = -*val;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        diag[a].total_cmp(&diag[b]).then_with(|| {
            let ca = &v[a * n..(a + 1) * n];
            let cb = &v[b * n..(b + 1) * n];
            for (x, y) in ca.iter().zip(cb.iter()) {
                match x.total_cmp(y) {
                    std::cmp::Ordering::Equal => continue,
                    other => return other,
                }
            }
            std::cmp::Ordering::Equal
        })
    });

    let eigenvalues: Vec<f64> = order.iter().map(|&j| diag[j]).collect();
    let mut sorted = vec![0.0; n * n];
    for (out, &j) in order.iter().enumerate() {
        sorted[out * n..(out + 1) * n].copy_from_slice(&v[j * n..(j + 1) * n]);
    }
    let eigenvectors = Array2::from_shape_vec((n, n).f(), sorted)
        .expect("column-major buffer has the right length");

    Ok(SpectralBasis {
        eigenvalues,
        eigenvectors,
    })
}

/// Householder reduction to symmetric tridiagonal form, accumulating the
/// orthogonal transformations in `v` (column-major). On exit `diag` holds
/// the diagonal and `off[1..]` the subdiagonal.
fn tred2(n: usize, v: &mut [f64], diag: &mut [f64], off: &mut [f64]) {
    for j in 0..n {
        diag[j] = v[j * n + (n - 1)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in diag.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            off[i] = diag[i - 1];
            for j in 0..i {
                diag[j] = v[j * n + (i - 1)];
                v[j * n + i] = 0.0;
                v[i * n + j] = 0.0;
            }
        } else {
            for k in 0..i {
                diag[k] /= scale;
                h += diag[k] * diag[k];
            }
            let f = diag[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            off[i] = scale * g;
            h -= f * g;
            diag[i - 1] = f - g;
            for item in off.iter_mut().take(i) {
                *item = 0.0;
            }

            for j in 0..i {
                let f = diag[j];
                v[i * n + j] = f;
                let mut g = off[j] + v[j * n + j] * f;
                for k in (j + 1)..i {
                    g += v[j * n + k] * diag[k];
                    off[k] += v[j * n + k] * f;
                }
                off[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                off[j] /= h;
                f += off[j] * diag[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                off[j] -= hh * diag[j];
            }
            for j in 0..i {
                let f = diag[j];
                let g = off[j];
                for k in j..i {
                    v[j * n + k] -= f * off[k] + g * diag[k];
                }
                diag[j] = v[j * n + (i - 1)];
                v[j * n + i] = 0.0;
            }
        }
        diag[i] = h;
    }

    // Accumulate transformations.
    for i in 0..(n - 1) {
        v[i * n + (n - 1)] = v[i * n + i];
        v[i * n + i] = 1.0;
        let h = diag[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                diag[k] = v[(i + 1) * n + k] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(i + 1) * n + k] * v[j * n + k];
                }
                for k in 0..=i {
                    v[j * n + k] -= g * diag[k];
                }
            }
        }
        for k in 0..=i {
            v[(i + 1) * n + k] = 0.0;
        }
    }
    for j in 0..n {
        diag[j] = v[j * n + (n - 1)];
        v[j * n + (n - 1)] = 0.0;
    }
    v[(n - 1) * n + (n - 1)] = 1.0;
    off[0] = 0.0;
}

/// Implicit-shift QL on a symmetric tridiagonal matrix, accumulating the
/// rotations into `v` (column-major). Eigenvalues land in `diag`, unsorted.
fn tql2(n: usize, v: &mut [f64], diag: &mut [f64], off: &mut [f64]) -> Result<(), SpectralError> {
    for i in 1..n {
        off[i - 1] = off[i];
    }
    off[n - 1] = 0.0;

    let eps = f64::EPSILON / 2.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(diag[l].abs() + off[l].abs());
        let mut m = l;
        while m < n {
            if off[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }

        if m > l {
            let mut iterations = 0;
            loop {
                iterations += 1;
                if iterations > MAX_QL_ITERATIONS {
                    return Err(SpectralError::NoConvergence {
                        iterations: iterations - 1,
                        index: l,
                    });
                }

                let g = diag[l];
                let mut p = (diag[l + 1] - g) / (2.0 * off[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                diag[l] = off[l] / (p + r);
                diag[l + 1] = off[l] * (p + r);
                let dl1 = diag[l + 1];
                let mut h = g - diag[l];
                for item in diag.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = diag[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = off[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * off[i];
                    h = c * p;
                    r = p.hypot(off[i]);
                    off[i + 1] = s * r;
                    s = off[i] / r;
                    c = p / r;
                    p = c * diag[i] - s * g;
                    diag[i + 1] = h + s * (c * g + s * diag[i]);

                    // Rotate the eigenvector columns i and i+1.
                    let (left, right) = v.split_at_mut((i + 1) * n);
                    let col_i = &mut left[i * n..];
                    let col_i1 = &mut right[..n];
                    for (a, b) in col_i.iter_mut().zip(col_i1.iter_mut()) {
                        let h = *b;
                        *b = s * *a + c * h;
                        *a = c * *a - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * off[l] / dl1;
                off[l] = s * p;
                diag[l] = c * p;

                if off[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        diag[l] += f;
        off[l] = 0.0;
    }
    Ok(())
}

/// Graph Fourier transform: spectrum = Uᵀ · signal.
pub fn gft(basis: &SpectralBasis, signal: &[f64]) -> Result<Vec<f64>, SpectralError> {
    let n = basis.n();
    if signal.len() != n {
        return Err(SpectralError::LengthMismatch {
            signal: signal.len(),
            basis: n,
        });
    }
    let u = &basis.eigenvectors;
    let mut spectrum = vec![0.0; n];
    for (k, out) in spectrum.iter_mut().enumerate() {
        let col = u.column(k);
        let mut acc = 0.0;
        for (uv, sv) in col.iter().zip(signal.iter()) {
            acc += uv * sv;
        }
        *out = acc;
    }
    Ok(spectrum)
}

/// Inverse graph Fourier transform: signal = U · spectrum.
pub fn inverse_gft(basis: &SpectralBasis, spectrum: &[f64]) -> Result<Vec<f64>, SpectralError> {
    let n = basis.n();
    if spectrum.len() != n {
        return Err(SpectralError::LengthMismatch {
            signal: spectrum.len(),
            basis: n,
        });
    }
    let u = &basis.eigenvectors;
    let mut signal = vec![0.0; n];
    for (k, &coeff) in spectrum.iter().enumerate() {
        if coeff == 0.0 {
            continue;
        }
        for (out, uv) in signal.iter_mut().zip(u.column(k).iter()) {
            *out += coeff * uv;
        }
    }
    Ok(signal)
}

/// Construct the blue-noise signal: spectrum zero on the `k0` lowest
/// frequencies (including the trivial constant eigenvector) and one above,
/// reconstructed into the node domain through the inverse GFT.
pub fn synthesize_blue_noise(
    basis: &SpectralBasis,
    k0: usize,
) -> Result<BlueNoiseSignal, SpectralError> {
    let n = basis.n();
    if k0 == 0 || k0 >= n {
        return Err(SpectralError::K0OutOfRange {
            k0,
            n,
            min: 1,
            max: n - 1,
        });
    }
    let mut spectrum = vec![1.0; n];
    for coeff in spectrum.iter_mut().take(k0) {
        *coeff = 0.0;
    }
    let signal = inverse_gft(basis, &spectrum)?;
    Ok(BlueNoiseSignal {
        k0,
        spectrum,
        signal,
    })
}

/// Sum of squares of the first `k0` spectral coefficients.
pub fn low_band_energy(spectrum: &[f64], k0: usize) -> Result<f64, SpectralError> {
    let n = spectrum.len();
    if k0 == 0 || k0 > n {
        return Err(SpectralError::K0OutOfRange {
            k0,
            n,
            min: 1,
            max: n,
        });
    }
    Ok(spectrum[..k0].iter().map(|c| c * c).sum())
}

/// Dump a spectrum as CSV `index,eigenvalue,coefficient` (1-based index),
/// for plotting spectral-domain figures.
pub fn write_spectrum_csv(
    basis: &SpectralBasis,
    spectrum: &[f64],
    mut w: impl Write,
) -> Result<(), SpectralError> {
    if spectrum.len() != basis.n() {
        return Err(SpectralError::LengthMismatch {
            signal: spectrum.len(),
            basis: basis.n(),
        });
    }
    writeln!(w, "index,eigenvalue,coefficient")?;
    for (k, (lambda, coeff)) in basis.eigenvalues().iter().zip(spectrum.iter()).enumerate() {
        writeln!(w, "{},{},{}", k + 1, lambda, coeff)?;
    }
    Ok(())
}
