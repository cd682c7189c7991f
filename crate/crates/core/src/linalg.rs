//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Off-diagonal magnitude (relative) under which a matrix is taken as
/// exactly diagonal and handled by permutation instead of an eigensolver.
const EXACT_DIAGONAL_REL: f64 = 1e-14;

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Largest entry of `U U† − I`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let prod = u * u.adjoint();
    max_abs_diff(&prod, &CMatrix::identity(u.nrows(), u.ncols()))
}

pub fn hermiticity_residual(h: &CMatrix) -> f64 {
    if !h.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(h, &h.adjoint())
}

/// `(H + H†)/2`, with an exactly real diagonal.
pub fn hermitize(h: &CMatrix) -> CMatrix {
    let mut out = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    for i in 0..out.nrows() {
        out[(i, i)].im = 0.0;
    }
    out
}

pub fn max_offdiag(m: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    worst
}

pub fn block_diag(blocks: &[CMatrix]) -> CMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Permutation matrix whose column `j` is `e_{order[j]}`.
pub fn permutation(order: &[usize]) -> CMatrix {
    let n = order.len();
    let mut p = CMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        p[(i, j)] = ONE;
    }
    p
}

/// Partition a descending list into maximal runs whose consecutive gaps are
/// at most `tol * max(1, max |v|)`. Returns run lengths in order.
pub fn cluster_runs(values: &[f64], tol: f64) -> Vec<usize> {
    if values.is_empty() {
        return Vec::new();
    }
    let scale = values.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let threshold = tol * scale;
    let mut runs = vec![1];
    for w in values.windows(2) {
        if (w[0] - w[1]).abs() <= threshold {
            *runs.last_mut().unwrap() += 1;
        } else {
            runs.push(1);
        }
    }
    runs
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending,
/// `H = E diag(values) E†`.
///
/// Matrices that are already diagonal (up to rounding) are handled with a
/// stable permutation so that sorted diagonal input yields exactly `E = I`.
pub fn hermitian_eigen_desc(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = h.nrows();
    let scale = max_abs(h).max(1.0);
    if max_offdiag(h) <= EXACT_DIAGONAL_REL * scale {
        let diag: Vec<f64> = (0..n).map(|i| h[(i, i)].re).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| diag[b].total_cmp(&diag[a]));
        let values = order.iter().map(|&i| diag[i]).collect();
        return Ok((values, permutation(&order)));
    }
    let eig = SymmetricEigen::try_new(hermitize(h), f64::EPSILON, 1000 * n.max(1))
        .ok_or(Error::EigenFailure { size: n })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vectors.set_column(j, &eig.eigenvectors.column(i));
    }
    Ok((values, vectors))
}

/// Full singular value decomposition `X = P Σ Q†` with square unitary `P`,
/// `Q` and singular values in descending order (length `min(rows, cols)`).
pub fn full_svd_desc(x: &CMatrix) -> Result<(CMatrix, Vec<f64>, CMatrix)> {
    let (rows, cols) = x.shape();
    let rank_max = rows.min(cols);
    let scale = max_abs(x).max(1.0);
    if rectangular_offdiag(x) <= EXACT_DIAGONAL_REL * scale {
        return Ok(diagonal_svd(x));
    }
    let svd = SVD::try_new(x.clone(), true, true, f64::EPSILON, 1000 * (rows + cols))
        .ok_or(Error::EigenFailure { size: rows.max(cols) })?;
    let u = svd.u.expect("left vectors requested");
    let v_t = svd.v_t.expect("right vectors requested");
    let mut order: Vec<usize> = (0..rank_max).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut p_thin = CMatrix::zeros(rows, rank_max);
    let mut q_thin = CMatrix::zeros(cols, rank_max);
    let v = v_t.adjoint();
    for (j, &i) in order.iter().enumerate() {
        p_thin.set_column(j, &u.column(i));
        q_thin.set_column(j, &v.column(i));
    }
    Ok((complete_basis(&p_thin), sigma, complete_basis(&q_thin)))
}

fn rectangular_offdiag(x: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            if i != j {
                worst = worst.max(x[(i, j)].norm());
            }
        }
    }
    worst
}

fn diagonal_svd(x: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    let (rows, cols) = x.shape();
    let r = rows.min(cols);
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| x[(b, b)].norm().total_cmp(&x[(a, a)].norm()));
    let sigma: Vec<f64> = order.iter().map(|&i| x[(i, i)].norm()).collect();
    let mut p = CMatrix::zeros(rows, rows);
    let mut q = CMatrix::zeros(cols, cols);
    for (j, &i) in order.iter().enumerate() {
        p[(i, j)] = ONE;
        let d = x[(i, i)];
        q[(i, j)] = if d.norm() > 0.0 { (d / d.norm()).conj() } else { ONE };
    }
    for i in r..rows {
        p[(i, i)] = ONE;
    }
    for i in r..cols {
        q[(i, i)] = ONE;
    }
    (p, sigma, q)
}

/// Extend orthonormal columns to a square unitary, keeping the given
/// columns unchanged.
pub fn complete_basis(thin: &CMatrix) -> CMatrix {
    let (n, k) = thin.shape();
    if k == n {
        return thin.clone();
    }
    let mut out = CMatrix::zeros(n, n);
    out.view_mut((0, 0), (n, k)).copy_from(thin);
    let mut filled = k;
    // Gram-Schmidt the standard basis against the existing columns, taking
    // the candidates with the largest remaining norm first.
    while filled < n {
        let mut best: Option<(f64, nalgebra::DVector<Complex64>)> = None;
        for e in 0..n {
            let mut v = nalgebra::DVector::<Complex64>::zeros(n);
            v[e] = ONE;
            for _ in 0..2 {
                for c in 0..filled {
                    let col = out.column(c);
                    let proj = col.dotc(&v);
                    v -= col * proj;
                }
            }
            let norm = v.norm();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, v));
            }
        }
        let (norm, v) = best.expect("n > 0");
        out.set_column(filled, &(v / Complex64::new(norm, 0.0)));
        filled += 1;
    }
    out
}

/// Haar-distributed unitary via QR of a complex Ginibre matrix with the
/// phases of `R`'s diagonal folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Diagonal unitary with independent uniform phases.
pub fn random_phases<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let mut d = CMatrix::zeros(n, n);
    for i in 0..n {
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        d[(i, i)] = Complex64::from_polar(1.0, theta);
    }
    d
}

/// Random Hermitian matrix with standard normal entries (GUE-like).
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    hermitize(&g)
}
