//! Dense order-N complex coefficient tensors.
//!
//! Coefficients are stored row-major over the multi-index with the last mode
//! varying fastest. Mode numbers in the public API are 1-based, matching the
//! ket notation `|j_1 j_2 ... j_N⟩`; array offsets are 0-based.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{unitarity_residual, CMatrix, ZERO};

/// Pure state on `C^{I_1} ⊗ … ⊗ C^{I_N}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    coeffs: Vec<Complex64>,
    label: Option<String>,
    normalized: bool,
}

/// Mode-`m` flattening: an `I_m × Π_{j≠m} I_j` matrix. Columns enumerate the
/// remaining modes in ascending order, last mode fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Unfolding {
    pub mode: usize,
    pub dims: Vec<usize>,
    pub matrix: CMatrix,
}

/// Default norm tolerance for [`PureState::new`].
pub const NORM_TOL: f64 = 1e-10;

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::InvalidDims { dims: dims.to_vec() });
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::InvalidDims { dims: dims.to_vec() })
}

impl PureState {
    /// Normalized state; fails if `|‖ψ‖ − 1| > 1e-10`.
    pub fn new(dims: Vec<usize>, coeffs: Vec<Complex64>) -> Result<Self> {
        Self::with_norm_tol(dims, coeffs, NORM_TOL)
    }

    pub fn with_norm_tol(dims: Vec<usize>, coeffs: Vec<Complex64>, tol_norm: f64) -> Result<Self> {
        let mut state = Self::unnormalized(dims, coeffs)?;
        let norm = state.norm();
        if norm.is_nan() || (norm - 1.0).abs() > tol_norm {
            return Err(Error::NotNormalized { norm });
        }
        state.normalized = true;
        Ok(state)
    }

    /// State that is explicitly not required to have unit norm, such as the
    /// cluster sub-states `|ψ^{(i,k)}⟩`.
    pub fn unnormalized(dims: Vec<usize>, coeffs: Vec<Complex64>) -> Result<Self> {
        let expected = check_dims(&dims)?;
        if coeffs.len() != expected {
            return Err(Error::CoeffCount { expected, actual: coeffs.len() });
        }
        Ok(Self { dims, coeffs, label: None, normalized: false })
    }

    /// Product basis state `|j_1 … j_N⟩` with 1-based indices.
    pub fn basis(dims: Vec<usize>, ket: &[usize]) -> Result<Self> {
        let total = check_dims(&dims)?;
        let mut state = Self { dims, coeffs: vec![ZERO; total], label: None, normalized: true };
        let flat = state.flat_index_1based(ket)?;
        state.coeffs[flat] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Row-major strides (last mode stride 1).
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for m in (0..self.dims.len() - 1).rev() {
            strides[m] = strides[m + 1] * self.dims[m + 1];
        }
        strides
    }

    /// Flat offset of a 1-based multi-index.
    pub fn flat_index_1based(&self, ket: &[usize]) -> Result<usize> {
        if ket.len() != self.dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "multi-index has {} entries, state has {} modes",
                ket.len(),
                self.dims.len()
            )));
        }
        let mut flat = 0;
        for (m, (&j, &d)) in ket.iter().zip(&self.dims).enumerate() {
            if j == 0 || j > d {
                return Err(Error::IndexOutOfRange(format!(
                    "index {j} in mode {} exceeds dimension {d}",
                    m + 1
                )));
            }
            flat = flat * d + (j - 1);
        }
        Ok(flat)
    }

    /// 0-based multi-index of a flat offset.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for m in (0..self.dims.len()).rev() {
            idx[m] = flat % self.dims[m];
            flat /= self.dims[m];
        }
        idx
    }

    pub fn get(&self, ket: &[usize]) -> Result<Complex64> {
        Ok(self.coeffs[self.flat_index_1based(ket)?])
    }

    pub(crate) fn check_mode(&self, m: usize) -> Result<usize> {
        if m == 0 || m > self.dims.len() {
            return Err(Error::ModeOutOfRange { mode: m, order: self.dims.len() });
        }
        Ok(m - 1)
    }

    /// `(outer, I_m, inner)` split of the flat layout around 0-based mode `m0`.
    fn split(&self, m0: usize) -> (usize, usize, usize) {
        let outer = self.dims[..m0].iter().product();
        let inner = self.dims[m0 + 1..].iter().product();
        (outer, self.dims[m0], inner)
    }

    pub(crate) fn with_coeffs_unchecked(&self, coeffs: Vec<Complex64>) -> Self {
        Self { dims: self.dims.clone(), coeffs, label: self.label.clone(), normalized: self.normalized }
    }

    /// Copy with the normalization flag cleared.
    pub(crate) fn into_unnormalized(mut self) -> Self {
        self.normalized = false;
        self
    }

    /// Multiply every coefficient by `z`.
    pub fn scaled(&self, z: Complex64) -> Self {
        self.with_coeffs_unchecked(self.coeffs.iter().map(|c| c * z).collect())
    }

    /// Apply a single `I_m × I_m` matrix on mode `m0` (0-based), no checks.
    pub(crate) fn apply_mode_unchecked(&self, m0: usize, u: &CMatrix) -> Self {
        let (outer, dim, inner) = self.split(m0);
        let mut out = vec![ZERO; self.coeffs.len()];
        for o in 0..outer {
            let base = o * dim * inner;
            for j in 0..dim {
                for k in 0..dim {
                    let ujk = u[(j, k)];
                    if ujk == ZERO {
                        continue;
                    }
                    let src = &self.coeffs[base + k * inner..base + (k + 1) * inner];
                    let dst = &mut out[base + j * inner..base + (j + 1) * inner];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += ujk * s;
                    }
                }
            }
        }
        self.with_coeffs_unchecked(out)
    }
}

/// Mode-`m` unfolding (1-based `m`).
pub fn mode_unfold(state: &PureState, m: usize) -> Result<Unfolding> {
    let m0 = state.check_mode(m)?;
    let (outer, dim, inner) = state.split(m0);
    let mut matrix = CMatrix::zeros(dim, outer * inner);
    for o in 0..outer {
        for j in 0..dim {
            let base = (o * dim + j) * inner;
            for i in 0..inner {
                matrix[(j, o * inner + i)] = state.coeffs[base + i];
            }
        }
    }
    Ok(Unfolding { mode: m, dims: state.dims.clone(), matrix })
}

impl Unfolding {
    /// Inverse of [`mode_unfold`]; the result is flagged unnormalized.
    pub fn refold(&self) -> Result<PureState> {
        let total = check_dims(&self.dims)?;
        let m0 = self.mode - 1;
        let outer: usize = self.dims[..m0].iter().product();
        let inner: usize = self.dims[m0 + 1..].iter().product();
        let dim = self.dims[m0];
        if self.matrix.shape() != (dim, outer * inner) {
            return Err(Error::DimensionMismatch(format!(
                "unfolding is {:?}, dims imply ({dim}, {})",
                self.matrix.shape(),
                outer * inner
            )));
        }
        let mut coeffs = vec![ZERO; total];
        for o in 0..outer {
            for j in 0..dim {
                let base = (o * dim + j) * inner;
                for i in 0..inner {
                    coeffs[base + i] = self.matrix[(j, o * inner + i)];
                }
            }
        }
        PureState::unnormalized(self.dims.clone(), coeffs)
    }
}

/// `|ψ⟩_m |ψ⟩_m†`, built from its upper triangle so that it is exactly
/// Hermitian with a real diagonal.
pub fn mode_gram(state: &PureState, m: usize) -> Result<CMatrix> {
    let m0 = state.check_mode(m)?;
    Ok(gram_of_mode(state, m0))
}

pub(crate) fn gram_of_mode(state: &PureState, m0: usize) -> CMatrix {
    let (outer, dim, inner) = state.split(m0);
    let mut g = CMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in a..dim {
            let mut acc = ZERO;
            for o in 0..outer {
                let ra = &state.coeffs[(o * dim + a) * inner..(o * dim + a + 1) * inner];
                let rb = &state.coeffs[(o * dim + b) * inner..(o * dim + b + 1) * inner];
                for (x, y) in ra.iter().zip(rb) {
                    acc += x * y.conj();
                }
            }
            if a == b {
                g[(a, a)] = Complex64::new(acc.re, 0.0);
            } else {
                g[(a, b)] = acc;
                g[(b, a)] = acc.conj();
            }
        }
    }
    g
}

/// `(U_1 ⊗ … ⊗ U_N)|ψ⟩`. Each `U_m` must be `I_m × I_m` and unitary within
/// `tol_unitary`.
pub fn apply_local_unitaries(state: &PureState, unitaries: &[CMatrix], tol_unitary: f64) -> Result<PureState> {
    check_local_ops(state, unitaries)?;
    for (m, u) in unitaries.iter().enumerate() {
        let residual = unitarity_residual(u);
        if residual.is_nan() || residual > tol_unitary {
            return Err(Error::NotUnitary { mode: m + 1, residual });
        }
    }
    Ok(apply_local_ops(state, unitaries))
}

pub(crate) fn check_local_ops(state: &PureState, ops: &[CMatrix]) -> Result<()> {
    if ops.len() != state.order() {
        return Err(Error::DimensionMismatch(format!(
            "{} local operators for a {}-partite state",
            ops.len(),
            state.order()
        )));
    }
    for (m, (u, &d)) in ops.iter().zip(state.dims()).enumerate() {
        if u.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "operator for mode {} is {:?}, expected ({d}, {d})",
                m + 1,
                u.shape()
            )));
        }
    }
    Ok(())
}

/// Local product action without unitarity checks.
pub(crate) fn apply_local_ops(state: &PureState, ops: &[CMatrix]) -> PureState {
    let mut out = state.clone();
    for (m0, u) in ops.iter().enumerate() {
        if is_identity(u) {
            continue;
        }
        out = out.apply_mode_unchecked(m0, u);
    }
    out
}

fn is_identity(u: &CMatrix) -> bool {
    u.iter().enumerate().all(|(flat, z)| {
        let (i, j) = (flat % u.nrows(), flat / u.nrows());
        if i == j {
            *z == Complex64::new(1.0, 0.0)
        } else {
            *z == ZERO
        }
    })
}

/// `⟨a|b⟩`.
pub fn overlap(a: &PureState, b: &PureState) -> Result<Complex64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    Ok(a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x.conj() * y).sum())
}
