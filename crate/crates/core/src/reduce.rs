//! Mode stacks `M_{ψ,m}` and reduced forms.
//!
//! For a HOSVD state, the sub-state `|ψ^{(i,k)}⟩` keeps only the
//! coefficients whose mode-`i` index lies in cluster `k`. Its mode-`m` Gram
//! `M_{ψ,m}^{i,k}` transforms as `U_m M U_m†` under any local symmetry, so
//! the ordered family `{M_{ψ,m}^{i,k}}_{i≠m,k}` is canonicalized under the
//! single shared element of `S^{(m)}`.

use num_complex::Complex64;

use crate::canon::{canonicalize, CanonicalReduction, DirectGroup, HermitianFamily};
use crate::error::{Error, Result};
use crate::hosvd::HosvdResult;
use crate::linalg::{block_diag, CMatrix, ZERO};
use crate::tensor::{apply_local_ops, gram_of_mode, PureState};

/// Unnormalized restriction of a HOSVD state to one mode-`i` cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct SubStateBlock {
    /// Purifying mode (1-based).
    pub i: usize,
    /// Cluster index (1-based).
    pub k: usize,
    /// `Σ_{s<k} μ_s^{(i)}`, the 0-based first mode-`i` index of the cluster.
    pub index_offset: usize,
    pub multiplicity: usize,
    pub state: PureState,
}

/// Ordered family `M_{ψ,m}^{i,k}` for one mode `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeStack {
    pub mode: usize,
    /// `(i, k)` per block, both 1-based; `i` ascending skipping `m`, then `k`.
    pub labels: Vec<(usize, usize)>,
    pub blocks: Vec<CMatrix>,
}

impl ModeStack {
    /// `L_m`, the number of blocks.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Block-diagonal assembly `M_{ψ,m}`.
    pub fn stacked(&self) -> CMatrix {
        block_diag(&self.blocks)
    }

    pub fn family(&self) -> Result<HermitianFamily> {
        let n = self.blocks.first().map_or(0, |b| b.nrows());
        HermitianFamily::new(n, self.blocks.clone())
    }
}

/// Reduced form `|ψ̃⟩ = ⊗_m U_m |ψ⟩` of a HOSVD state.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedForm {
    pub state: PureState,
    /// `U_{ψ,m}^{ψ̃,m}`, each an element of `S^{(m)}`.
    pub transforms: Vec<CMatrix>,
    /// `H̃_m`.
    pub residual: Vec<DirectGroup>,
    pub stacks: Vec<ModeStack>,
    pub reductions: Vec<CanonicalReduction>,
}

impl ReducedForm {
    /// Every residual block is 1×1.
    pub fn is_diagonal(&self) -> bool {
        self.residual.iter().all(DirectGroup::is_diagonal)
    }

    pub fn warnings(&self) -> Vec<String> {
        self.reductions
            .iter()
            .zip(1..)
            .flat_map(|(r, m)| r.warnings.iter().map(move |w| format!("mode {m}: {w}")))
            .collect()
    }
}

/// `|ψ^{(i,k)}⟩` with 1-based `i` and `k`.
pub fn extract_substate(hosvd: &HosvdResult, i: usize, k: usize) -> Result<SubStateBlock> {
    let state = &hosvd.state;
    let i0 = state.check_mode(i)?;
    let spectrum = &hosvd.spectra[i0];
    if k == 0 || k > spectrum.t() {
        return Err(Error::IndexOutOfRange(format!(
            "cluster {k} of mode {i} (mode has {} clusters)",
            spectrum.t()
        )));
    }
    let offset = spectrum.offsets()[k - 1];
    let mu = spectrum.multiplicities[k - 1];
    let strides = state.strides();
    let dim = state.dims()[i0];
    let coeffs: Vec<Complex64> = state
        .coeffs()
        .iter()
        .enumerate()
        .map(|(flat, &z)| {
            let j = (flat / strides[i0]) % dim;
            if j >= offset && j < offset + mu {
                z
            } else {
                ZERO
            }
        })
        .collect();
    Ok(SubStateBlock {
        i,
        k,
        index_offset: offset,
        multiplicity: mu,
        state: state.with_coeffs_unchecked(coeffs).into_unnormalized(),
    })
}

/// `M_{ψ,m}` for 1-based `m`.
pub fn build_mode_stack(hosvd: &HosvdResult, m: usize) -> Result<ModeStack> {
    let m0 = hosvd.state.check_mode(m)?;
    let mut labels = Vec::new();
    let mut blocks = Vec::new();
    for i in 1..=hosvd.state.order() {
        if i == m {
            continue;
        }
        for k in 1..=hosvd.spectra[i - 1].t() {
            let sub = extract_substate(hosvd, i, k)?;
            blocks.push(gram_of_mode(&sub.state, m0));
            labels.push((i, k));
        }
    }
    Ok(ModeStack { mode: m, labels, blocks })
}

/// Canonicalize every mode stack under `S^{(m)}` and apply the resulting
/// local transforms.
pub fn reduce_state(hosvd: &HosvdResult, tol_cluster: f64) -> Result<ReducedForm> {
    let order = hosvd.state.order();
    let mut transforms = Vec::with_capacity(order);
    let mut residual = Vec::with_capacity(order);
    let mut stacks = Vec::with_capacity(order);
    let mut reductions = Vec::with_capacity(order);
    for m in 1..=order {
        let stack = build_mode_stack(hosvd, m)?;
        let reduction = canonicalize(&stack.family()?, &hosvd.symmetry[m - 1], tol_cluster)?;
        transforms.push(reduction.transform.clone());
        residual.push(reduction.residual.clone());
        stacks.push(stack);
        reductions.push(reduction);
    }
    let state = apply_local_ops(&hosvd.state, &transforms);
    Ok(ReducedForm { state, transforms, residual, stacks, reductions })
}
