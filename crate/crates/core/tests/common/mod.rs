#![allow(dead_code)]

use std::path::PathBuf;

use luequiv::canon::DirectGroup;
use luequiv::linalg::{haar_unitary, CMatrix};
use luequiv::tensor::{apply_local_unitaries, mode_unfold, PureState};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn load(name: &str) -> PureState {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    luequiv::cli::parse_state(&text, &Default::default()).unwrap()
}

pub fn random_state(dims: &[usize], rng: &mut ChaCha8Rng) -> PureState {
    let total: usize = dims.iter().product();
    let mut v: Vec<Complex64> =
        (0..total).map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= n);
    PureState::new(dims.to_vec(), v).unwrap()
}

/// State whose mode-`m` reduced density matrix is maximally mixed: the
/// mode-`m` slices are orthonormal vectors of equal weight.
pub fn degenerate_state(dims: &[usize], m: usize, rng: &mut ChaCha8Rng) -> PureState {
    let d = dims[m];
    let rest: usize = dims.iter().product::<usize>() / d;
    let q = haar_unitary(rest, rng);
    let strides: Vec<usize> = (0..dims.len()).map(|k| dims[k + 1..].iter().product()).collect();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); d * rest];
    for (flat, c) in coeffs.iter_mut().enumerate() {
        let j = (flat / strides[m]) % d;
        let mut col = 0;
        for k in 0..dims.len() {
            if k != m {
                col = col * dims[k] + (flat / strides[k]) % dims[k];
            }
        }
        *c = q[(col, j)] / (d as f64).sqrt();
    }
    PureState::new(dims.to_vec(), coeffs).unwrap()
}

pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|&v| Complex64::new(v, 0.0))))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn haar_locals(dims: &[usize], rng: &mut ChaCha8Rng) -> Vec<CMatrix> {
    dims.iter().map(|&d| haar_unitary(d, rng)).collect()
}

/// Random direct group on `n` dimensions: random composition into blocks,
/// same-size blocks linked with probability 1/2.
pub fn random_group(n: usize, rng: &mut ChaCha8Rng) -> DirectGroup {
    let mut sizes = Vec::new();
    let mut left = n;
    while left > 0 {
        let s = rng.random_range(1..=left.min(3));
        sizes.push(s);
        left -= s;
    }
    let mut labels: Vec<usize> = (0..sizes.len()).collect();
    for b in 1..sizes.len() {
        if let Some(a) = (0..b).find(|&a| sizes[a] == sizes[b]) {
            if rng.random_bool(0.5) {
                labels[b] = labels[a];
            }
        }
    }
    DirectGroup::from_labels(sizes, &labels).unwrap()
}

/// Random-restart alternating maximization of `|⟨φ|⊗U_m|ψ⟩|`; returns the
/// smallest `min_α ‖⊗U_mψ − e^{iα}φ‖` found. Each mode update is the exact
/// optimum `U = V W†` for `C = W Σ V†`, the contraction of the other modes.
pub fn brute_force_distance(psi: &PureState, phi: &PureState, restarts: usize, sweeps: usize, rng: &mut ChaCha8Rng) -> f64 {
    let n = psi.order();
    let mut best = f64::INFINITY;
    for _ in 0..restarts {
        let mut us = haar_locals(psi.dims(), rng);
        for _ in 0..sweeps {
            for m in 0..n {
                let mut others = us.clone();
                others[m] = CMatrix::identity(psi.dims()[m], psi.dims()[m]);
                let chi = apply_local_unitaries(psi, &others, 1e-9).unwrap();
                let c = mode_unfold(&chi, m + 1).unwrap().matrix * mode_unfold(phi, m + 1).unwrap().matrix.adjoint();
                let svd = c.svd(true, true);
                us[m] = svd.v_t.unwrap().adjoint() * svd.u.unwrap().adjoint();
            }
        }
        let chi = apply_local_unitaries(psi, &us, 1e-9).unwrap();
        let o: Complex64 = phi.coeffs().iter().zip(chi.coeffs()).map(|(p, c)| p.conj() * c).sum();
        let phase = if o.norm() > 0.0 { o / o.norm() } else { Complex64::new(1.0, 0.0) };
        let d = chi.coeffs().iter().zip(phi.coeffs()).map(|(c, p)| (c - phase * p).norm_sqr()).sum::<f64>().sqrt();
        best = best.min(d);
    }
    best
}

/// Independent oracle for `M_{ψ,m}^{i,k}` of a state given as a list of
/// 1-based kets with real amplitudes. `cluster` lists the 1-based mode-`i`
/// indices of cluster `k`.
pub fn oracle_stack_block(kets: &[(&[usize], f64)], dim_m: usize, m: usize, i: usize, cluster: &[usize]) -> CMatrix {
    let mut out = CMatrix::zeros(dim_m, dim_m);
    for (ka, a) in kets {
        for (kb, b) in kets {
            if !cluster.contains(&ka[i - 1]) || !cluster.contains(&kb[i - 1]) {
                continue;
            }
            let same_rest = (0..ka.len()).filter(|&q| q != m - 1).all(|q| ka[q] == kb[q]);
            if same_rest {
                out[(ka[m - 1] - 1, kb[m - 1] - 1)] += Complex64::new(a * b, 0.0);
            }
        }
    }
    out
}

/// Assert that every printed block matches a distinct computed block.
pub fn assert_multiset_match(printed: &[CMatrix], computed: &[CMatrix], tol: f64) {
    assert_eq!(printed.len(), computed.len());
    let mut used = vec![false; computed.len()];
    for p in printed {
        let hit = computed
            .iter()
            .enumerate()
            .position(|(j, c)| !used[j] && max_abs_diff(p, c) < tol)
            .unwrap_or_else(|| panic!("printed block {p} not found among computed blocks"));
        used[hit] = true;
    }
}
