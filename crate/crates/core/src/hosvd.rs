//! HOSVD representatives: local unitaries that make every mode Gram matrix
//! diagonal, the resulting per-mode spectra, and the local symmetry groups
//! `S^{(m)} = ⊕_k U(μ_k)` left over by eigenvalue degeneracy.

use serde::{Deserialize, Serialize};

use crate::canon::DirectGroup;
use crate::error::{Error, Result};
use crate::linalg::{cluster_runs, hermitian_eigen_desc, max_offdiag, permutation, CMatrix};
use crate::tensor::{apply_local_ops, gram_of_mode, PureState};
use crate::Tolerances;

/// Distinct Gram eigenvalues of one mode (squared mode singular values)
/// with their multiplicities, listed in block order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum {
    /// 1-based mode number.
    pub mode: usize,
    pub values: Vec<f64>,
    pub multiplicities: Vec<usize>,
}

impl ModeSpectrum {
    /// Number of distinct values, `t^{(m)}`.
    pub fn t(&self) -> usize {
        self.values.len()
    }

    /// `Σ_{s<k} μ_s` for every cluster `k`.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.multiplicities
            .iter()
            .map(|&mu| {
                let o = acc;
                acc += mu;
                o
            })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    /// `(value, multiplicity)` pairs sorted by descending value.
    pub fn sorted_descending(&self) -> Vec<(f64, usize)> {
        let mut pairs: Vec<(f64, usize)> = self.values.iter().copied().zip(self.multiplicities.iter().copied()).collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        pairs
    }

    /// Values repeated by multiplicity, in block order.
    pub fn expanded(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(&v, &mu)| std::iter::repeat_n(v, mu))
            .collect()
    }
}

/// How clusters are ordered along each mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterOrder {
    /// Keep an input whose Gram is already diagonal with contiguous clusters
    /// as it is (clusters in index order); sort everything else descending.
    PreserveInput,
    /// Always order clusters by descending value. Used when two states must
    /// share one convention.
    Descending,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HosvdResult {
    /// The HOSVD representative.
    pub state: PureState,
    /// `V_m` with `(⊗V_m)|input⟩ = state`.
    pub transforms: Vec<CMatrix>,
    pub spectra: Vec<ModeSpectrum>,
    /// `S^{(m)}` per mode.
    pub symmetry: Vec<DirectGroup>,
    /// True when every transform is the identity.
    pub already_hosvd: bool,
}

/// Cluster a list of eigenvalues: sorted descending, merged by gaps of at
/// most `tol · max(1, raw[0])`, each cluster represented by its mean.
/// Values slightly below zero (above `−tol`) are clamped to zero.
pub fn cluster_eigenvalues(raw: &[f64], tol_cluster: f64) -> (Vec<f64>, Vec<usize>) {
    let mut sorted = raw.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    cluster_in_order(&sorted, tol_cluster)
}

fn cluster_in_order(values: &[f64], tol: f64) -> (Vec<f64>, Vec<usize>) {
    let runs = cluster_runs(values, tol);
    let mut reps = Vec::with_capacity(runs.len());
    let mut start = 0;
    for &len in &runs {
        let mean = values[start..start + len].iter().sum::<f64>() / len as f64;
        reps.push(if mean < 0.0 && mean >= -tol { 0.0 } else { mean });
        start += len;
    }
    (reps, runs)
}

/// `S^{(m)}`: one free unitary block per multiplicity cluster.
pub fn symmetry_group(spectrum: &ModeSpectrum) -> DirectGroup {
    DirectGroup::unconstrained(spectrum.multiplicities.clone()).expect("multiplicities are positive")
}

/// Bring `state` to HOSVD form.
pub fn to_hosvd(state: &PureState, tol: &Tolerances, order: ClusterOrder) -> Result<HosvdResult> {
    let norm = state.norm();
    if norm.is_nan() || (norm - 1.0).abs() > tol.norm {
        return Err(Error::NotNormalized { norm });
    }
    let mut transforms = Vec::with_capacity(state.order());
    let mut spectra = Vec::with_capacity(state.order());
    for m0 in 0..state.order() {
        let gram = gram_of_mode(state, m0);
        let (v, values, multiplicities) = diagonalize_mode(&gram, tol, order)?;
        transforms.push(v);
        spectra.push(ModeSpectrum { mode: m0 + 1, values, multiplicities });
    }
    let hosvd_state = apply_local_ops(state, &transforms);
    for m0 in 0..state.order() {
        let offdiag = max_offdiag(&gram_of_mode(&hosvd_state, m0));
        if offdiag > tol.diag {
            return Err(Error::HosvdNotDiagonal { mode: m0 + 1, offdiag });
        }
    }
    let already_hosvd = transforms.iter().all(|v| *v == CMatrix::identity(v.nrows(), v.ncols()));
    let symmetry = spectra.iter().map(symmetry_group).collect();
    Ok(HosvdResult { state: hosvd_state, transforms, spectra, symmetry, already_hosvd })
}

type ModeDiagonalization = (CMatrix, Vec<f64>, Vec<usize>);

fn diagonalize_mode(gram: &CMatrix, tol: &Tolerances, order: ClusterOrder) -> Result<ModeDiagonalization> {
    let n = gram.nrows();
    if max_offdiag(gram) <= tol.diag {
        let diag: Vec<f64> = (0..n).map(|i| gram[(i, i)].re).collect();
        let (reps, runs) = cluster_in_order(&diag, tol.cluster);
        let threshold = tol.cluster * diag.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        let acceptable = match order {
            ClusterOrder::PreserveInput => reps
                .iter()
                .enumerate()
                .all(|(i, a)| reps[i + 1..].iter().all(|b| (a - b).abs() > threshold)),
            ClusterOrder::Descending => reps.windows(2).all(|w| w[0] - w[1] > threshold),
        };
        if acceptable {
            return Ok((CMatrix::identity(n, n), reps, runs));
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| diag[b].total_cmp(&diag[a]));
        let sorted: Vec<f64> = idx.iter().map(|&i| diag[i]).collect();
        let (reps, runs) = cluster_in_order(&sorted, tol.cluster);
        // Column j of the permutation is e_{idx[j]}; V maps old index idx[j] to j.
        return Ok((permutation(&idx).adjoint(), reps, runs));
    }
    let (values, vectors) = hermitian_eigen_desc(gram)?;
    let (reps, runs) = cluster_in_order(&values, tol.cluster);
    Ok((vectors.adjoint(), reps, runs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_unitary, max_abs_diff, unitarity_residual};
    use crate::tensor::apply_local_unitaries;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_state(dims: &[usize], rng: &mut ChaCha8Rng) -> PureState {
        let total: usize = dims.iter().product();
        let mut v: Vec<Complex64> = (0..total)
            .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= n);
        PureState::new(dims.to_vec(), v).unwrap()
    }

    #[test]
    fn clustering_examples() {
        assert_eq!(cluster_eigenvalues(&[0.5, 0.5], 1e-9), (vec![0.5], vec![2]));
        let (v, mu) = cluster_eigenvalues(&[7. / 24., 5. / 12., 7. / 24.], 1e-9);
        assert_eq!(mu, vec![1, 2]);
        assert!((v[0] - 5. / 12.).abs() < 1e-15 && (v[1] - 7. / 24.).abs() < 1e-15);
        let (v, mu) = cluster_eigenvalues(&[0.4, 0.4 + 5e-10, 0.2], 1e-9);
        assert_eq!(mu, vec![2, 1]);
        assert!((v[0] - 0.4).abs() < 1e-9);
        assert_eq!(cluster_eigenvalues(&[], 1e-9), (vec![], vec![]));
        assert_eq!(cluster_eigenvalues(&[1.0, -1e-12], 1e-9), (vec![1.0, 0.0], vec![1, 1]));
    }

    #[test]
    fn symmetry_of_simple_spectrum_is_phases() {
        let s = ModeSpectrum { mode: 1, values: vec![0.5, 0.3, 0.2], multiplicities: vec![1, 1, 1] };
        let g = symmetry_group(&s);
        assert!(g.is_diagonal());
        assert_eq!(g.num_classes(), 3);
    }

    #[test]
    fn product_state_spectra() {
        let s = PureState::basis(vec![2, 3, 4], &[1, 1, 1]).unwrap();
        let h = to_hosvd(&s, &Tolerances::default(), ClusterOrder::Descending).unwrap();
        assert!(h.already_hosvd);
        for (spec, d) in h.spectra.iter().zip([2, 3, 4]) {
            assert_eq!(spec.values, vec![1.0, 0.0]);
            assert_eq!(spec.multiplicities, vec![1, d - 1]);
        }
    }

    #[test]
    fn random_state_becomes_diagonal_descending() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let s = random_state(&[2, 2, 2], &mut rng);
        let h = to_hosvd(&s, &Tolerances::default(), ClusterOrder::Descending).unwrap();
        for m in 0..3 {
            let g = gram_of_mode(&h.state, m);
            assert!(max_offdiag(&g) < 1e-9);
            let d: Vec<f64> = (0..2).map(|i| g[(i, i)].re).collect();
            assert!(d[0] >= d[1]);
            assert!(d.iter().zip(h.spectra[m].expanded()).all(|(a, b)| (a - b).abs() < 1e-12));
            assert!(unitarity_residual(&h.transforms[m]) < 1e-12);
            let total: f64 = h.spectra[m].values.iter().zip(&h.spectra[m].multiplicities).map(|(v, &mu)| v * mu as f64).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
        let again = to_hosvd(&h.state, &Tolerances::default(), ClusterOrder::Descending).unwrap();
        assert!(again.already_hosvd);
        let applied = apply_local_unitaries(&s, &h.transforms, 1e-10).unwrap();
        let diff = applied.coeffs().iter().zip(h.state.coeffs()).fold(0.0_f64, |a, (x, y)| a.max((x - y).norm()));
        assert!(diff < 1e-9);
    }

    #[test]
    fn preserve_mode_keeps_ascending_diagonal_but_descending_sorts_it() {
        // |11⟩√0.3 + |22⟩√0.7: Grams diag(0.3, 0.7).
        let mut c = vec![Complex64::new(0.0, 0.0); 4];
        c[0] = Complex64::new(0.3_f64.sqrt(), 0.0);
        c[3] = Complex64::new(0.7_f64.sqrt(), 0.0);
        let s = PureState::new(vec![2, 2], c).unwrap();
        let kept = to_hosvd(&s, &Tolerances::default(), ClusterOrder::PreserveInput).unwrap();
        assert!(kept.already_hosvd);
        assert!((kept.spectra[0].values[0] - 0.3).abs() < 1e-15);
        let sorted = to_hosvd(&s, &Tolerances::default(), ClusterOrder::Descending).unwrap();
        assert!(!sorted.already_hosvd);
        assert!((sorted.spectra[0].values[0] - 0.7).abs() < 1e-15);
        assert!((sorted.state.coeffs()[0].re - 0.7_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn spectra_are_lu_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let tol = Tolerances::default();
        for _ in 0..10 {
            let s = random_state(&[2, 3, 3], &mut rng);
            let us: Vec<CMatrix> = s.dims().iter().map(|&d| haar_unitary(d, &mut rng)).collect();
            let t = apply_local_unitaries(&s, &us, 1e-10).unwrap();
            let a = to_hosvd(&s, &tol, ClusterOrder::Descending).unwrap();
            let b = to_hosvd(&t, &tol, ClusterOrder::Descending).unwrap();
            for (x, y) in a.spectra.iter().zip(&b.spectra) {
                assert_eq!(x.multiplicities, y.multiplicities);
                assert!(x.values.iter().zip(&y.values).all(|(p, q)| (p - q).abs() < 1e-9));
            }
            // Grams of the two HOSVD states agree exactly in structure.
            for m in 0..3 {
                assert!(max_abs_diff(&gram_of_mode(&a.state, m), &gram_of_mode(&b.state, m)) < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_unnormalized() {
        let s = PureState::unnormalized(vec![2, 2], vec![Complex64::new(1.0, 0.0); 4]).unwrap();
        assert!(matches!(
            to_hosvd(&s, &Tolerances::default(), ClusterOrder::Descending),
            Err(Error::NotNormalized { .. })
        ));
    }
}
