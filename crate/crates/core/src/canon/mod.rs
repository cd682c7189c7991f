//! Canonical forms of ordered Hermitian families under simultaneous
//! conjugation by one element of a direct group.
//!
//! The reduction is a refinement cascade. A working group `G` starts as the
//! input group and only ever shrinks. Each step locates the first sub-block
//! (in a fixed scan order) that is not yet invariant under `G`, moves it to
//! a normal form with an element of `G`, and replaces `G` by the stabilizer
//! of that normal form:
//!
//! * diagonal sub-block within one class: eigendecomposition, eigenvalues
//!   descending; the class splits by eigenvalue cluster;
//! * off-diagonal sub-block within one class: the same, applied to its
//!   Hermitian parts `(X+X†)/2` and `(X−X†)/2i`;
//! * off-diagonal sub-block between two classes: SVD to a descending
//!   rectangular diagonal; both classes split by singular-value cluster and
//!   the pieces carrying equal nonzero singular values are linked into one
//!   class. Kernel pieces stay independent.
//!
//! At the fixed point every within-class sub-block is scalar and every
//! cross-class sub-block vanishes, so the final group stabilizes the
//! canonical family. Every step strictly lowers the Lie dimension of `G`,
//! which bounds the number of steps.

mod group;

pub use group::{sample_group_element, sample_group_element_with, DirectGroup};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    block_diag, cluster_runs, full_svd_desc, hermiticity_residual, hermitian_eigen_desc, hermitize,
    max_abs, max_abs_diff, CMatrix,
};

const HERMITIAN_TOL: f64 = 1e-10;

/// Ordered family of `n × n` Hermitian matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianFamily {
    n: usize,
    matrices: Vec<CMatrix>,
}

impl HermitianFamily {
    pub fn new(n: usize, matrices: Vec<CMatrix>) -> Result<Self> {
        let mut out = Vec::with_capacity(matrices.len());
        for (index, m) in matrices.into_iter().enumerate() {
            if m.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!(
                    "family matrix {index} is {:?}, expected ({n}, {n})",
                    m.shape()
                )));
            }
            let residual = hermiticity_residual(&m);
            if residual > HERMITIAN_TOL * max_abs(&m).max(1.0) {
                return Err(Error::NotHermitian { index, residual });
            }
            out.push(hermitize(&m));
        }
        Ok(Self { n, matrices: out })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    /// `{W A_i W†}`.
    pub fn conjugated(&self, w: &CMatrix) -> Self {
        let matrices = self.matrices.iter().map(|a| hermitize(&(w * a * w.adjoint()))).collect();
        Self { n: self.n, matrices }
    }

    /// Block-diagonal assembly `diag(A_1, …, A_L)`.
    pub fn stacked(&self) -> CMatrix {
        block_diag(&self.matrices)
    }
}

/// Result of [`canonicalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalReduction {
    /// `U A_i U†` for every input matrix.
    pub canonical: HermitianFamily,
    /// The accumulated unitary `U`, an element of the input group.
    pub transform: CMatrix,
    /// Stabilizer of the canonical family inside the input group.
    pub residual: DirectGroup,
    /// Number of refinement steps taken.
    pub steps: usize,
    /// Clustering decisions that sat close to the tolerance.
    pub warnings: Vec<String>,
}

/// One refinement step found by the scan.
enum Step {
    /// Split class `class` by the eigenspaces of `vectors` (descending).
    Split { class: usize, vectors: CMatrix, runs: Vec<usize> },
    /// Link classes of blocks `a` and `b` through the SVD `X = P Σ Q†`.
    Link { class_a: usize, class_b: usize, p: CMatrix, q: CMatrix, nonzero: Vec<usize> },
}

struct Cascade<'a> {
    tol: f64,
    warnings: &'a mut Vec<String>,
}

impl Cascade<'_> {
    /// Warn when a cluster boundary sits within a decade of the threshold.
    fn check_margin(&mut self, values: &[f64], what: &str) {
        let scale = values.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        let threshold = self.tol * scale;
        for w in values.windows(2) {
            let gap = (w[0] - w[1]).abs();
            if gap > threshold && gap < 10.0 * threshold {
                self.warnings.push(format!(
                    "{what}: eigen/singular gap {gap:.3e} is within 10x of the cluster threshold {threshold:.3e}"
                ));
            }
        }
    }

    fn plan_hermitian(&mut self, class: usize, h: &CMatrix) -> Result<Option<Step>> {
        let s = h.nrows();
        if s < 2 {
            return Ok(None);
        }
        // Cheap exit: deviation from the mean scalar bounds the eigenvalue spread.
        let mean = h.trace() / Complex64::new(s as f64, 0.0);
        let dev = max_abs_diff(h, &(CMatrix::identity(s, s) * mean));
        if 2.0 * (s as f64) * dev <= self.tol {
            return Ok(None);
        }
        let (values, vectors) = hermitian_eigen_desc(h)?;
        let runs = cluster_runs(&values, self.tol);
        if runs.len() < 2 {
            return Ok(None);
        }
        self.check_margin(&values, "hermitian split");
        Ok(Some(Step::Split { class, vectors, runs }))
    }

    fn plan_link(&mut self, class_a: usize, class_b: usize, x: &CMatrix) -> Result<Option<Step>> {
        let frob = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if frob <= self.tol {
            return Ok(None);
        }
        let (p, sigma, q) = full_svd_desc(x)?;
        let mut values = sigma;
        values.push(0.0);
        let runs = cluster_runs(&values, self.tol);
        if runs.len() < 2 {
            return Ok(None);
        }
        self.check_margin(&values, "off-diagonal link");
        let nonzero = runs[..runs.len() - 1].to_vec();
        Ok(Some(Step::Link { class_a, class_b, p, q, nonzero }))
    }
}

/// Canonical form of `family` under simultaneous conjugation by `group`.
///
/// Equal canonical families (with identical residual structure) are
/// produced exactly for families related by an element of `group`, up to
/// floating-point error.
pub fn canonicalize(family: &HermitianFamily, group: &DirectGroup, tol_cluster: f64) -> Result<CanonicalReduction> {
    let n = family.n();
    if group.n() != n {
        return Err(Error::DimensionMismatch(format!("group acts on C^{}, family on C^{n}", group.n())));
    }
    let mut current = group.clone();
    let mut transform = CMatrix::identity(n, n);
    let mut matrices = family.matrices().to_vec();
    let mut warnings = Vec::new();
    let max_steps = group.dimension() + 1;

    for steps in 0..=max_steps {
        let step = {
            let mut cascade = Cascade { tol: tol_cluster, warnings: &mut warnings };
            next_step(&matrices, &current, &mut cascade)?
        };
        let Some(step) = step else {
            return Ok(CanonicalReduction {
                canonical: HermitianFamily { n, matrices },
                transform,
                residual: current,
                steps,
                warnings,
            });
        };
        let (t, next) = apply_step(&current, step)?;
        matrices = matrices.iter().map(|a| hermitize(&(&t * a * t.adjoint()))).collect();
        transform = &t * transform;
        debug_assert!(next.dimension() < current.dimension());
        current = next;
    }
    Err(Error::CanonNotConverged { actions: max_steps })
}

fn sub_block(a: &CMatrix, offsets: &[usize], sizes: &[usize], r: usize, c: usize) -> CMatrix {
    a.view((offsets[r], offsets[c]), (sizes[r], sizes[c])).into_owned()
}

/// Scan order: diagonal sub-blocks of every matrix first (matrix order, then
/// block order), then upper off-diagonal sub-blocks (matrix, row, column).
fn next_step(matrices: &[CMatrix], g: &DirectGroup, cascade: &mut Cascade<'_>) -> Result<Option<Step>> {
    let offsets = g.offsets();
    let sizes = g.block_sizes();
    let class_of = g.class_of();
    for a in matrices {
        for (b, &class) in class_of.iter().enumerate() {
            let h = sub_block(a, &offsets, sizes, b, b);
            if let Some(step) = cascade.plan_hermitian(class, &h)? {
                return Ok(Some(step));
            }
        }
    }
    let half = Complex64::new(0.5, 0.0);
    let minus_half_i = Complex64::new(0.0, -0.5);
    for a in matrices {
        for r in 0..sizes.len() {
            for c in r + 1..sizes.len() {
                let x = sub_block(a, &offsets, sizes, r, c);
                if class_of[r] == class_of[c] {
                    let re_part = (&x + x.adjoint()) * half;
                    let im_part = (&x - x.adjoint()) * minus_half_i;
                    for h in [re_part, im_part] {
                        if let Some(step) = cascade.plan_hermitian(class_of[r], &h)? {
                            return Ok(Some(step));
                        }
                    }
                } else if let Some(step) = cascade.plan_link(class_of[r], class_of[c], &x)? {
                    return Ok(Some(step));
                }
            }
        }
    }
    Ok(None)
}

#[derive(Clone, PartialEq)]
enum Label {
    Keep(usize),
    Split(usize, usize),
    Linked(usize),
    Kernel(usize),
}

fn apply_step(g: &DirectGroup, step: Step) -> Result<(CMatrix, DirectGroup)> {
    let mut pieces: Vec<CMatrix> = Vec::with_capacity(g.num_blocks());
    let mut sizes = Vec::new();
    let mut labels = Vec::new();
    for (&size, &class) in g.block_sizes().iter().zip(g.class_of()) {
        match &step {
            Step::Split { class: target, vectors, runs } if class == *target => {
                pieces.push(vectors.adjoint());
                for (j, &len) in runs.iter().enumerate() {
                    sizes.push(len);
                    labels.push(Label::Split(class, j));
                }
            }
            Step::Link { class_a, class_b, p, q, nonzero } if class == *class_a || class == *class_b => {
                pieces.push(if class == *class_a { p.adjoint() } else { q.adjoint() });
                for (j, &len) in nonzero.iter().enumerate() {
                    sizes.push(len);
                    labels.push(Label::Linked(j));
                }
                let kernel = size - nonzero.iter().sum::<usize>();
                if kernel > 0 {
                    sizes.push(kernel);
                    labels.push(Label::Kernel(class));
                }
            }
            _ => {
                pieces.push(CMatrix::identity(size, size));
                sizes.push(size);
                labels.push(Label::Keep(class));
            }
        }
    }
    Ok((block_diag(&pieces), DirectGroup::from_labels(sizes, &labels)?))
}

/// Lemma-style comparison: same canonical matrices within `tol_match` and
/// structurally identical residual groups.
pub fn same_canonical(a: &CanonicalReduction, b: &CanonicalReduction, tol_match: f64) -> Result<bool> {
    if a.canonical.n() != b.canonical.n() || a.canonical.len() != b.canonical.len() {
        return Err(Error::DimensionMismatch(format!(
            "families of {} {}x{} vs {} {}x{} matrices",
            a.canonical.len(),
            a.canonical.n(),
            a.canonical.n(),
            b.canonical.len(),
            b.canonical.n(),
            b.canonical.n()
        )));
    }
    if a.residual != b.residual {
        return Ok(false);
    }
    Ok(a
        .canonical
        .matrices()
        .iter()
        .zip(b.canonical.matrices())
        .all(|(x, y)| max_abs_diff(x, y) < tol_match))
}

/// Report-friendly summary of a direct group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub block_sizes: Vec<usize>,
    pub equality_classes: Vec<Vec<usize>>,
    pub free_phases: Option<usize>,
}

impl From<&DirectGroup> for GroupSummary {
    fn from(g: &DirectGroup) -> Self {
        Self {
            block_sizes: g.block_sizes().to_vec(),
            equality_classes: g.equality_classes(),
            free_phases: g.is_diagonal().then(|| g.num_classes()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_hermitian, unitarity_residual};
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(values: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_iterator(
            values.len(),
            values.iter().map(|&v| Complex64::new(v, 0.0)),
        ))
    }

    #[test]
    fn identity_matrix_keeps_group() {
        let fam = HermitianFamily::new(3, vec![CMatrix::identity(3, 3)]).unwrap();
        let g = DirectGroup::new(vec![1, 2], &[vec![0], vec![1]]).unwrap();
        let red = canonicalize(&fam, &g, 1e-9).unwrap();
        assert_eq!(red.residual, g);
        assert_eq!(red.transform, CMatrix::identity(3, 3));
        assert_eq!(red.canonical, fam);
    }

    #[test]
    fn descending_diagonal_family_is_its_own_canonical_form() {
        let fam = HermitianFamily::new(
            2,
            vec![diag(&[5. / 12., 1. / 6.]), diag(&[1. / 12., 1. / 3.]), diag(&[0.25, 1. / 6.]), diag(&[0.25, 1. / 3.])],
        )
        .unwrap();
        let red = canonicalize(&fam, &DirectGroup::full(2).unwrap(), 1e-9).unwrap();
        assert_eq!(red.transform, CMatrix::identity(2, 2));
        assert_eq!(red.residual, DirectGroup::unconstrained(vec![1, 1]).unwrap());
        assert_eq!(red.canonical, fam);
    }

    #[test]
    fn ascending_diagonal_is_sorted() {
        let fam = HermitianFamily::new(2, vec![diag(&[0.1, 0.7])]).unwrap();
        let red = canonicalize(&fam, &DirectGroup::full(2).unwrap(), 1e-9).unwrap();
        assert_eq!(red.canonical.matrices()[0], diag(&[0.7, 0.1]));
    }

    #[test]
    fn off_diagonal_coupling_links_phases() {
        let mut a = diag(&[2.0, 1.0]);
        a[(0, 1)] = Complex64::new(0.0, 0.5);
        a[(1, 0)] = Complex64::new(0.0, -0.5);
        let fam = HermitianFamily::new(2, vec![a]).unwrap();
        let g = DirectGroup::unconstrained(vec![1, 1]).unwrap();
        let red = canonicalize(&fam, &g, 1e-9).unwrap();
        let c = &red.canonical.matrices()[0];
        assert!((c[(0, 1)] - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert_eq!(red.residual.class_of(), &[0, 0]);
        assert!(g.contains(&red.transform, 1e-12));
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let fam = HermitianFamily::new(2, vec![CMatrix::identity(2, 2)]).unwrap();
        assert!(canonicalize(&fam, &DirectGroup::full(3).unwrap(), 1e-9).is_err());
        let mut nh = CMatrix::identity(2, 2);
        nh[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(HermitianFamily::new(2, vec![nh]), Err(Error::NotHermitian { index: 0, .. })));
        assert!(HermitianFamily::new(2, vec![CMatrix::identity(3, 3)]).is_err());
    }

    #[test]
    fn same_canonical_detects_differences() {
        let g = DirectGroup::full(3).unwrap();
        let a = canonicalize(&HermitianFamily::new(3, vec![diag(&[0.5, 0.25, 0.25])]).unwrap(), &g, 1e-9).unwrap();
        let b = canonicalize(&HermitianFamily::new(3, vec![diag(&[0.5, 0.3, 0.2])]).unwrap(), &g, 1e-9).unwrap();
        assert!(same_canonical(&a, &a, 1e-8).unwrap());
        assert!(!same_canonical(&a, &b, 1e-8).unwrap());
        let two = canonicalize(
            &HermitianFamily::new(3, vec![diag(&[1.0, 0.0, 0.0]), diag(&[1.0, 0.0, 0.0])]).unwrap(),
            &g,
            1e-9,
        )
        .unwrap();
        assert!(same_canonical(&a, &two, 1e-8).is_err());
    }

    #[test]
    fn conjugated_family_has_same_canonical_form_with_links() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let g = DirectGroup::new(vec![2, 1, 2], &[vec![0, 2], vec![1]]).unwrap();
        let fam = HermitianFamily::new(5, (0..3).map(|_| random_hermitian(5, &mut rng)).collect()).unwrap();
        let w = sample_group_element_with(&g, &mut rng);
        let a = canonicalize(&fam, &g, 1e-9).unwrap();
        let b = canonicalize(&fam.conjugated(&w), &g, 1e-9).unwrap();
        assert!(same_canonical(&a, &b, 1e-9).unwrap());
        assert!(g.contains(&a.transform, 1e-9));
        assert!(unitarity_residual(&a.transform) < 1e-12);
        assert!(a.residual.is_subgroup_of(&g));
    }
}
