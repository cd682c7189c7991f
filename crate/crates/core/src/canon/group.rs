use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{block_diag, haar_unitary, max_abs_diff, unitarity_residual, CMatrix};

/// Block-diagonal unitary group `{diag(U_1, …, U_m) : U_i ∈ U(r_i)}` where
/// blocks sharing an equality class must carry the same unitary.
///
/// Class ids are kept in first-appearance order, so two groups with the same
/// structure compare equal with `==`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGroup", into = "RawGroup")]
pub struct DirectGroup {
    block_sizes: Vec<usize>,
    class_of: Vec<usize>,
}

/// Serialized shape: block sizes plus the 0-based equality classes.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawGroup {
    block_sizes: Vec<usize>,
    equality_classes: Vec<Vec<usize>>,
}

impl TryFrom<RawGroup> for DirectGroup {
    type Error = Error;
    fn try_from(raw: RawGroup) -> Result<Self> {
        DirectGroup::new(raw.block_sizes, &raw.equality_classes)
    }
}

impl From<DirectGroup> for RawGroup {
    fn from(g: DirectGroup) -> Self {
        RawGroup { equality_classes: g.equality_classes(), block_sizes: g.block_sizes }
    }
}

impl DirectGroup {
    /// Group from block sizes and a partition of the (0-based) block indices.
    pub fn new(block_sizes: Vec<usize>, equality_classes: &[Vec<usize>]) -> Result<Self> {
        let m = block_sizes.len();
        let mut labels = vec![usize::MAX; m];
        for (c, class) in equality_classes.iter().enumerate() {
            if class.is_empty() {
                return Err(Error::InvalidGroup("empty equality class".into()));
            }
            for &b in class {
                if b >= m {
                    return Err(Error::InvalidGroup(format!("block {b} out of range ({m} blocks)")));
                }
                if labels[b] != usize::MAX {
                    return Err(Error::InvalidGroup(format!("block {b} appears in two classes")));
                }
                labels[b] = c;
            }
        }
        if labels.contains(&usize::MAX) {
            return Err(Error::InvalidGroup("equality classes do not cover every block".into()));
        }
        Self::from_labels(block_sizes, &labels)
    }

    /// Group from one arbitrary label per block; equal labels mean equal
    /// unitaries.
    pub fn from_labels<L: PartialEq + Clone>(block_sizes: Vec<usize>, labels: &[L]) -> Result<Self> {
        if labels.len() != block_sizes.len() {
            return Err(Error::InvalidGroup("one label per block required".into()));
        }
        if block_sizes.contains(&0) {
            return Err(Error::InvalidGroup("block sizes must be positive".into()));
        }
        let mut seen: Vec<L> = Vec::new();
        let mut class_of = Vec::with_capacity(labels.len());
        for l in labels {
            let id = match seen.iter().position(|s| s == l) {
                Some(id) => id,
                None => {
                    seen.push(l.clone());
                    seen.len() - 1
                }
            };
            class_of.push(id);
        }
        let group = Self { block_sizes, class_of };
        for class in group.equality_classes() {
            let size = group.block_sizes[class[0]];
            if class.iter().any(|&b| group.block_sizes[b] != size) {
                return Err(Error::InvalidGroup(format!(
                    "blocks {class:?} share a class but have different sizes"
                )));
            }
        }
        Ok(group)
    }

    /// Independent blocks, no equality constraints.
    pub fn unconstrained(block_sizes: Vec<usize>) -> Result<Self> {
        let labels: Vec<usize> = (0..block_sizes.len()).collect();
        Self::from_labels(block_sizes, &labels)
    }

    /// The full unitary group `U(n)`.
    pub fn full(n: usize) -> Result<Self> {
        Self::unconstrained(vec![n])
    }

    pub fn n(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// Class id per block.
    pub fn class_of(&self) -> &[usize] {
        &self.class_of
    }

    pub fn num_classes(&self) -> usize {
        self.class_of.iter().max().map_or(0, |m| m + 1)
    }

    /// Equality classes as sorted lists of 0-based block indices.
    pub fn equality_classes(&self) -> Vec<Vec<usize>> {
        let mut classes = vec![Vec::new(); self.num_classes()];
        for (b, &c) in self.class_of.iter().enumerate() {
            classes[c].push(b);
        }
        classes
    }

    pub fn class_size(&self, class: usize) -> usize {
        let b = self.class_of.iter().position(|&c| c == class).expect("class exists");
        self.block_sizes[b]
    }

    pub fn offsets(&self) -> Vec<usize> {
        self.block_sizes
            .iter()
            .scan(0, |acc, &s| {
                let o = *acc;
                *acc += s;
                Some(o)
            })
            .collect()
    }

    /// Real dimension of the group as a Lie group, `Σ_classes s_c²`.
    pub fn dimension(&self) -> usize {
        (0..self.num_classes()).map(|c| self.class_size(c).pow(2)).sum()
    }

    pub fn max_block_size(&self) -> usize {
        self.block_sizes.iter().copied().max().unwrap_or(0)
    }

    /// Every block is 1×1: the group is a torus of (possibly linked) phases.
    pub fn is_diagonal(&self) -> bool {
        self.block_sizes.iter().all(|&s| s == 1)
    }

    /// Assemble `diag(U_{c(1)}, …, U_{c(m)})` from one unitary per class.
    pub fn assemble(&self, per_class: &[CMatrix]) -> CMatrix {
        let blocks: Vec<CMatrix> = self.class_of.iter().map(|&c| per_class[c].clone()).collect();
        block_diag(&blocks)
    }

    /// Does `u` lie in the group (block sparsity, unitary blocks, equal
    /// blocks within classes) up to `tol`?
    pub fn contains(&self, u: &CMatrix, tol: f64) -> bool {
        let n = self.n();
        if u.shape() != (n, n) || unitarity_residual(u) > tol {
            return false;
        }
        let offsets = self.offsets();
        for (a, (&oa, &sa)) in offsets.iter().zip(&self.block_sizes).enumerate() {
            for (b, (&ob, &sb)) in offsets.iter().zip(&self.block_sizes).enumerate() {
                let view = u.view((oa, ob), (sa, sb));
                if a != b && view.iter().any(|z| z.norm() > tol) {
                    return false;
                }
            }
        }
        for class in self.equality_classes() {
            let first = class[0];
            let (o0, s) = (offsets[first], self.block_sizes[first]);
            let reference = u.view((o0, o0), (s, s)).into_owned();
            for &b in &class[1..] {
                let ob = offsets[b];
                if max_abs_diff(&reference, &u.view((ob, ob), (s, s)).into_owned()) > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Structural subgroup test: every block of `self` lies inside a block of
    /// `parent`, and blocks of one parent class are subdivided identically
    /// with matching classes at matching positions.
    pub fn is_subgroup_of(&self, parent: &DirectGroup) -> bool {
        if self.n() != parent.n() {
            return false;
        }
        // Map each parent block to the list of child blocks covering it.
        let mut cover: Vec<Vec<usize>> = vec![Vec::new(); parent.num_blocks()];
        let child_offsets = self.offsets();
        let parent_offsets = parent.offsets();
        for (cb, (&co, &cs)) in child_offsets.iter().zip(&self.block_sizes).enumerate() {
            let Some(pb) = parent_offsets
                .iter()
                .zip(&parent.block_sizes)
                .position(|(&po, &ps)| co >= po && co + cs <= po + ps)
            else {
                return false;
            };
            cover[pb].push(cb);
        }
        for class in parent.equality_classes() {
            let reference = &cover[class[0]];
            for &pb in &class[1..] {
                let other = &cover[pb];
                if other.len() != reference.len() {
                    return false;
                }
                for (&x, &y) in reference.iter().zip(other) {
                    if self.block_sizes[x] != self.block_sizes[y] || self.class_of[x] != self.class_of[y] {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Haar-random element of `g`: one Haar unitary per equality class,
/// replicated across the class, assembled block-diagonally.
pub fn sample_group_element(g: &DirectGroup, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_group_element_with(g, &mut rng)
}

pub fn sample_group_element_with<R: Rng + ?Sized>(g: &DirectGroup, rng: &mut R) -> CMatrix {
    let per_class: Vec<CMatrix> = (0..g.num_classes()).map(|c| haar_unitary(g.class_size(c), rng)).collect();
    g.assemble(&per_class)
}
