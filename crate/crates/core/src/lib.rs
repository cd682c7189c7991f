//! Local-unitary (LU) equivalence of multipartite pure states.
//!
//! The pipeline brings both states to HOSVD form, builds the per-mode
//! stacks of sub-state Gram matrices, canonicalizes each stack under the
//! local HOSVD symmetry, and finally matches the reduced states under the
//! residual (usually diagonal) symmetry group.
//!
//! ```
//! use luequiv::{compare, tensor::PureState, Tolerances, VerdictKind};
//! use num_complex::Complex64;
//!
//! let s = std::f64::consts::FRAC_1_SQRT_2;
//! let mut coeffs = vec![Complex64::new(0.0, 0.0); 8];
//! coeffs[0] = Complex64::new(s, 0.0);
//! coeffs[3] = Complex64::new(s, 0.0);
//! let a = PureState::new(vec![2, 2, 2], coeffs).unwrap();
//! let b = a.clone();
//! let verdict = compare(&a, &b, &Tolerances::default()).unwrap();
//! assert_eq!(verdict.kind, VerdictKind::Equivalent);
//! ```

pub mod canon;
pub mod cli;
pub mod decide;
mod error;
pub mod hosvd;
pub mod linalg;
pub mod reduce;
pub mod tensor;

pub use hosvd::{to_hosvd, ClusterOrder, HosvdResult, ModeSpectrum};
pub use reduce::{build_mode_stack, extract_substate, reduce_state, ModeStack, ReducedForm};
pub use canon::{canonicalize, same_canonical, CanonicalReduction, DirectGroup, HermitianFamily};
pub use decide::{compare, compare_detailed, match_phases, validate_witness, Comparison, Reason, Verdict, VerdictKind};

pub use error::{Error, Result};

pub use tensor::PureState;

/// Default cap on the number of dense coefficients accepted from files.
pub const DEFAULT_MAX_COEFFS: usize = 10_000_000;

/// Numerical tolerances shared by the whole pipeline.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Allowed deviation of ‖ψ‖ from 1 for input states.
    pub norm: f64,
    /// Allowed ‖UU† − I‖ for user-supplied unitaries.
    pub unitary: f64,
    /// Relative gap below which eigenvalues / singular values are merged.
    pub cluster: f64,
    /// Off-diagonal magnitude below which a Gram matrix counts as diagonal.
    pub diag: f64,
    /// Matching tolerance for canonical forms, moduli and witnesses.
    pub matching: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            norm: 1e-10,
            unitary: 1e-10,
            cluster: 1e-9,
            diag: 1e-9,
            matching: 1e-8,
        }
    }
}
