//! End-to-end LU-equivalence decision.
//!
//! Both states go through HOSVD (descending spectra) and reduction; the
//! invariants are compared in order of cost, and when every residual group
//! is a torus the remaining freedom is settled exactly by [`match_phases_in`].

mod phases;

pub use phases::{match_phases, match_phases_in, PhaseMismatch, PhaseSolution, PhaseSystem};

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::canon::{same_canonical, DirectGroup};
use crate::error::{Error, Result};
use crate::hosvd::{to_hosvd, ClusterOrder, HosvdResult};
use crate::linalg::{unitarity_residual, CMatrix};
use crate::reduce::{reduce_state, ReducedForm};
use crate::tensor::{apply_local_ops, PureState};
use crate::Tolerances;

/// Unitarity required of witness matrices.
const WITNESS_UNITARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictKind {
    Equivalent,
    Inequivalent,
    Undecided,
}

impl VerdictKind {
    /// Process exit code for the CLI.
    pub fn exit_code(self) -> i32 {
        match self {
            VerdictKind::Equivalent => 0,
            VerdictKind::Inequivalent => 1,
            VerdictKind::Undecided => 2,
        }
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictKind::Equivalent => "Equivalent",
            VerdictKind::Inequivalent => "Inequivalent",
            VerdictKind::Undecided => "Undecided",
        })
    }
}

/// Diagnostic attached to a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Reason {
    /// Mode spectra differ (values beyond `tol_cluster` or multiplicities).
    Spectra { mode: usize },
    /// Canonical stacks or residual structures differ.
    CanonicalStacks { mode: usize },
    /// `|ψ̃_j| ≠ |φ̃_j|` somewhere.
    ModulusPattern { position: usize },
    /// The congruence system has no solution.
    PhaseSystem { detail: String },
    /// Residual groups keep blocks of size ≥ 2; `(mode, block sizes)`.
    NonAbelianResidual { blocks: Vec<(usize, Vec<usize>)> },
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reason::Spectra { mode } => write!(f, "spectra mismatch on mode {mode}"),
            Reason::CanonicalStacks { mode } => write!(f, "canonical stacks mismatch on mode {mode}"),
            Reason::ModulusPattern { position } => write!(f, "modulus pattern mismatch at flat position {position}"),
            Reason::PhaseSystem { detail } => write!(f, "phase system inconsistent ({detail})"),
            Reason::NonAbelianResidual { blocks } => {
                write!(f, "residual blocks larger than 1:")?;
                for (mode, sizes) in blocks {
                    write!(f, " mode {mode} {sizes:?}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub kind: VerdictKind,
    /// Per-mode `U_m` with `⊗U_m|ψ⟩ = |φ⟩` up to global phase.
    pub witness: Option<Vec<CMatrix>>,
    /// Validation residual of the witness.
    pub witness_residual: Option<f64>,
    pub reason: Option<Reason>,
    /// Residual groups `H̃_m` when undecided.
    pub residual_report: Option<Vec<DirectGroup>>,
}

impl Verdict {
    fn inequivalent(reason: Reason) -> Self {
        Self { kind: VerdictKind::Inequivalent, witness: None, witness_residual: None, reason: Some(reason), residual_report: None }
    }
}

/// Intermediate data for one side of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Side {
    pub hosvd: HosvdResult,
    pub reduced: Option<ReducedForm>,
}

/// A verdict plus everything computed on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub verdict: Verdict,
    pub psi: Side,
    pub phi: Side,
}

/// Decide LU equivalence of `psi` and `phi` (up to global phase).
pub fn compare(psi: &PureState, phi: &PureState, tol: &Tolerances) -> Result<Verdict> {
    Ok(compare_detailed(psi, phi, tol)?.verdict)
}

pub fn compare_detailed(psi: &PureState, phi: &PureState, tol: &Tolerances) -> Result<Comparison> {
    if psi.dims() != phi.dims() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", psi.dims(), phi.dims())));
    }
    for s in [psi, phi] {
        if !s.is_normalized() {
            return Err(Error::NotNormalized { norm: s.norm() });
        }
    }
    let hp = to_hosvd(psi, tol, ClusterOrder::Descending)?;
    let hf = to_hosvd(phi, tol, ClusterOrder::Descending)?;
    let done = |verdict, hp, hf, rp, rf| Ok(Comparison { verdict, psi: Side { hosvd: hp, reduced: rp }, phi: Side { hosvd: hf, reduced: rf } });

    for (a, b) in hp.spectra.iter().zip(&hf.spectra) {
        let same = a.multiplicities == b.multiplicities
            && a.values.iter().zip(&b.values).all(|(x, y)| (x - y).abs() <= tol.cluster);
        if !same {
            return done(Verdict::inequivalent(Reason::Spectra { mode: a.mode }), hp, hf, None, None);
        }
    }

    let rp = reduce_state(&hp, tol.cluster)?;
    let rf = reduce_state(&hf, tol.cluster)?;
    for (m, (a, b)) in rp.reductions.iter().zip(&rf.reductions).enumerate() {
        if !same_canonical(a, b, tol.matching)? {
            return done(Verdict::inequivalent(Reason::CanonicalStacks { mode: m + 1 }), hp, hf, Some(rp), Some(rf));
        }
    }

    let torus = rp.is_diagonal();
    let matched = match_phases_in(&rp.state, &rf.state, &rp.residual, tol.matching)?;
    let verdict = match matched {
        Ok(solution) => {
            let witness = assemble_witness(&hp, &rp, &hf, &rf, &solution.diagonal_unitaries());
            let (ok, residual) = validate_witness(psi, phi, &witness, tol.matching)?;
            if ok {
                Verdict {
                    kind: VerdictKind::Equivalent,
                    witness: Some(witness),
                    witness_residual: Some(residual),
                    reason: None,
                    residual_report: None,
                }
            } else if torus {
                Verdict::inequivalent(Reason::PhaseSystem { detail: format!("witness residual {residual:.3e}") })
            } else {
                undecided(&rp)
            }
        }
        Err(mismatch) if torus => Verdict::inequivalent(match mismatch {
            PhaseMismatch::Modulus { position, .. } => Reason::ModulusPattern { position },
            PhaseMismatch::Inconsistent { position, defect } => Reason::PhaseSystem {
                detail: format!("cycle defect {defect:.3e} rad closing at flat position {position}"),
            },
            PhaseMismatch::Residual { residual } => Reason::PhaseSystem { detail: format!("solution residual {residual:.3e}") },
        }),
        Err(_) => undecided(&rp),
    };
    done(verdict, hp, hf, Some(rp), Some(rf))
}

fn undecided(r: &ReducedForm) -> Verdict {
    let blocks = r
        .residual
        .iter()
        .zip(1..)
        .filter(|(g, _)| !g.is_diagonal())
        .map(|(g, m)| (m, g.block_sizes().to_vec()))
        .collect();
    Verdict {
        kind: VerdictKind::Undecided,
        witness: None,
        witness_residual: None,
        reason: Some(Reason::NonAbelianResidual { blocks }),
        residual_report: Some(r.residual.clone()),
    }
}

/// `U_m = V_{φ,m}† · U_{φ,m}† · D_m · U_{ψ,m} · V_{ψ,m}`.
fn assemble_witness(hp: &HosvdResult, rp: &ReducedForm, hf: &HosvdResult, rf: &ReducedForm, ds: &[CMatrix]) -> Vec<CMatrix> {
    (0..ds.len())
        .map(|m| hf.transforms[m].adjoint() * rf.transforms[m].adjoint() * &ds[m] * &rp.transforms[m] * &hp.transforms[m])
        .collect()
}

/// `min_α ‖⊗U_m ψ − e^{iα} φ‖` and whether it is below `tol`.
pub fn validate_witness(psi: &PureState, phi: &PureState, us: &[CMatrix], tol: f64) -> Result<(bool, f64)> {
    if psi.dims() != phi.dims() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", psi.dims(), phi.dims())));
    }
    if us.len() != psi.order() {
        return Err(Error::DimensionMismatch(format!("{} witness matrices for {} modes", us.len(), psi.order())));
    }
    for (m, (u, &d)) in us.iter().zip(psi.dims()).enumerate() {
        if u.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!("witness for mode {} is {:?}, expected ({d}, {d})", m + 1, u.shape())));
        }
        let residual = unitarity_residual(u);
        if residual > WITNESS_UNITARY_TOL {
            return Err(Error::NotUnitary { mode: m + 1, residual });
        }
    }
    let chi = apply_local_ops(psi, us);
    let o: Complex64 = phi.coeffs().iter().zip(chi.coeffs()).map(|(p, c)| p.conj() * c).sum();
    let phase = if o.norm() > 0.0 { o / o.norm() } else { Complex64::new(1.0, 0.0) };
    let residual = chi
        .coeffs()
        .iter()
        .zip(phi.coeffs())
        .map(|(c, p)| (c - phase * p).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok((residual < tol, residual))
}
