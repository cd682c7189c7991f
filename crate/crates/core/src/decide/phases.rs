//! Diagonal phase matching: find local diagonal phases `D = ⊗ D_m` with
//! `D|a⟩ = |b⟩`, i.e. for every nonzero position `j`
//!
//! ```text
//! Σ_m θ^{(m)}_{j_m} ≡ arg(b_j / a_j)   (mod 2π)
//! ```
//!
//! The integer incidence system is brought to echelon form with integer row
//! operations only (swaps and integer multiples of one row added to
//! another), so the congruence classes of the right-hand sides are
//! preserved exactly. Pivot rows are always solvable over real angles; a row
//! that reduces to zero must have a right-hand side `≡ 0`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::canon::DirectGroup;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::tensor::{apply_local_ops, PureState};

/// Positions whose moduli are both below `SUPPORT_FRACTION * tol_match`
/// carry no usable phase and are left out of the system.
const SUPPORT_FRACTION: f64 = 1e-3;

pub(crate) fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Linear congruence system over the phase variables.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSystem {
    /// `(mode, slot)` owning each variable; both 1-based.
    pub variables: Vec<(usize, usize)>,
    /// Per mode, the variable index of every basis index.
    pub index_to_var: Vec<Vec<usize>>,
    /// One 0/1 row per equation, exactly one unit entry per mode.
    pub rows: Vec<Vec<i64>>,
    /// `arg(b_j / a_j)` per equation.
    pub rhs: Vec<f64>,
    /// Coefficient modulus per equation, used to weigh angular residuals.
    pub weights: Vec<f64>,
    /// Flat coefficient position per equation.
    pub positions: Vec<usize>,
}

/// Why two states cannot be related by diagonal phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PhaseMismatch {
    /// `|a_j| ≠ |b_j|` at a flat position.
    Modulus { position: usize, lhs: f64, rhs: f64 },
    /// A closed cycle of equations has a nonzero phase defect.
    Inconsistent { position: usize, defect: f64 },
    /// The back-substituted solution misses `b` by more than the tolerance.
    Residual { residual: f64 },
}

/// A particular solution plus its gauge freedoms.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSolution {
    /// `θ^{(m)}_j` per mode and basis index.
    pub phases: Vec<Vec<f64>>,
    /// Variables left free by the elimination, as `(mode, slot)`, 1-based.
    pub free_variables: Vec<(usize, usize)>,
    pub rank: usize,
    pub equations: usize,
    /// `‖D a − b‖` for the returned phases.
    pub residual: f64,
}

impl PhaseSolution {
    pub fn diagonal_unitaries(&self) -> Vec<CMatrix> {
        self.phases
            .iter()
            .map(|thetas| {
                let mut d = CMatrix::zeros(thetas.len(), thetas.len());
                for (i, &t) in thetas.iter().enumerate() {
                    d[(i, i)] = Complex64::from_polar(1.0, t);
                }
                d
            })
            .collect()
    }
}

impl PhaseSystem {
    /// Variables for the maximal torus of `groups`: basis indices at the same
    /// offset inside equality-linked blocks share one variable.
    pub fn variables_for(groups: &[DirectGroup]) -> (Vec<(usize, usize)>, Vec<Vec<usize>>) {
        let mut variables = Vec::new();
        let mut index_to_var = Vec::with_capacity(groups.len());
        for (m0, g) in groups.iter().enumerate() {
            let base = variables.len();
            let mut slot_of: Vec<(usize, usize)> = Vec::new();
            let mut map = Vec::with_capacity(g.n());
            for (&size, &class) in g.block_sizes().iter().zip(g.class_of()) {
                for r in 0..size {
                    let key = (class, r);
                    let slot = match slot_of.iter().position(|k| *k == key) {
                        Some(s) => s,
                        None => {
                            slot_of.push(key);
                            variables.push((m0 + 1, slot_of.len()));
                            slot_of.len() - 1
                        }
                    };
                    map.push(base + slot);
                }
            }
            index_to_var.push(map);
        }
        (variables, index_to_var)
    }

    pub fn build(a: &PureState, b: &PureState, groups: &[DirectGroup], tol_match: f64) -> Result<Result<Self, PhaseMismatch>> {
        if a.dims() != b.dims() {
            return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", a.dims(), b.dims())));
        }
        if groups.len() != a.order() || groups.iter().zip(a.dims()).any(|(g, &d)| g.n() != d) {
            return Err(Error::DimensionMismatch("phase groups do not match the state dimensions".into()));
        }
        let (variables, index_to_var) = Self::variables_for(groups);
        let mut sys = PhaseSystem {
            variables,
            index_to_var,
            rows: Vec::new(),
            rhs: Vec::new(),
            weights: Vec::new(),
            positions: Vec::new(),
        };
        let support = SUPPORT_FRACTION * tol_match;
        for (flat, (x, y)) in a.coeffs().iter().zip(b.coeffs()).enumerate() {
            let (mx, my) = (x.norm(), y.norm());
            if (mx - my).abs() > tol_match {
                return Ok(Err(PhaseMismatch::Modulus { position: flat, lhs: mx, rhs: my }));
            }
            if mx.max(my) <= support {
                continue;
            }
            let mut row = vec![0i64; sys.variables.len()];
            for (m0, &j) in a.multi_index(flat).iter().enumerate() {
                row[sys.index_to_var[m0][j]] += 1;
            }
            sys.rows.push(row);
            sys.rhs.push(wrap_angle((y / x).arg()));
            sys.weights.push(mx.min(my));
            sys.positions.push(flat);
        }
        Ok(Ok(sys))
    }

    /// Echelon elimination and back-substitution. Equations are inserted in
    /// order of decreasing weight; a zero row is rejected when its angular
    /// defect times the weight of the equation that closed it exceeds `tol`.
    pub fn solve(&self, tol: f64) -> Result<(Vec<f64>, Vec<usize>), PhaseMismatch> {
        let n = self.variables.len();
        let mut pivots: Vec<Option<(Vec<i64>, f64)>> = vec![None; n];
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_by(|&x, &y| self.weights[y].total_cmp(&self.weights[x]));
        for e in order {
            let mut row = self.rows[e].clone();
            let mut rhs = self.rhs[e];
            let mut start = 0;
            let mut placed = false;
            while let Some(col) = (start..n).find(|&j| row[j] != 0) {
                match pivots[col].take() {
                    None => {
                        pivots[col] = Some((row.clone(), wrap_angle(rhs)));
                        placed = true;
                        break;
                    }
                    Some((mut prow, mut prhs)) => {
                        while row[col] != 0 {
                            let q = prow[col] / row[col];
                            for j in col..n {
                                prow[j] -= q * row[j];
                            }
                            prhs = wrap_angle(prhs - q as f64 * rhs);
                            std::mem::swap(&mut prow, &mut row);
                            std::mem::swap(&mut prhs, &mut rhs);
                        }
                        pivots[col] = Some((prow, prhs));
                        start = col + 1;
                    }
                }
            }
            if !placed {
                let defect = wrap_angle(rhs);
                if defect.abs() * self.weights[e] > tol {
                    return Err(PhaseMismatch::Inconsistent { position: self.positions[e], defect });
                }
            }
        }
        let mut x = vec![0.0; n];
        let mut free = Vec::new();
        for col in (0..n).rev() {
            match &pivots[col] {
                Some((prow, prhs)) => {
                    let tail: f64 = (col + 1..n).map(|j| prow[j] as f64 * x[j]).sum();
                    x[col] = (prhs - tail) / prow[col] as f64;
                }
                None => free.push(col),
            }
        }
        free.reverse();
        Ok((x, free))
    }
}

/// Diagonal phases mapping `a` to `b`, with basis indices constrained by the
/// equality structure of `groups` (one group per mode).
pub fn match_phases_in(
    a: &PureState,
    b: &PureState,
    groups: &[DirectGroup],
    tol_match: f64,
) -> Result<Result<PhaseSolution, PhaseMismatch>> {
    let sys = match PhaseSystem::build(a, b, groups, tol_match)? {
        Ok(sys) => sys,
        Err(mismatch) => return Ok(Err(mismatch)),
    };
    let (x, free) = match sys.solve(tol_match) {
        Ok(sol) => sol,
        Err(mismatch) => return Ok(Err(mismatch)),
    };
    let phases: Vec<Vec<f64>> = sys.index_to_var.iter().map(|map| map.iter().map(|&v| wrap_angle(x[v])).collect()).collect();
    let mut solution = PhaseSolution {
        phases,
        free_variables: free.iter().map(|&v| sys.variables[v]).collect(),
        rank: sys.variables.len() - free.len(),
        equations: sys.rows.len(),
        residual: 0.0,
    };
    let moved = apply_local_ops(a, &solution.diagonal_unitaries());
    solution.residual = moved
        .coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if solution.residual >= tol_match {
        return Ok(Err(PhaseMismatch::Residual { residual: solution.residual }));
    }
    Ok(Ok(solution))
}

/// Unconstrained diagonal phases per basis index. `None` when no phases map
/// `a` onto `b`.
pub fn match_phases(a: &PureState, b: &PureState, tol_match: f64) -> Result<Option<PhaseSolution>> {
    let groups: Vec<DirectGroup> = a
        .dims()
        .iter()
        .map(|&d| DirectGroup::unconstrained(vec![1; d]).expect("positive sizes"))
        .collect();
    Ok(match_phases_in(a, b, &groups, tol_match)?.ok())
}
