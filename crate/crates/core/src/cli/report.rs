//! Structured command output with a JSON tree and a plain-text rendering.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::canon::{CanonicalReduction, GroupSummary};
use crate::decide::{Reason, Verdict, VerdictKind};
use crate::hosvd::{HosvdResult, ModeSpectrum};
use crate::linalg::CMatrix;
use crate::reduce::{ModeStack, ReducedForm};
use crate::tensor::PureState;
use crate::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixReport {
    pub rows: usize,
    pub cols: usize,
    /// Row-major real parts.
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&CMatrix> for MatrixReport {
    fn from(m: &CMatrix) -> Self {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                re.push(m[(r, c)].re);
                im.push(m[(r, c)].im);
            }
        }
        Self { rows, cols, re, im }
    }
}

impl MatrixReport {
    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.rows, self.cols, |r, c| {
            let k = r * self.cols + c;
            Complex64::new(self.re[k], self.im[k])
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub mode: usize,
    pub values: Vec<f64>,
    pub multiplicities: Vec<usize>,
}

impl From<&ModeSpectrum> for SpectrumReport {
    fn from(s: &ModeSpectrum) -> Self {
        Self { mode: s.mode, values: s.values.clone(), multiplicities: s.multiplicities.clone() }
    }
}

/// One nonzero coefficient with its 1-based multi-index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffReport {
    pub index: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

pub fn coeff_reports(state: &PureState) -> Vec<CoeffReport> {
    state
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, z)| z.re != 0.0 || z.im != 0.0)
        .map(|(flat, z)| CoeffReport {
            index: state.multi_index(flat).iter().map(|j| j + 1).collect(),
            re: z.re,
            im: z.im,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackReport {
    pub mode: usize,
    /// `(i, k)` per block, 1-based.
    pub labels: Vec<(usize, usize)>,
    pub blocks: Vec<MatrixReport>,
}

impl StackReport {
    fn from_stack(stack: &ModeStack) -> Self {
        Self { mode: stack.mode, labels: stack.labels.clone(), blocks: stack.blocks.iter().map(MatrixReport::from).collect() }
    }

    fn from_canonical(stack: &ModeStack, red: &CanonicalReduction) -> Self {
        Self {
            mode: stack.mode,
            labels: stack.labels.clone(),
            blocks: red.canonical.matrices().iter().map(MatrixReport::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HosvdReport {
    pub already_hosvd: bool,
    pub spectra: Vec<SpectrumReport>,
    pub symmetry: Vec<GroupSummary>,
    /// `V_m` taking the input to HOSVD form.
    pub transforms: Vec<MatrixReport>,
}

impl From<&HosvdResult> for HosvdReport {
    fn from(h: &HosvdResult) -> Self {
        Self {
            already_hosvd: h.already_hosvd,
            spectra: h.spectra.iter().map(SpectrumReport::from).collect(),
            symmetry: h.symmetry.iter().map(GroupSummary::from).collect(),
            transforms: h.transforms.iter().map(MatrixReport::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReduceReport {
    pub stacks: Vec<StackReport>,
    pub canonical_stacks: Vec<StackReport>,
    pub transforms: Vec<MatrixReport>,
    pub residual: Vec<GroupSummary>,
    /// Free phase angles when every residual block is 1×1.
    pub residual_phases: Option<usize>,
    pub reduced_state: Vec<CoeffReport>,
    pub warnings: Vec<String>,
}

impl From<&ReducedForm> for ReduceReport {
    fn from(r: &ReducedForm) -> Self {
        Self {
            stacks: r.stacks.iter().map(StackReport::from_stack).collect(),
            canonical_stacks: r.stacks.iter().zip(&r.reductions).map(|(s, red)| StackReport::from_canonical(s, red)).collect(),
            transforms: r.transforms.iter().map(MatrixReport::from).collect(),
            residual: r.residual.iter().map(GroupSummary::from).collect(),
            residual_phases: r.is_diagonal().then(|| r.residual.iter().map(|g| g.num_classes()).sum()),
            reduced_state: coeff_reports(&r.state),
            warnings: r.warnings(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateReport {
    pub source: String,
    pub dims: Vec<usize>,
    /// Mode Grams of the input state.
    pub grams: Vec<MatrixReport>,
    pub hosvd: HosvdReport,
    pub reduce: Option<ReduceReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub kind: VerdictKind,
    pub reason: Option<String>,
    pub reason_detail: Option<Reason>,
    pub witness: Option<Vec<MatrixReport>>,
    pub witness_residual: Option<f64>,
    pub residual_report: Option<Vec<GroupSummary>>,
}

impl From<&Verdict> for VerdictReport {
    fn from(v: &Verdict) -> Self {
        Self {
            kind: v.kind,
            reason: v.reason.as_ref().map(ToString::to_string),
            reason_detail: v.reason.clone(),
            witness: v.witness.as_ref().map(|w| w.iter().map(MatrixReport::from).collect()),
            witness_residual: v.witness_residual,
            residual_report: v.residual_report.as_ref().map(|gs| gs.iter().map(GroupSummary::from).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchEntry {
    pub a: String,
    pub b: String,
    pub verdict: Option<VerdictReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub tolerances: Tolerances,
    pub seed: Option<u64>,
    pub states: Vec<StateReport>,
    pub verdict: Option<VerdictReport>,
    pub batch: Option<Vec<BatchEntry>>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(command: &str, tolerances: Tolerances, seed: Option<u64>) -> Self {
        Self { command: command.into(), tolerances, seed, states: Vec::new(), verdict: None, batch: None, warnings: Vec::new() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let t = &self.tolerances;
        let _ = writeln!(out, "command: {}", self.command);
        let _ = writeln!(
            out,
            "tolerances: norm {:e}, unitary {:e}, cluster {:e}, diag {:e}, match {:e}",
            t.norm, t.unitary, t.cluster, t.diag, t.matching
        );
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed: {seed}");
        }
        for s in &self.states {
            render_state(&mut out, s);
        }
        if let Some(v) = &self.verdict {
            render_verdict(&mut out, v, "");
        }
        if let Some(entries) = &self.batch {
            let _ = writeln!(out, "\nbatch ({} pairs)", entries.len());
            for (n, e) in entries.iter().enumerate() {
                let _ = writeln!(out, "[{}] {} vs {}", n + 1, e.a, e.b);
                if let Some(v) = &e.verdict {
                    render_verdict(&mut out, v, "  ");
                }
                if let Some(err) = &e.error {
                    let _ = writeln!(out, "  error: {err}");
                }
            }
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.15e}")
}

fn render_matrix(out: &mut String, m: &MatrixReport, indent: &str) {
    let real = m.im.iter().all(|&x| x == 0.0);
    for r in 0..m.rows {
        let cells: Vec<String> = (0..m.cols)
            .map(|c| {
                let k = r * m.cols + c;
                if real {
                    format!("{:>23}", fmt_f64(m.re[k]))
                } else {
                    format!("{:>23}{:+.15e}i", fmt_f64(m.re[k]), m.im[k])
                }
            })
            .collect();
        let _ = writeln!(out, "{indent}[{} ]", cells.join(" "));
    }
}

fn render_group(g: &GroupSummary) -> String {
    let mut s = format!("blocks {:?} classes {:?}", g.block_sizes, g.equality_classes);
    if let Some(p) = g.free_phases {
        let _ = write!(s, " ({p} free phases)");
    }
    s
}

fn render_stacks(out: &mut String, title: &str, stacks: &[StackReport]) {
    for st in stacks {
        let _ = writeln!(out, "  {title} mode {}:", st.mode);
        for ((i, k), b) in st.labels.iter().zip(&st.blocks) {
            let _ = writeln!(out, "    (i={i}, k={k})");
            render_matrix(out, b, "      ");
        }
    }
}

fn render_state(out: &mut String, s: &StateReport) {
    let _ = writeln!(out, "\nstate {} dims {:?}", s.source, s.dims);
    let _ = writeln!(out, "  already HOSVD: {}", if s.hosvd.already_hosvd { "yes" } else { "no" });
    for (m, g) in s.grams.iter().enumerate() {
        let _ = writeln!(out, "  mode {} Gram:", m + 1);
        render_matrix(out, g, "    ");
    }
    for sp in &s.hosvd.spectra {
        let parts: Vec<String> = sp.values.iter().zip(&sp.multiplicities).map(|(v, mu)| format!("{} x{mu}", fmt_f64(*v))).collect();
        let _ = writeln!(out, "  mode {} spectrum: {}", sp.mode, parts.join(", "));
    }
    for (m, g) in s.hosvd.symmetry.iter().enumerate() {
        let _ = writeln!(out, "  S^({}) {}", m + 1, render_group(g));
    }
    if !s.hosvd.already_hosvd {
        for (m, v) in s.hosvd.transforms.iter().enumerate() {
            let _ = writeln!(out, "  HOSVD transform mode {}:", m + 1);
            render_matrix(out, v, "    ");
        }
    }
    let Some(r) = &s.reduce else { return };
    render_stacks(out, "stack", &r.stacks);
    render_stacks(out, "canonical stack", &r.canonical_stacks);
    for (m, u) in r.transforms.iter().enumerate() {
        let _ = writeln!(out, "  reduce transform mode {}:", m + 1);
        render_matrix(out, u, "    ");
    }
    for (m, g) in r.residual.iter().enumerate() {
        let _ = writeln!(out, "  residual H~_{} {}", m + 1, render_group(g));
    }
    match r.residual_phases {
        Some(n) => {
            let _ = writeln!(out, "  residual phases: {n}");
        }
        None => {
            let _ = writeln!(out, "  residual phases: not a torus");
        }
    }
    let _ = writeln!(out, "  reduced state:");
    for c in &r.reduced_state {
        let idx: Vec<String> = c.index.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "    {} {} {}", idx.join(" "), fmt_f64(c.re), fmt_f64(c.im));
    }
    for w in &r.warnings {
        let _ = writeln!(out, "  warning: {w}");
    }
}

fn render_verdict(out: &mut String, v: &VerdictReport, indent: &str) {
    let _ = writeln!(out, "{indent}verdict: {}", v.kind);
    if let Some(reason) = &v.reason {
        let _ = writeln!(out, "{indent}reason: {reason}");
    }
    if let Some(r) = v.witness_residual {
        let _ = writeln!(out, "{indent}witness residual: {}", fmt_f64(r));
    }
    if let Some(w) = &v.witness {
        for (m, u) in w.iter().enumerate() {
            let _ = writeln!(out, "{indent}witness U_{}:", m + 1);
            render_matrix(out, u, &format!("{indent}  "));
        }
    }
    if let Some(groups) = &v.residual_report {
        for (m, g) in groups.iter().enumerate() {
            let _ = writeln!(out, "{indent}residual H~_{} {}", m + 1, render_group(g));
        }
    }
}
