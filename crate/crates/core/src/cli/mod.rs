//! Command-line front end.
//!
//! Exit codes: 0 Equivalent (or success), 1 Inequivalent, 2 Undecided,
//! 64 bad input (usage, unreadable or malformed files, shape mismatch),
//! 65 numeric failure.

mod report;
mod statefile;

pub use report::{
    coeff_reports, BatchEntry, CoeffReport, HosvdReport, MatrixReport, ReduceReport, Report, SpectrumReport, StackReport,
    StateReport, VerdictReport,
};
pub use statefile::{parse_state, write_state, ParseError, ParseOptions};

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon::sample_group_element_with;
use crate::decide::{compare_detailed, Side};
use crate::error::Error;
use crate::hosvd::{to_hosvd, ClusterOrder};
use crate::linalg::{haar_unitary, random_phases, CMatrix};
use crate::reduce::reduce_state;
use crate::tensor::{apply_local_ops, mode_gram, PureState};
use crate::{Tolerances, DEFAULT_MAX_COEFFS};

pub const EXIT_PARSE: i32 = 64;
pub const EXIT_NUMERIC: i32 = 65;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Numeric(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse { .. } | CliError::Io { .. } => EXIT_PARSE,
            CliError::Numeric(Error::DimensionMismatch(_)) => EXIT_PARSE,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScrambleMode {
    /// Haar-random unitary per mode.
    Haar,
    /// Random diagonal phases per mode.
    PhasesOnly,
    /// HOSVD, then a random element of each local symmetry group.
    BlockRespecting,
}

#[derive(Debug, Parser)]
#[command(name = "luequiv", version, about = "Local-unitary equivalence of multipartite pure states")]
struct Cli {
    /// Relative gap below which eigenvalues are treated as equal.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol_cluster: f64,
    /// Tolerance for matching canonical forms, moduli and witnesses.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_match: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Seed for randomized commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mode Grams, spectra and local symmetry groups.
    Hosvd { file: PathBuf },
    /// Mode stacks, canonical stacks, residual groups and the reduced state.
    Reduce { file: PathBuf },
    /// Decide equivalence of two states, or of every pair in a manifest.
    Compare {
        #[arg(num_args = 2, required_unless_present = "batch", conflicts_with = "batch")]
        files: Vec<PathBuf>,
        /// Manifest with one `fileA fileB` pair per line.
        #[arg(long)]
        batch: Option<PathBuf>,
        /// Worker threads for batch mode.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Haar-random normalized state, e.g. `gen 2,2,2 --seed 42`.
    Gen {
        dims: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply seeded local unitaries and record them in `<out>.witness.json`.
    Scramble {
        file: PathBuf,
        #[command(flatten)]
        mode: ModeFlags,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ModeFlags {
    #[arg(long)]
    haar: bool,
    #[arg(long)]
    phases_only: bool,
    #[arg(long)]
    block_respecting: bool,
}

impl ModeFlags {
    fn mode(&self) -> ScrambleMode {
        if self.haar {
            ScrambleMode::Haar
        } else if self.phases_only {
            ScrambleMode::PhasesOnly
        } else {
            ScrambleMode::BlockRespecting
        }
    }
}

/// Sidecar written next to a scrambled state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScrambleWitness {
    pub mode: ScrambleMode,
    pub seed: u64,
    pub source: String,
    /// `U_m` with `⊗U_m|source⟩ = |out⟩`.
    pub unitaries: Vec<MatrixReport>,
}

pub fn witness_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".witness.json");
    PathBuf::from(s)
}

fn tolerances(tol_cluster: f64, tol_match: f64) -> Tolerances {
    Tolerances { cluster: tol_cluster, matching: tol_match, ..Tolerances::default() }
}

pub fn read_state(path: &Path, tol: &Tolerances) -> Result<PureState, CliError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: shown.clone(), source })?;
    let opts = ParseOptions { tol_norm: tol.norm, max_coeffs: DEFAULT_MAX_COEFFS };
    let state = parse_state(&text, &opts).map_err(|source| CliError::Parse { path: shown.clone(), source })?;
    Ok(state.with_label(shown))
}

fn state_report(state: &PureState, hosvd: &crate::hosvd::HosvdResult) -> StateReport {
    StateReport {
        source: state.label().unwrap_or("-").to_string(),
        dims: state.dims().to_vec(),
        grams: (1..=state.order()).map(|m| MatrixReport::from(&mode_gram(state, m).expect("mode in range"))).collect(),
        hosvd: hosvd.into(),
        reduce: None,
    }
}

/// HOSVD report; clusters keep the order of the input's diagonal.
pub fn cmd_hosvd(state: &PureState, tol: &Tolerances) -> Result<Report, Error> {
    let h = to_hosvd(state, tol, ClusterOrder::PreserveInput)?;
    let mut report = Report::new("hosvd", *tol, None);
    report.states.push(state_report(state, &h));
    Ok(report)
}

pub fn cmd_reduce(state: &PureState, tol: &Tolerances) -> Result<Report, Error> {
    let h = to_hosvd(state, tol, ClusterOrder::PreserveInput)?;
    let r = reduce_state(&h, tol.cluster)?;
    let mut report = Report::new("reduce", *tol, None);
    let mut sr = state_report(state, &h);
    sr.reduce = Some((&r).into());
    report.states.push(sr);
    Ok(report)
}

pub fn cmd_compare(psi: &PureState, phi: &PureState, tol: &Tolerances) -> Result<Report, Error> {
    let c = compare_detailed(psi, phi, tol)?;
    let mut report = Report::new("compare", *tol, None);
    for (state, side) in [(psi, &c.psi), (phi, &c.phi)] {
        report.states.push(side_report(state, side));
    }
    report.verdict = Some((&c.verdict).into());
    Ok(report)
}

fn side_report(state: &PureState, side: &Side) -> StateReport {
    let mut sr = state_report(state, &side.hosvd);
    sr.reduce = side.reduced.as_ref().map(Into::into);
    sr
}

/// Complex Gaussian vector, normalized: a Haar-random pure state.
pub fn cmd_gen(dims: &[usize], seed: u64) -> Result<PureState, Error> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidDims { dims: dims.to_vec() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: usize = dims.iter().product();
    let mut v: Vec<Complex64> =
        (0..total).map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= n);
    PureState::new(dims.to_vec(), v)
}

pub fn cmd_scramble(state: &PureState, seed: u64, mode: ScrambleMode, tol: &Tolerances) -> Result<(PureState, Vec<CMatrix>), Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let us: Vec<CMatrix> = match mode {
        ScrambleMode::Haar => state.dims().iter().map(|&d| haar_unitary(d, &mut rng)).collect(),
        ScrambleMode::PhasesOnly => state.dims().iter().map(|&d| random_phases(d, &mut rng)).collect(),
        ScrambleMode::BlockRespecting => {
            let h = to_hosvd(state, tol, ClusterOrder::PreserveInput)?;
            h.symmetry.iter().zip(&h.transforms).map(|(g, v)| sample_group_element_with(g, &mut rng) * v).collect()
        }
    };
    Ok((apply_local_ops(state, &us), us))
}

pub fn parse_dims(text: &str) -> Result<Vec<usize>, CliError> {
    let dims: Vec<usize> = text
        .split(|c: char| c == ',' || c == 'x' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().ok().filter(|&d| d > 0))
        .collect::<Option<_>>()
        .ok_or_else(|| CliError::Usage(format!("invalid dims `{text}`")))?;
    if dims.is_empty() {
        return Err(CliError::Usage("dims must not be empty".into()));
    }
    Ok(dims)
}

/// `(fileA, fileB)` per non-comment line, relative to the manifest directory.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<(PathBuf, PathBuf)>, ParseError> {
    let mut pairs = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let [a, b] = tokens[..] else {
            return Err(ParseError { line: Some(n + 1), message: format!("expected 2 paths, found {}", tokens.len()) });
        };
        pairs.push((base.join(a), base.join(b)));
    }
    Ok(pairs)
}

fn batch_entry(a: &Path, b: &Path, tol: &Tolerances) -> BatchEntry {
    let outcome = (|| -> Result<_, CliError> {
        let psi = read_state(a, tol)?;
        let phi = read_state(b, tol)?;
        Ok(compare_detailed(&psi, &phi, tol)?.verdict)
    })();
    let (verdict, error) = match outcome {
        Ok(v) => (Some((&v).into()), None),
        Err(e) => (None, Some(e.to_string())),
    };
    BatchEntry { a: a.display().to_string(), b: b.display().to_string(), verdict, error }
}

fn emit(out: &mut dyn Write, report: &Report, format: Format) -> Result<(), CliError> {
    let text = match format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json() + "\n",
    };
    out.write_all(text.as_bytes()).map_err(|source| CliError::Io { path: "<stdout>".into(), source })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let tol = tolerances(cli.tol_cluster, cli.tol_match);
    let need_seed = || cli.seed.ok_or_else(|| CliError::Usage("--seed is required for this command".into()));
    match &cli.command {
        Command::Hosvd { file } => {
            let state = read_state(file, &tol)?;
            emit(out, &cmd_hosvd(&state, &tol)?, cli.format)?;
            Ok(0)
        }
        Command::Reduce { file } => {
            let state = read_state(file, &tol)?;
            emit(out, &cmd_reduce(&state, &tol)?, cli.format)?;
            Ok(0)
        }
        Command::Compare { files, batch: None, .. } => {
            let psi = read_state(&files[0], &tol)?;
            let phi = read_state(&files[1], &tol)?;
            let report = cmd_compare(&psi, &phi, &tol)?;
            emit(out, &report, cli.format)?;
            Ok(report.verdict.as_ref().map_or(EXIT_NUMERIC, |v| v.kind.exit_code()))
        }
        Command::Compare { batch: Some(manifest), jobs, .. } => {
            let text = std::fs::read_to_string(manifest)
                .map_err(|source| CliError::Io { path: manifest.display().to_string(), source })?;
            let base = manifest.parent().unwrap_or(Path::new("."));
            let pairs = parse_manifest(&text, base)
                .map_err(|source| CliError::Parse { path: manifest.display().to_string(), source })?;
            let threads = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1);
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
            let entries: Vec<BatchEntry> = pool.install(|| pairs.par_iter().map(|(a, b)| batch_entry(a, b, &tol)).collect());
            let mut report = Report::new("compare --batch", tol, None);
            report.batch = Some(entries);
            emit(out, &report, cli.format)?;
            Ok(0)
        }
        Command::Gen { dims, out: path } => {
            let seed = need_seed()?;
            let dims = parse_dims(dims)?;
            let state = cmd_gen(&dims, seed)?;
            let dims_text: Vec<String> = dims.iter().map(ToString::to_string).collect();
            let text = write_state(&state, &[format!("haar-random state, dims {}, seed {seed}", dims_text.join("x"))]);
            match path {
                Some(p) => write_file(p, &text)?,
                None => out.write_all(text.as_bytes()).map_err(|source| CliError::Io { path: "<stdout>".into(), source })?,
            }
            Ok(0)
        }
        Command::Scramble { file, mode, out: path } => {
            let seed = need_seed()?;
            let mode = mode.mode();
            let state = read_state(file, &tol)?;
            let (scrambled, us) = cmd_scramble(&state, seed, mode, &tol)?;
            let source = file.display().to_string();
            write_file(path, &write_state(&scrambled, &[format!("{source} scrambled ({mode:?}), seed {seed}")]))?;
            let witness = ScrambleWitness { mode, seed, source, unitaries: us.iter().map(MatrixReport::from).collect() };
            let json = serde_json::to_string_pretty(&witness).expect("witness serializes");
            write_file(&witness_path(path), &(json + "\n"))?;
            Ok(0)
        }
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { out.write_all(rendered.as_bytes()) } else { err.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let format = cli.format;
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let code = e.exit_code();
            if format == Format::Json {
                let body = serde_json::json!({ "error": e.to_string(), "exit_code": code });
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&body).expect("json"));
            }
            let _ = writeln!(err, "error: {e}");
            code
        }
    }
}
