//! Plain-text state files.
//!
//! ```text
//! # comment
//! dims: 2 3 3
//! 1 1 1  0.408248290463863  0
//! 1 2 3  0.5                0
//! ```
//!
//! The `dims:` header is the first non-comment line. Every other line holds
//! one 1-based multi-index followed by the real and imaginary part of its
//! coefficient. Unlisted coefficients are zero. Text after `#` is ignored.

use std::fmt::Write as _;

use num_complex::Complex64;
use thiserror::Error;

use crate::tensor::PureState;
use crate::DEFAULT_MAX_COEFFS;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ParseError {
    /// 1-based line number, when the problem is tied to one line.
    pub line: Option<usize>,
    pub message: String,
}

impl ParseError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParseOptions {
    pub tol_norm: f64,
    pub max_coeffs: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self { tol_norm: 1e-10, max_coeffs: DEFAULT_MAX_COEFFS }
    }
}

pub fn parse_state(text: &str, opts: &ParseOptions) -> Result<PureState, ParseError> {
    let mut dims: Option<Vec<usize>> = None;
    let mut coeffs: Vec<Complex64> = Vec::new();
    let mut seen: Vec<Option<usize>> = Vec::new();
    let mut strides: Vec<usize> = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some(dims) = &dims else {
            let rest = content
                .strip_prefix("dims:")
                .ok_or_else(|| ParseError::at(line_no, "expected `dims:` header before any coefficient"))?;
            let parsed: Vec<usize> = rest
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| ParseError::at(line_no, format!("invalid dimension `{t}`"))))
                .collect::<Result<_, _>>()?;
            if parsed.is_empty() || parsed.contains(&0) {
                return Err(ParseError::at(line_no, "dimensions must be a non-empty list of positive integers"));
            }
            let total = parsed
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .filter(|&t| t <= opts.max_coeffs)
                .ok_or_else(|| ParseError::at(line_no, format!("more than {} coefficients", opts.max_coeffs)))?;
            coeffs = vec![Complex64::new(0.0, 0.0); total];
            seen = vec![None; total];
            strides = vec![1; parsed.len()];
            for m in (0..parsed.len().saturating_sub(1)).rev() {
                strides[m] = strides[m + 1] * parsed[m + 1];
            }
            dims = Some(parsed);
            continue;
        };
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let order = dims.len();
        if tokens.len() != order + 2 {
            return Err(ParseError::at(
                line_no,
                format!("expected {order} indices and 2 numbers, found {} tokens", tokens.len()),
            ));
        }
        let mut flat = 0;
        for (m, t) in tokens[..order].iter().enumerate() {
            let j: usize = t.parse().map_err(|_| ParseError::at(line_no, format!("invalid index `{t}`")))?;
            if j == 0 || j > dims[m] {
                return Err(ParseError::at(line_no, format!("index {j} of mode {} outside 1..={}", m + 1, dims[m])));
            }
            flat += (j - 1) * strides[m];
        }
        let number = |t: &str| -> Result<f64, ParseError> {
            let v: f64 = t.parse().map_err(|_| ParseError::at(line_no, format!("invalid number `{t}`")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(ParseError::at(line_no, format!("non-finite number `{t}`")))
            }
        };
        let z = Complex64::new(number(tokens[order])?, number(tokens[order + 1])?);
        if let Some(first) = seen[flat] {
            return Err(ParseError::at(line_no, format!("duplicate multi-index (first given on line {first})")));
        }
        seen[flat] = Some(line_no);
        coeffs[flat] = z;
    }

    let dims = dims.ok_or(ParseError { line: None, message: "missing `dims:` header".into() })?;
    PureState::with_norm_tol(dims, coeffs, opts.tol_norm).map_err(|e| ParseError { line: None, message: e.to_string() })
}

/// Serialize nonzero coefficients with shortest round-trip formatting.
pub fn write_state(state: &PureState, header: &[String]) -> String {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    let dims: Vec<String> = state.dims().iter().map(ToString::to_string).collect();
    let _ = writeln!(out, "dims: {}", dims.join(" "));
    for (flat, z) in state.coeffs().iter().enumerate() {
        if z.re == 0.0 && z.im == 0.0 {
            continue;
        }
        let idx: Vec<String> = state.multi_index(flat).iter().map(|j| (j + 1).to_string()).collect();
        let _ = writeln!(out, "{} {:e} {:e}", idx.join(" "), z.re, z.im);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<PureState, ParseError> {
        parse_state(text, &ParseOptions::default())
    }

    #[test]
    fn parses_comments_and_sparse_body() {
        let s = parse("# bell pair\n\ndims: 2 2\n1 1 0.6 0 # first\n2 2 0 -0.8\n").unwrap();
        assert_eq!(s.dims(), &[2, 2]);
        assert_eq!(s.coeffs()[3], Complex64::new(0.0, -0.8));
        assert_eq!(s.coeffs()[1], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("1 1 1 0\n", Some(1)),
            ("dims: 2 0\n", Some(1)),
            ("dims: 2 2\n1 3 1 0\n", Some(2)),
            ("dims: 2 2\n1 1 1\n", Some(2)),
            ("dims: 2 2\n1 1 1 0\n1 1 0 1\n", Some(3)),
            ("#x\ndims: 2\n1 nan 0\n", Some(3)),
            ("dims: 2 2\n1 1 0.5 0\n", None),
            ("# nothing\n", None),
        ];
        for (text, line) in cases {
            let err = parse(text).unwrap_err();
            assert_eq!(err.line, line, "{text:?}: {err}");
        }
        assert_eq!(parse("dims: 2 2\n1 3 1 0\n").unwrap_err().to_string(), "line 2: index 3 of mode 2 outside 1..=2");
    }

    #[test]
    fn coefficient_cap() {
        let opts = ParseOptions { max_coeffs: 7, ..ParseOptions::default() };
        assert!(parse_state("dims: 2 2 2\n", &opts).is_err());
    }

    #[test]
    fn write_then_parse_is_bitwise_identical() {
        let c = [Complex64::new(0.6, -1e-17), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(-0.48, 0.64)];
        let s = PureState::new(vec![2, 2], c.to_vec()).unwrap();
        let text = write_state(&s, &["round trip".into()]);
        assert!(text.starts_with("# round trip\ndims: 2 2\n"));
        assert_eq!(parse(&text).unwrap().coeffs(), s.coeffs());
    }
}
