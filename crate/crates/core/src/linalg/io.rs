//! Plain-text matrix format.
//!
//! Square symmetric matrices: the first line holds `d`, followed by `d` lines of
//! `d` whitespace-separated decimals. Rectangular matrices use a first line of
//! `rows cols`. Values are written with the shortest representation that
//! round-trips, so a write/read cycle is lossless.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{Dense, SymMat};
use crate::scalar::Scalar;

const SYMMETRY_TOL: f64 = 1e-9;

fn parse_value<T: Scalar>(tok: &str, line: usize) -> Result<T> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::Parse { line, msg: format!("invalid number {tok:?}") })?;
    T::from_f64(v).ok_or_else(|| Error::Parse { line, msg: format!("{tok:?} out of range") })
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_body<T: Scalar>(
    lines: &mut dyn Iterator<Item = (usize, &str)>,
    rows: usize,
    cols: usize,
) -> Result<Vec<T>> {
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let (ln, l) = lines.next().ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("expected {rows} rows, found {r}"),
        })?;
        let before = data.len();
        for tok in l.split_whitespace() {
            data.push(parse_value::<T>(tok, ln)?);
        }
        if data.len() - before != cols {
            return Err(Error::Parse {
                line: ln,
                msg: format!("expected {cols} values, found {}", data.len() - before),
            });
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::Parse { line: ln, msg: "trailing content".into() });
    }
    Ok(data)
}

fn parse_dim(tok: Option<&str>, line: usize) -> Result<usize> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse { line, msg: "expected a positive integer dimension".into() })
}

/// Parses a symmetric matrix, rejecting asymmetry above `1e-9` and then
/// symmetrizing.
pub fn parse_sym_matrix<T: Scalar>(text: &str) -> Result<SymMat<T>> {
    let mut lines = content_lines(text);
    let (ln, header) =
        lines.next().ok_or_else(|| Error::Parse { line: 1, msg: "empty input".into() })?;
    let mut toks = header.split_whitespace();
    let d = parse_dim(toks.next(), ln)?;
    if toks.next().is_some() {
        return Err(Error::Parse { line: ln, msg: "header must hold a single dimension".into() });
    }
    let data = parse_body::<T>(&mut lines, d, d)?;
    let tol = T::of(SYMMETRY_TOL);
    for i in 0..d {
        for j in (i + 1)..d {
            let gap = (data[i * d + j] - data[j * d + i]).abs();
            if gap > tol {
                return Err(Error::NotSymmetric { row: i, col: j, gap: gap.to_f64_lossy() });
            }
        }
    }
    SymMat::new(d, data)
}

pub fn format_sym_matrix<T: Scalar>(m: &SymMat<T>) -> String {
    let d = m.dim();
    let mut out = format!("{d}\n");
    for i in 0..d {
        push_row(&mut out, m.row(i));
    }
    out
}

/// Parses a rectangular matrix with a `rows cols` header.
pub fn parse_dense_matrix<T: Scalar>(text: &str) -> Result<Dense<T>> {
    let mut lines = content_lines(text);
    let (ln, header) =
        lines.next().ok_or_else(|| Error::Parse { line: 1, msg: "empty input".into() })?;
    let mut toks = header.split_whitespace();
    let rows = parse_dim(toks.next(), ln)?;
    let cols = parse_dim(toks.next(), ln)?;
    let data = parse_body::<T>(&mut lines, rows, cols)?;
    Dense::new(rows, cols, data)
}

pub fn format_dense_matrix<T: Scalar>(m: &Dense<T>) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        push_row(&mut out, m.row(i));
    }
    out
}

fn push_row<T: Scalar>(out: &mut String, row: &[T]) {
    for (j, v) in row.iter().enumerate() {
        if j > 0 {
            out.push(' ');
        }
        write!(out, "{v}").expect("write to String");
    }
    out.push('\n');
}

pub fn read_sym_matrix<T: Scalar>(path: impl AsRef<Path>) -> Result<SymMat<T>> {
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    parse_sym_matrix(&text)
}

pub fn write_sym_matrix<T: Scalar>(path: impl AsRef<Path>, m: &SymMat<T>) -> Result<()> {
    std::fs::write(&path, format_sym_matrix(m)).map_err(|e| Error::io(&path, e))
}

pub fn read_dense_matrix<T: Scalar>(path: impl AsRef<Path>) -> Result<Dense<T>> {
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    parse_dense_matrix(&text)
}

pub fn write_dense_matrix<T: Scalar>(path: impl AsRef<Path>, m: &Dense<T>) -> Result<()> {
    std::fs::write(&path, format_dense_matrix(m)).map_err(|e| Error::io(&path, e))
}
