//! Observation tables and sample covariance / correlation.

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{Dense, SymMat};
use crate::scalar::Scalar;

/// `n × d` observations, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet<T> {
    rows: Dense<T>,
}

impl<T: Scalar> SampleSet<T> {
    pub fn new(rows: Dense<T>) -> Result<Self> {
        if rows.rows() < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: rows.rows() });
        }
        if rows.cols() == 0 {
            return Err(Error::BadDim("observations must have at least one column".into()));
        }
        Ok(SampleSet { rows })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::new(Dense::from_rows(rows)?)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.rows.rows()
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.rows.cols()
    }

    pub fn data(&self) -> &Dense<T> {
        &self.rows
    }

    pub fn observation(&self, t: usize) -> &[T] {
        self.rows.row(t)
    }

    /// Subset of observations in the given order.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let d = self.d();
        let mut data = Vec::with_capacity(idx.len() * d);
        for &t in idx {
            data.extend_from_slice(self.observation(t));
        }
        Self::new(Dense::new(idx.len(), d, data)?)
    }

    /// Parses comma- or whitespace-separated rows without a header.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    let v: f64 = t.parse().map_err(|_| Error::Parse {
                        line: ln + 1,
                        msg: format!("invalid number {t:?}"),
                    })?;
                    T::from_f64(v).ok_or_else(|| Error::Parse { line: ln + 1, msg: "out of range".into() })
                })
                .collect::<Result<Vec<T>>>()?;
            if let Some(first) = rows.first().map(Vec::len) {
                if row.len() != first {
                    return Err(Error::Parse {
                        line: ln + 1,
                        msg: format!("expected {first} columns, found {}", row.len()),
                    });
                }
            }
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Self::parse(&text)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for t in 0..self.n() {
            let line: Vec<String> = self.observation(t).iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(&path, self.to_csv()).map_err(|e| Error::io(&path, e))
    }
}

/// `R = (1/n) Σ (x_t − x̄)(x_t − x̄)ᵀ`, or uncentered `(1/n) Σ x_t x_tᵀ`.
pub fn sample_cov<T: Scalar>(s: &SampleSet<T>, center: bool) -> SymMat<T> {
    let (n, d) = (s.n(), s.d());
    let nt = T::from_usize(n).expect("sample count fits scalar");
    let mut mean = vec![T::zero(); d];
    if center {
        for t in 0..n {
            for (m, &x) in mean.iter_mut().zip(s.observation(t)) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= nt;
        }
    }
    let mut acc = vec![T::zero(); d * d];
    let mut centered = vec![T::zero(); d];
    for t in 0..n {
        for ((c, &x), &m) in centered.iter_mut().zip(s.observation(t)).zip(&mean) {
            *c = x - m;
        }
        for i in 0..d {
            let ci = centered[i];
            let row = &mut acc[i * d..(i + 1) * d];
            for j in i..d {
                row[j] += ci * centered[j];
            }
        }
    }
    SymMat::from_upper(d, |i, j| acc[i * d + j] / nt)
}

/// `S_ij = R_ij / √(R_ii R_jj)` with the diagonal set to exactly one.
pub fn cov_to_corr<T: Scalar>(r: &SymMat<T>) -> Result<SymMat<T>> {
    let sd = std_devs(r)?;
    Ok(SymMat::from_upper(r.dim(), |i, j| if i == j { T::one() } else { r.get(i, j) / (sd[i] * sd[j]) }))
}

/// `Σ̂ = diag(R)^{1/2} Θ̂ diag(R)^{1/2}`.
pub fn corr_to_cov<T: Scalar>(theta_hat: &SymMat<T>, r: &SymMat<T>) -> Result<SymMat<T>> {
    theta_hat.check_same_dim(r)?;
    let sd = std_devs(r)?;
    Ok(SymMat::from_upper(r.dim(), |i, j| {
        if i == j {
            theta_hat.get(i, i) * r.get(i, i)
        } else {
            sd[i] * theta_hat.get(i, j) * sd[j]
        }
    }))
}

fn std_devs<T: Scalar>(r: &SymMat<T>) -> Result<Vec<T>> {
    r.diag()
        .into_iter()
        .enumerate()
        .map(|(i, v)| if v > T::zero() { Ok(v.sqrt()) } else { Err(Error::ZeroVariance { index: i }) })
        .collect()
}
