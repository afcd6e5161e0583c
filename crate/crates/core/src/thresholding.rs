//! One-shot generalized thresholding of a sample correlation matrix.

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, SymMat};
use crate::penalty::{apply_offdiag_threshold, PenaltySpec};
use crate::scalar::Scalar;

/// Entries with magnitude below this count as zero in sparsity reports.
pub const SPARSITY_CUTOFF: f64 = 1e-5;
const UNIT_DIAG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport<T> {
    pub estimate: SymMat<T>,
    pub min_eig: T,
    pub sparsity_offdiag: f64,
    pub is_pd: bool,
}

/// Fraction of off-diagonal entries with `|value| < 1e-5`. A `1 × 1` matrix
/// has no off-diagonal entries and reports `1.0`.
pub fn sparsity_offdiag<T: Scalar>(m: &SymMat<T>) -> f64 {
    let d = m.dim();
    if d < 2 {
        return 1.0;
    }
    let cutoff = T::of(SPARSITY_CUTOFF);
    let mut zeros = 0usize;
    for i in 0..d {
        for j in (i + 1)..d {
            if m.get(i, j).abs() < cutoff {
                zeros += 1;
            }
        }
    }
    zeros as f64 / (d * (d - 1) / 2) as f64
}

pub(crate) fn check_correlation<T: Scalar>(s: &SymMat<T>) -> Result<()> {
    let tol = T::of(UNIT_DIAG_TOL);
    for (i, v) in s.diag().into_iter().enumerate() {
        if (v - T::one()).abs() > tol {
            return Err(Error::NotCorrelation { index: i, value: v.to_f64_lossy() });
        }
    }
    Ok(())
}

/// Thresholds the off-diagonal entries of `s` and reports its spectrum floor
/// and sparsity. The diagonal of the estimate is exactly one.
pub fn generalized_threshold_estimate<T: Scalar>(
    s: &SymMat<T>,
    spec: &PenaltySpec<T>,
) -> Result<ThresholdReport<T>> {
    check_correlation(s)?;
    let estimate = apply_offdiag_threshold(s, spec)?.with_unit_diagonal();
    let min_eig = min_eigenvalue(&estimate)?;
    Ok(ThresholdReport {
        sparsity_offdiag: sparsity_offdiag(&estimate),
        is_pd: min_eig > T::zero(),
        min_eig,
        estimate,
    })
}
