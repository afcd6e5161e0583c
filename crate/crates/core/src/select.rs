//! Penalty-level selection by repeated K-fold cross-validation.
//!
//! Each repeat permutes the samples, splits them into contiguous folds and
//! scores every `λ` by `‖Θ̂_λ(train) − S(validation)‖²_F`, where both sides are
//! sample correlations. The smallest mean loss wins; exact ties go to the
//! larger (sparser) `λ`.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::{solve_correlation, AdmConfig};
use crate::error::{Error, Result};
use crate::linalg::SymMat;
use crate::penalty::{Family, PenaltySpec};
use crate::scalar::Scalar;
use crate::stats::{cov_to_corr, sample_cov, SampleSet};
use crate::thresholding::generalized_threshold_estimate;

pub const DEFAULT_FOLDS: usize = 5;
/// Grid value used when `S` has no off-diagonal mass to threshold.
pub const DEGENERATE_LAMBDA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Eigenvalue-constrained alternating direction solver.
    #[default]
    Adm,
    /// Plain elementwise thresholding, no spectral constraint.
    Threshold,
}

/// An estimator whose penalty level is chosen at fit time.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimator<T> {
    pub name: String,
    pub spec: PenaltySpec<T>,
    pub solver: Solver,
    pub adm: AdmConfig<T>,
}

/// Output of a single fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit<T> {
    pub estimate: SymMat<T>,
    pub min_eig: T,
    pub sparsity_offdiag: f64,
    pub iters: usize,
    pub converged: bool,
}

impl<T: Scalar> Estimator<T> {
    pub fn adm(name: impl Into<String>, spec: PenaltySpec<T>, adm: AdmConfig<T>) -> Self {
        Estimator { name: name.into(), spec, solver: Solver::Adm, adm }
    }

    pub fn threshold(name: impl Into<String>, spec: PenaltySpec<T>) -> Self {
        Estimator { name: name.into(), spec, solver: Solver::Threshold, adm: AdmConfig::default() }
    }

    /// Fits the correlation estimate at `lambda`. `init` only matters for the
    /// ADM solver; see [`solve_correlation`].
    pub fn fit(&self, s: &SymMat<T>, lambda: T, init: Option<&SymMat<T>>) -> Result<Fit<T>> {
        let spec = self.spec.with_lambda(lambda)?;
        match self.solver {
            Solver::Adm => {
                let rep = solve_correlation(s, &spec, &self.adm, init)?;
                Ok(Fit {
                    estimate: rep.theta_hat,
                    min_eig: rep.min_eig,
                    sparsity_offdiag: rep.sparsity_offdiag,
                    iters: rep.iters,
                    converged: rep.converged,
                })
            }
            Solver::Threshold => {
                let rep = generalized_threshold_estimate(s, &spec)?;
                Ok(Fit {
                    estimate: rep.estimate,
                    min_eig: rep.min_eig,
                    sparsity_offdiag: rep.sparsity_offdiag,
                    iters: 0,
                    converged: true,
                })
            }
        }
    }
}

/// Memoized soft-penalty ADM fits on one matrix. Nonconvex ADM estimators
/// with the same solver settings use them as warm starts.
pub struct SoftCache<'a, T> {
    s: &'a SymMat<T>,
    entries: Vec<(AdmConfig<T>, T, Fit<T>)>,
}

impl<'a, T: Scalar> SoftCache<'a, T> {
    pub fn new(s: &'a SymMat<T>) -> Self {
        SoftCache { s, entries: Vec::new() }
    }

    fn soft(&mut self, cfg: &AdmConfig<T>, lambda: T) -> Result<&Fit<T>> {
        let pos = match self.entries.iter().position(|(c, l, _)| c == cfg && *l == lambda) {
            Some(p) => p,
            None => {
                let est = Estimator::adm("soft", PenaltySpec::soft(lambda)?, *cfg);
                let fit = est.fit(self.s, lambda, None)?;
                self.entries.push((*cfg, lambda, fit));
                self.entries.len() - 1
            }
        };
        Ok(&self.entries[pos].2)
    }

    /// Same result as `est.fit(s, lambda, None)`, reusing soft solves.
    pub fn fit(&mut self, est: &Estimator<T>, lambda: T) -> Result<Fit<T>> {
        if est.solver != Solver::Adm {
            return est.fit(self.s, lambda, None);
        }
        if est.spec.family == Family::Soft {
            return Ok(self.soft(&est.adm, lambda)?.clone());
        }
        let init = self.soft(&est.adm, lambda)?.estimate.clone();
        est.fit(self.s, lambda, Some(&init))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvPlan<T> {
    pub folds: usize,
    pub lambda_grid: Vec<T>,
    pub repeats: usize,
    pub seed: u64,
}

impl<T: Scalar> CvPlan<T> {
    pub fn new(lambda_grid: Vec<T>, seed: u64) -> Self {
        CvPlan { folds: DEFAULT_FOLDS, lambda_grid, repeats: 1, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidConfig(format!("folds must be >= 2, got {}", self.folds)));
        }
        if self.repeats < 1 {
            return Err(Error::InvalidConfig("repeats must be >= 1".into()));
        }
        if self.lambda_grid.is_empty() {
            return Err(Error::InvalidConfig("lambda grid is empty".into()));
        }
        for w in self.lambda_grid.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidConfig("lambda grid must be strictly ascending".into()));
            }
        }
        if let Some(l) = self.lambda_grid.iter().find(|l| !(**l >= T::zero()) || !l.is_finite()) {
            return Err(Error::InvalidConfig(format!("invalid lambda {l} in grid")));
        }
        Ok(())
    }
}

/// Validation loss for one `(repeat, fold, λ)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldDiag<T> {
    pub repeat: usize,
    pub fold: usize,
    pub lambda_index: usize,
    pub loss: T,
    pub iters: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult<T> {
    pub best_lambda: T,
    pub best_index: usize,
    pub lambda_grid: Vec<T>,
    /// `losses[g][r]`: mean validation loss over folds for grid point `g`, repeat `r`.
    pub losses: Vec<Vec<T>>,
    pub folds: Vec<FoldDiag<T>>,
}

impl<T: Scalar> CvResult<T> {
    pub fn mean_loss(&self, g: usize) -> T {
        let row = &self.losses[g];
        row.iter().copied().sum::<T>() / T::of(row.len() as f64)
    }

    /// `lambda,repeat,mean_loss` rows in grid-major order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,repeat,mean_loss\n");
        for (g, lam) in self.lambda_grid.iter().enumerate() {
            for (r, loss) in self.losses[g].iter().enumerate() {
                let _ = writeln!(out, "{lam},{r},{loss}");
            }
        }
        out
    }
}

/// Log-spaced grid from `1e-3·λmax` to `λmax = max_{i≠j} |S_ij|`.
pub fn default_lambda_grid<T: Scalar>(s: &SymMat<T>, points: usize) -> Result<Vec<T>> {
    lambda_grid_with_ratio(s, points, T::of(1e-3))
}

/// Log-spaced grid from `min_ratio·λmax` to `λmax`, with `λmax` hit exactly.
/// A matrix with no off-diagonal mass gets the single value `1e-6`.
pub fn lambda_grid_with_ratio<T: Scalar>(s: &SymMat<T>, points: usize, min_ratio: T) -> Result<Vec<T>> {
    if points < 2 {
        return Err(Error::InvalidConfig(format!("lambda grid needs at least 2 points, got {points}")));
    }
    if !(min_ratio > T::zero() && min_ratio < T::one()) {
        return Err(Error::InvalidConfig(format!("min_ratio must lie in (0, 1), got {min_ratio}")));
    }
    s.check_finite()?;
    let hi = s.max_abs_offdiag();
    if hi == T::zero() {
        return Ok(vec![T::of(DEGENERATE_LAMBDA)]);
    }
    let (l0, l1) = (min_ratio.ln(), T::zero());
    let last = T::of((points - 1) as f64);
    Ok((0..points)
        .map(|k| if k + 1 == points { hi } else { hi * (l0 + (l1 - l0) * T::of(k as f64) / last).exp() })
        .collect())
}

/// `(start, end)` of each of `folds` contiguous blocks over `n` items; the
/// first `n % folds` blocks get one extra item.
fn fold_bounds(n: usize, folds: usize) -> Vec<(usize, usize)> {
    let (base, extra) = (n / folds, n % folds);
    let mut start = 0;
    (0..folds)
        .map(|f| {
            let len = base + usize::from(f < extra);
            let b = (start, start + len);
            start += len;
            b
        })
        .collect()
}

fn sample_corr<T: Scalar>(s: &SampleSet<T>) -> Result<SymMat<T>> {
    cov_to_corr(&sample_cov(s, true))
}

/// Cross-validates one estimator. See [`cross_validate_many`].
pub fn cross_validate<T: Scalar>(samples: &SampleSet<T>, est: &Estimator<T>, plan: &CvPlan<T>) -> Result<CvResult<T>> {
    Ok(cross_validate_many(samples, std::slice::from_ref(est), plan)?.remove(0))
}

/// Cross-validates several estimators on the same folds. Soft-penalty solves
/// are shared across estimators as warm starts, so the result for each
/// estimator is identical to a standalone [`cross_validate`] call.
///
/// Folds run in parallel; assembly is in `(repeat, fold)` order regardless of
/// completion order. Every fold needs at least two samples.
pub fn cross_validate_many<T: Scalar>(
    samples: &SampleSet<T>,
    ests: &[Estimator<T>],
    plan: &CvPlan<T>,
) -> Result<Vec<CvResult<T>>> {
    plan.validate()?;
    let n = samples.n();
    if n < 2 * plan.folds {
        return Err(Error::TooFewSamples { needed: 2 * plan.folds, got: n });
    }
    let bounds = fold_bounds(n, plan.folds);
    let perms: Vec<Vec<usize>> = (0..plan.repeats)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
            rng.set_stream(r as u64);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            idx
        })
        .collect();
    let tasks: Vec<(usize, usize)> =
        (0..plan.repeats).flat_map(|r| (0..plan.folds).map(move |f| (r, f))).collect();

    // cells[task][est][g] = (loss, iters, converged)
    let cells: Vec<Vec<Vec<(T, usize, bool)>>> = tasks
        .par_iter()
        .map(|&(r, f)| {
            let (lo, hi) = bounds[f];
            let perm = &perms[r];
            let valid: Vec<usize> = perm[lo..hi].to_vec();
            let train: Vec<usize> = perm[..lo].iter().chain(&perm[hi..]).copied().collect();
            let s_train = sample_corr(&samples.select(&train)?)?;
            let s_valid = sample_corr(&samples.select(&valid)?)?;
            let mut cache = SoftCache::new(&s_train);
            ests.iter()
                .map(|est| {
                    plan.lambda_grid
                        .iter()
                        .map(|&lam| {
                            let fit = cache.fit(est, lam)?;
                            Ok((fit.estimate.frob_dist_sq(&s_valid)?, fit.iters, fit.converged))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let folds_t = T::of(plan.folds as f64);
    let grid = &plan.lambda_grid;
    Ok((0..ests.len())
        .map(|e| {
            let mut losses = vec![vec![T::zero(); plan.repeats]; grid.len()];
            let mut diags = Vec::with_capacity(tasks.len() * grid.len());
            for (t, &(r, f)) in tasks.iter().enumerate() {
                for (g, &(loss, iters, converged)) in cells[t][e].iter().enumerate() {
                    losses[g][r] += loss / folds_t;
                    diags.push(FoldDiag { repeat: r, fold: f, lambda_index: g, loss, iters, converged });
                }
            }
            let mut res = CvResult {
                best_lambda: grid[0],
                best_index: 0,
                lambda_grid: grid.clone(),
                losses,
                folds: diags,
            };
            let mut best = T::infinity();
            for g in 0..grid.len() {
                let m = res.mean_loss(g);
                if m <= best {
                    best = m;
                    res.best_index = g;
                }
            }
            res.best_lambda = grid[res.best_index];
            res
        })
        .collect())
}
