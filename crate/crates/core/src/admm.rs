//! Alternating direction solver for the eigenvalue-constrained penalized
//! correlation problem
//!
//! ```text
//! min ½‖Θ − S‖²_F + g_λ(V₁) + δ(V₂ ⪰ εI) + (ρ/2)(‖Θ − V₁‖²_F + ‖Θ − V₂‖²_F)
//! s.t. diag(V₁) = 1
//! ```
//!
//! Each iteration makes three proximal block updates (`V₁`, `V₂`, then `Θ`)
//! while `ρ` grows geometrically to its target. Once `ρ` is fixed the
//! objective above is nonincreasing along the iterates, which the recorded
//! trace lets callers verify.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig_sym, floor_feasible, spectral_floor, SymMat};
use crate::penalty::{offdiag_sum, Family, PenaltySpec};
use crate::scalar::Scalar;
use crate::thresholding::{check_correlation, sparsity_offdiag};

/// Proximal weights default to this fraction of the current `ρ`.
pub const DEFAULT_PROX_RATIO: f64 = 1e-2;
/// Slack on the eigenvalue-floor indicator when scoring the objective.
pub const FEASIBILITY_SLACK: f64 = 1e-9;
/// `V₁` entries below this magnitude are treated as exact zeros in the estimate.
const ZERO_PATTERN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmConfig<T> {
    pub rho_init: T,
    pub rho_target: T,
    pub rho_growth: T,
    /// Proximal weight on the sparse block; `None` means `1e-2·ρ`.
    pub prox_c: Option<T>,
    /// Proximal weight on the feasible block; `None` means `1e-2·ρ`.
    pub prox_d: Option<T>,
    pub eps_floor: T,
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for AdmConfig<T> {
    fn default() -> Self {
        AdmConfig {
            rho_init: T::one(),
            rho_target: T::of(10.0),
            rho_growth: T::of(1.09),
            prox_c: None,
            prox_d: None,
            eps_floor: T::of(1e-3),
            tol: T::of(1e-6),
            max_iter: 2000,
        }
    }
}

impl<T: Scalar> AdmConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.rho_init > T::zero()) || !(self.rho_target >= self.rho_init) || !self.rho_target.is_finite() {
            return bad(format!("need 0 < rho_init <= rho_target, got {} and {}", self.rho_init, self.rho_target));
        }
        if !(self.rho_growth >= T::one()) {
            return bad(format!("rho_growth must be >= 1, got {}", self.rho_growth));
        }
        if self.rho_growth == T::one() && self.rho_init < self.rho_target {
            return bad("rho_growth = 1 never reaches rho_target".into());
        }
        for (name, w) in [("prox_c", self.prox_c), ("prox_d", self.prox_d)] {
            if let Some(w) = w {
                if !(w > T::zero()) {
                    return bad(format!("{name} must be positive, got {w}"));
                }
            }
        }
        if !(self.eps_floor > T::zero()) {
            return bad(format!("eps_floor must be positive, got {}", self.eps_floor));
        }
        if !(self.tol > T::zero()) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive".into());
        }
        Ok(())
    }

    pub fn prox_weights(&self, rho: T) -> (T, T) {
        let dflt = rho * T::of(DEFAULT_PROX_RATIO);
        (self.prox_c.unwrap_or(dflt), self.prox_d.unwrap_or(dflt))
    }

    /// `ρ_{k+1} = min(growth·ρ_k, target)`.
    pub fn next_rho(&self, rho: T) -> T {
        (rho * self.rho_growth).min(self.rho_target)
    }
}

/// Iterate `Z = (Θ, V₁, V₂)` plus its traces. The covariance-sketch solver
/// stores `(Σ, Γ₁, Γ₂)` in the same slots.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmState<T> {
    pub theta: SymMat<T>,
    pub v1: SymMat<T>,
    pub v2: SymMat<T>,
    pub rho: T,
    pub prox_c: T,
    pub iter: usize,
    /// Objective after each iteration, scored with that iteration's `ρ`.
    pub objective_trace: Vec<T>,
    /// `‖Z^{k+1} − Z^k‖_F` per iteration.
    pub step_norm_trace: Vec<T>,
    pub rho_trace: Vec<T>,
}

impl<T: Scalar> AdmState<T> {
    pub fn from_init(init: &SymMat<T>, rho: T, prox_c: T) -> Self {
        AdmState {
            theta: init.clone(),
            v1: init.clone(),
            v2: init.clone(),
            rho,
            prox_c,
            iter: 0,
            objective_trace: Vec::new(),
            step_norm_trace: Vec::new(),
            rho_trace: Vec::new(),
        }
    }

    /// `‖Z‖_F` over all three blocks.
    pub fn norm(&self) -> T {
        let sq = |m: &SymMat<T>| m.as_slice().iter().map(|&v| v * v).sum::<T>();
        (sq(&self.theta) + sq(&self.v1) + sq(&self.v2)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationReport<T> {
    pub theta_hat: SymMat<T>,
    pub converged: bool,
    pub iters: usize,
    pub final_step_norm: T,
    pub min_eig: T,
    pub sparsity_offdiag: f64,
    pub objective_trace: Vec<T>,
    /// Final iterate; all three blocks remain available.
    pub state: AdmState<T>,
}

impl<T: Scalar> EstimationReport<T> {
    pub fn ensure_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::DidNotConverge { iters: self.iters, step_norm: self.final_step_norm.to_f64_lossy() })
        }
    }

    /// Largest increase of the objective between consecutive iterations that
    /// share the target `ρ`; zero or negative means the tail is monotone.
    pub fn max_tail_increase(&self) -> T {
        let st = &self.state;
        let target = st.rho_trace.last().copied().unwrap_or_else(T::zero);
        let mut worst = T::neg_infinity();
        for k in 1..st.objective_trace.len() {
            if st.rho_trace[k] == target && st.rho_trace[k - 1] == target {
                worst = worst.max(st.objective_trace[k] - st.objective_trace[k - 1]);
            }
        }
        worst
    }

    /// Per-iteration trace as CSV: `iter,rho,objective,step_norm`.
    pub fn trace_csv(&self) -> String {
        let st = &self.state;
        let mut out = String::from("iter,rho,objective,step_norm\n");
        for k in 0..st.objective_trace.len() {
            writeln!(out, "{},{},{},{}", k + 1, st.rho_trace[k], st.objective_trace[k], st.step_norm_trace[k])
                .expect("write to String");
        }
        out
    }

    pub fn write_trace(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(&path, self.trace_csv()).map_err(|e| Error::io(&path, e))
    }
}

/// Off-diagonal `T_{λ/(ρ+c)}((ρΘ + cV₁)/(ρ+c))`; the diagonal is set by `diag`.
pub(crate) fn sparse_block_step<T: Scalar>(
    x: &SymMat<T>,
    prev: &SymMat<T>,
    spec: &PenaltySpec<T>,
    rho: T,
    c: T,
    diag: impl Fn(usize) -> T,
) -> Result<SymMat<T>> {
    x.check_same_dim(prev)?;
    let w = rho + c;
    let scaled = spec.with_lambda(spec.lambda / w)?;
    let d = x.dim();
    let mut out = SymMat::zeros(d);
    for i in 0..d {
        out.set_sym(i, i, diag(i));
        for j in (i + 1)..d {
            let avg = (rho * x.get(i, j) + c * prev.get(i, j)) / w;
            out.set_sym(i, j, scaled.threshold(avg)?);
        }
    }
    Ok(out)
}

/// `V₁` update: thresholded weighted average with unit diagonal.
pub fn v1_step<T: Scalar>(
    theta: &SymMat<T>,
    v1_prev: &SymMat<T>,
    spec: &PenaltySpec<T>,
    rho: T,
    c: T,
) -> Result<SymMat<T>> {
    sparse_block_step(theta, v1_prev, spec, rho, c, |_| T::one())
}

/// `V₂` update: `P₊((ρΘ + dV₂)/(ρ + d), ε)`.
pub fn v2_step<T: Scalar>(theta: &SymMat<T>, v2_prev: &SymMat<T>, rho: T, dprox: T, eps: T) -> Result<SymMat<T>> {
    let w = rho + dprox;
    let avg = theta.lin_comb(rho / w, v2_prev, dprox / w)?;
    spectral_floor(&avg, eps)
}

/// `Θ` update: `(S + ρ(V₁ + V₂)) / (2ρ + 1)`.
pub fn theta_step<T: Scalar>(s: &SymMat<T>, v1: &SymMat<T>, v2: &SymMat<T>, rho: T) -> Result<SymMat<T>> {
    s.check_same_dim(v1)?;
    s.check_same_dim(v2)?;
    let denom = T::of(2.0) * rho + T::one();
    Ok(SymMat::from_upper(s.dim(), |i, j| (s.get(i, j) + rho * (v1.get(i, j) + v2.get(i, j))) / denom))
}

pub(crate) fn penalty_and_coupling<T: Scalar>(state: &AdmState<T>, spec: &PenaltySpec<T>, eps: T) -> Result<T> {
    if !floor_feasible(&state.v2, eps - T::of(FEASIBILITY_SLACK)) {
        return Ok(T::infinity());
    }
    let w = state.rho + state.prox_c;
    let penalty = offdiag_sum(&state.v1, |x| spec.split_value(x, w));
    let coupling = state.theta.frob_dist_sq(&state.v1)? + state.theta.frob_dist_sq(&state.v2)?;
    Ok(penalty + state.rho * T::of(0.5) * coupling)
}

/// `½‖Θ − S‖² + G(V₁) + δ(V₂ ⪰ εI) + (ρ/2)‖GΘ − V‖²`, where `G` is the penalty
/// whose proximal step at weight `ρ + c` is `T_{λ/(ρ+c)}` (for the soft
/// penalty this is `λ·Σ_{i≠j}|V₁ᵢⱼ|`). Returns `+∞` when `V₂` violates the
/// eigenvalue floor by more than `1e-9`.
pub fn augmented_objective<T: Scalar>(s: &SymMat<T>, state: &AdmState<T>, spec: &PenaltySpec<T>, eps: T) -> Result<T> {
    let rest = penalty_and_coupling(state, spec, eps)?;
    if rest.is_infinite() {
        return Ok(rest);
    }
    Ok(T::of(0.5) * state.theta.frob_dist_sq(s)? + rest)
}

/// The pieces that differ between the correlation and sketch solvers.
pub(crate) trait SplitProblem<T: Scalar> {
    fn sparse_step(&self, x: &SymMat<T>, prev: &SymMat<T>, spec: &PenaltySpec<T>, rho: T, c: T) -> Result<SymMat<T>>;
    fn primal_step(&self, sparse: &SymMat<T>, feasible: &SymMat<T>, rho: T) -> Result<SymMat<T>>;
    fn objective(&self, state: &AdmState<T>, spec: &PenaltySpec<T>, eps: T) -> Result<T>;
    /// Lifts the smallest eigenvalue of a merged estimate back to the floor
    /// without touching its zero pattern.
    fn restore_floor(&self, m: &SymMat<T>, min_eig: T, eps: T) -> SymMat<T>;
    fn finish_diag(&self, m: SymMat<T>) -> SymMat<T>;
}

pub(crate) fn run_split<T: Scalar, P: SplitProblem<T>>(
    problem: &P,
    init: &SymMat<T>,
    spec: &PenaltySpec<T>,
    cfg: &AdmConfig<T>,
) -> Result<EstimationReport<T>> {
    let mut rho = cfg.rho_init;
    let (c0, _) = cfg.prox_weights(rho);
    let mut st = AdmState::from_init(init, rho, c0);
    let mut converged = false;
    let mut last_step = T::infinity();

    for k in 0..cfg.max_iter {
        let (c, dprox) = cfg.prox_weights(rho);
        let v1 = problem.sparse_step(&st.theta, &st.v1, spec, rho, c)?;
        let v2 = v2_step(&st.theta, &st.v2, rho, dprox, cfg.eps_floor)?;
        let theta = problem.primal_step(&v1, &v2, rho)?;

        let prev_norm = st.norm();
        let step = (theta.frob_dist_sq(&st.theta)? + v1.frob_dist_sq(&st.v1)? + v2.frob_dist_sq(&st.v2)?).sqrt();
        st.theta = theta;
        st.v1 = v1;
        st.v2 = v2;
        st.rho = rho;
        st.prox_c = c;
        st.iter = k + 1;
        let obj = problem.objective(&st, spec, cfg.eps_floor)?;
        st.objective_trace.push(obj);
        st.step_norm_trace.push(step);
        st.rho_trace.push(rho);
        last_step = step;

        if !step.is_finite() {
            return Err(Error::NonFinite { row: 0, col: 0 });
        }
        if rho == cfg.rho_target && step < cfg.tol * prev_norm.max(T::one()) {
            converged = true;
            break;
        }
        rho = cfg.next_rho(rho);
    }

    let theta_hat = merge_estimate(problem, &st, cfg.eps_floor)?;
    let min_eig = eig_sym(&theta_hat)?.min_value();
    Ok(EstimationReport {
        sparsity_offdiag: sparsity_offdiag(&theta_hat),
        objective_trace: st.objective_trace.clone(),
        iters: st.iter,
        final_step_norm: last_step,
        converged,
        min_eig,
        theta_hat,
        state: st,
    })
}

// Feasible block with the sparse block's exact zeros, then lifted back onto
// the eigenvalue floor if zeroing nudged it below.
fn merge_estimate<T: Scalar, P: SplitProblem<T>>(problem: &P, st: &AdmState<T>, eps: T) -> Result<SymMat<T>> {
    let zero_tol = T::of(ZERO_PATTERN_TOL);
    let d = st.v2.dim();
    let mut m = st.v2.clone();
    for i in 0..d {
        for j in (i + 1)..d {
            if st.v1.get(i, j).abs() < zero_tol {
                m.set_sym(i, j, T::zero());
            }
        }
    }
    let m = problem.finish_diag(m);
    if floor_feasible(&m, eps) {
        return Ok(m);
    }
    let min_eig = eig_sym(&m)?.min_value();
    Ok(problem.restore_floor(&m, min_eig, eps))
}

struct CorrelationProblem<'a, T> {
    s: &'a SymMat<T>,
}

impl<T: Scalar> SplitProblem<T> for CorrelationProblem<'_, T> {
    fn sparse_step(&self, x: &SymMat<T>, prev: &SymMat<T>, spec: &PenaltySpec<T>, rho: T, c: T) -> Result<SymMat<T>> {
        v1_step(x, prev, spec, rho, c)
    }

    fn primal_step(&self, sparse: &SymMat<T>, feasible: &SymMat<T>, rho: T) -> Result<SymMat<T>> {
        theta_step(self.s, sparse, feasible, rho)
    }

    fn objective(&self, state: &AdmState<T>, spec: &PenaltySpec<T>, eps: T) -> Result<T> {
        augmented_objective(self.s, state, spec, eps)
    }

    fn restore_floor(&self, m: &SymMat<T>, min_eig: T, eps: T) -> SymMat<T> {
        // convex combination with I keeps the unit diagonal and the zeros
        let t = (eps - min_eig) / (T::one() - min_eig);
        let keep = T::one() - t;
        SymMat::from_upper(m.dim(), |i, j| if i == j { T::one() } else { keep * m.get(i, j) })
    }

    fn finish_diag(&self, m: SymMat<T>) -> SymMat<T> {
        m.with_unit_diagonal()
    }
}

/// Sparse positive-definite correlation estimate from a sample correlation
/// matrix `s`.
///
/// `init` seeds all three blocks; when absent the convex soft-penalty solution
/// at the same `λ` is used for nonconvex families (and `s` itself for the soft
/// penalty). A run that hits `max_iter` still returns its report with
/// `converged = false`.
pub fn solve_correlation<T: Scalar>(
    s: &SymMat<T>,
    spec: &PenaltySpec<T>,
    cfg: &AdmConfig<T>,
    init: Option<&SymMat<T>>,
) -> Result<EstimationReport<T>> {
    cfg.validate()?;
    spec.validated()?;
    check_correlation(s)?;
    if !(cfg.eps_floor < T::one()) {
        return Err(Error::InvalidConfig(format!(
            "eps_floor must be below 1 for a unit-diagonal estimate, got {}",
            cfg.eps_floor
        )));
    }
    if let Some(init) = init {
        s.check_same_dim(init)?;
        init.check_finite()?;
    }
    if s.dim() == 1 {
        return Ok(trivial_report(cfg));
    }
    let owned;
    let init = match init {
        Some(m) => m,
        None => {
            owned = default_init(s, spec, cfg)?;
            &owned
        }
    };
    run_split(&CorrelationProblem { s }, init, spec, cfg)
}

fn trivial_report<T: Scalar>(cfg: &AdmConfig<T>) -> EstimationReport<T> {
    let one = SymMat::identity(1);
    let (c, _) = cfg.prox_weights(cfg.rho_target);
    let mut state = AdmState::from_init(&one, cfg.rho_target, c);
    state.iter = 0;
    EstimationReport {
        theta_hat: one,
        converged: true,
        iters: 0,
        final_step_norm: T::zero(),
        min_eig: T::one(),
        sparsity_offdiag: 1.0,
        objective_trace: Vec::new(),
        state,
    }
}

/// Warm start for the nonconvex solvers: the converged soft-penalty estimate
/// at the same `λ`; for the soft penalty, `s` itself.
pub fn default_init<T: Scalar>(s: &SymMat<T>, spec: &PenaltySpec<T>, cfg: &AdmConfig<T>) -> Result<SymMat<T>> {
    if spec.family == Family::Soft {
        return Ok(s.clone());
    }
    let soft = PenaltySpec { family: Family::Soft, ..*spec };
    Ok(solve_correlation(s, &soft, cfg, Some(s))?.theta_hat)
}
