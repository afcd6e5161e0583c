//! Covariance estimation from compressed measurements `y_t = A x_t`.
//!
//! Solves `min ½‖Y − AΣAᵀ‖²_F + g_λ(Σ)` subject to `Σ ⪰ εI` with the same
//! three-block splitting as [`crate::admm`]; the `Σ` block has a closed form
//! through the eigendecomposition of `AᵀA`, computed once per solve.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::admm::{
    penalty_and_coupling, run_split, sparse_block_step, v2_step, AdmConfig, AdmState, EstimationReport,
    SplitProblem,
};
use crate::error::{Error, Result};
use crate::linalg::{eig_sym, hadamard_div, Dense, EigenPair, SymMat};
use crate::penalty::{Family, PenaltySpec};
use crate::scalar::Scalar;
use crate::stats::{sample_cov, SampleSet};

/// Solver controls for the sketch problem; `eps_floor` is the covariance
/// eigenvalue floor.
pub type SketchAdmConfig<T> = AdmConfig<T>;

/// Sampling matrix `A` (`m × d`) and the compressed sample covariance `Y` (`m × m`).
#[derive(Debug, Clone, PartialEq)]
pub struct SketchModel<T> {
    pub a_mat: Dense<T>,
    pub y: SymMat<T>,
}

impl<T: Scalar> SketchModel<T> {
    pub fn new(a_mat: Dense<T>, y: SymMat<T>) -> Result<Self> {
        let (m, d) = (a_mat.rows(), a_mat.cols());
        if m == 0 || m > d {
            return Err(Error::BadDim(format!("sampling matrix must satisfy 1 <= m <= d, got {m}x{d}")));
        }
        if y.dim() != m {
            return Err(Error::DimMismatch(format!("Y is {0}x{0} but A has {m} rows", y.dim())));
        }
        Ok(SketchModel { a_mat, y })
    }

    pub fn m(&self) -> usize {
        self.a_mat.rows()
    }

    pub fn d(&self) -> usize {
        self.a_mat.cols()
    }
}

/// `Y = (1/n) Σ (A x_t)(A x_t)ᵀ = A R Aᵀ` with `R` uncentered.
pub fn build_sketch<T: Scalar>(samples: &SampleSet<T>, a_mat: &Dense<T>) -> Result<SketchModel<T>> {
    if a_mat.cols() != samples.d() {
        return Err(Error::DimMismatch(format!(
            "sampling matrix has {} columns but samples have dimension {}",
            a_mat.cols(),
            samples.d()
        )));
    }
    let r = sample_cov(samples, false);
    let y = a_mat.congruence(&r)?;
    SketchModel::new(a_mat.clone(), y)
}

/// `m × d` matrix of i.i.d. `N(0, 1/m)` entries, so that `E[AᵀA] = I`.
pub fn gaussian_sampling_matrix<T: Scalar>(m: usize, d: usize, seed: u64) -> Result<Dense<T>> {
    if m == 0 || m > d {
        return Err(Error::BadDim(format!("sampling matrix must satisfy 1 <= m <= d, got {m}x{d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, (1.0 / m as f64).sqrt()).expect("positive std dev");
    Ok(Dense::from_fn(m, d, |_, _| T::of(normal.sample(&mut rng))))
}

/// `‖Y − AΣ⁰Aᵀ‖²_F`, the energy of the sampling perturbation.
pub fn noise_energy<T: Scalar>(model: &SketchModel<T>, truth: &SymMat<T>) -> Result<T> {
    let clean = model.a_mat.congruence(truth)?;
    model.y.frob_dist_sq(&clean)
}

/// Quantities fixed for a whole solve: `AᵀA = E·diag(a)·Eᵀ` and `AᵀYA`.
#[derive(Debug, Clone)]
pub struct SketchCache<T> {
    pub gram_eig: EigenPair<T>,
    pub atya: SymMat<T>,
}

impl<T: Scalar> SketchCache<T> {
    pub fn new(model: &SketchModel<T>) -> Result<Self> {
        let mut gram_eig = eig_sym(&model.a_mat.gram())?;
        // AᵀA is PSD; clip rounding noise on its null space
        for v in &mut gram_eig.values {
            *v = v.max(T::zero());
        }
        Ok(SketchCache { gram_eig, atya: model.a_mat.t_congruence(&model.y)? })
    }
}

/// `Γ₁` update: off-diagonal thresholding as in the correlation solver, with
/// the diagonal copied from `Σ`.
pub fn gamma1_step<T: Scalar>(
    sigma: &SymMat<T>,
    g1_prev: &SymMat<T>,
    spec: &PenaltySpec<T>,
    rho: T,
    c: T,
) -> Result<SymMat<T>> {
    sparse_block_step(sigma, g1_prev, spec, rho, c, |i| sigma.get(i, i))
}

/// `Γ₂` update: `P₊((ρΣ + dΓ₂)/(ρ + d), ε)`.
pub fn gamma2_step<T: Scalar>(sigma: &SymMat<T>, g2_prev: &SymMat<T>, rho: T, dprox: T, eps: T) -> Result<SymMat<T>> {
    v2_step(sigma, g2_prev, rho, dprox, eps)
}

/// Closed-form `Σ` update solving `AᵀA Σ AᵀA + 2ρΣ = AᵀYA + ρ(Γ₁ + Γ₂)`:
/// `Σ = E[(Eᵀ Z E) ⊘ (aaᵀ + 2ρ·1)]Eᵀ`.
pub fn sigma_step<T: Scalar>(
    model: &SketchModel<T>,
    g1: &SymMat<T>,
    g2: &SymMat<T>,
    rho: T,
    cache: &SketchCache<T>,
) -> Result<SymMat<T>> {
    let d = model.d();
    if g1.dim() != d || g2.dim() != d {
        return Err(Error::DimMismatch(format!("Γ blocks must be {d}x{d}")));
    }
    let rhs = cache.atya.add(&g1.add(g2)?.scale(rho))?;
    let e = &cache.gram_eig.vectors;
    let rotated = e.t_congruence(&rhs)?;
    let a = &cache.gram_eig.values;
    let two_rho = T::of(2.0) * rho;
    let denom = SymMat::from_upper(d, |i, j| a[i] * a[j] + two_rho);
    let scaled = hadamard_div(&rotated, &denom)?;
    e.congruence(&scaled)
}

/// Relative residual `‖AᵀAΣAᵀA + 2ρΣ − AᵀYA − ρ(Γ₁ + Γ₂)‖_F / ‖AᵀYA + ρ(Γ₁ + Γ₂)‖_F`.
pub fn normal_equation_residual<T: Scalar>(
    model: &SketchModel<T>,
    sigma: &SymMat<T>,
    g1: &SymMat<T>,
    g2: &SymMat<T>,
    rho: T,
) -> Result<T> {
    let gram = model.a_mat.gram().to_dense();
    let lhs = gram.congruence(sigma)?.add(&sigma.scale(T::of(2.0) * rho))?;
    let rhs = model.a_mat.t_congruence(&model.y)?.add(&g1.add(g2)?.scale(rho))?;
    let num = lhs.frob_dist_sq(&rhs)?.sqrt();
    Ok(num / rhs.frob_norm().max(T::min_positive_value()))
}

/// `½‖Y − AΣAᵀ‖² + G(Γ₁) + δ(Γ₂ ⪰ εI) + (ρ/2)‖GΣ − Γ‖²` with the same
/// penalty convention as [`crate::admm::augmented_objective`].
pub fn sketch_objective<T: Scalar>(
    model: &SketchModel<T>,
    state: &AdmState<T>,
    spec: &PenaltySpec<T>,
    eps: T,
) -> Result<T> {
    let rest = penalty_and_coupling(state, spec, eps)?;
    if rest.is_infinite() {
        return Ok(rest);
    }
    let fit = model.a_mat.congruence(&state.theta)?.frob_dist_sq(&model.y)?;
    Ok(T::of(0.5) * fit + rest)
}

struct SketchProblem<'a, T: Scalar> {
    model: &'a SketchModel<T>,
    cache: SketchCache<T>,
}

impl<T: Scalar> SplitProblem<T> for SketchProblem<'_, T> {
    fn sparse_step(&self, x: &SymMat<T>, prev: &SymMat<T>, spec: &PenaltySpec<T>, rho: T, c: T) -> Result<SymMat<T>> {
        gamma1_step(x, prev, spec, rho, c)
    }

    fn primal_step(&self, sparse: &SymMat<T>, feasible: &SymMat<T>, rho: T) -> Result<SymMat<T>> {
        sigma_step(self.model, sparse, feasible, rho, &self.cache)
    }

    fn objective(&self, state: &AdmState<T>, spec: &PenaltySpec<T>, eps: T) -> Result<T> {
        sketch_objective(self.model, state, spec, eps)
    }

    fn restore_floor(&self, m: &SymMat<T>, min_eig: T, eps: T) -> SymMat<T> {
        m.shift_diag(eps - min_eig)
    }

    fn finish_diag(&self, m: SymMat<T>) -> SymMat<T> {
        m
    }
}

/// Sparse positive-definite covariance estimate from a sketch.
///
/// `init` seeds `(Σ, Γ₁, Γ₂)`; when absent, nonconvex families start from the
/// soft-penalty solution at the same `λ`, and the soft penalty starts from `AᵀYA`.
pub fn solve_sketch<T: Scalar>(
    model: &SketchModel<T>,
    spec: &PenaltySpec<T>,
    cfg: &SketchAdmConfig<T>,
    init: Option<&SymMat<T>>,
) -> Result<EstimationReport<T>> {
    cfg.validate()?;
    spec.validated()?;
    let problem = SketchProblem { model, cache: SketchCache::new(model)? };
    let owned;
    let init = match init {
        Some(m) => {
            if m.dim() != model.d() {
                return Err(Error::DimMismatch(format!("init must be {0}x{0}", model.d())));
            }
            m
        }
        None => {
            let start = problem.cache.atya.clone();
            owned = if spec.family == Family::Soft {
                start
            } else {
                let soft = PenaltySpec { family: Family::Soft, ..*spec };
                run_split(&problem, &start, &soft, cfg)?.theta_hat
            };
            &owned
        }
    };
    run_split(&problem, init, spec, cfg)
}
