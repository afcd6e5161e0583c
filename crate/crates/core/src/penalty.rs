//! Sparsity penalties `g_λ` and their scalar thresholding (proximal) maps
//! `T_λ(x) = argmin_z ½(z − x)² + g_λ(z)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMat;
use crate::scalar::Scalar;

pub const DEFAULT_SCAD_A: f64 = 3.7;
pub const DEFAULT_LQ_Q: f64 = 0.5;

const NEWTON_MAX_ITER: usize = 200;
const NEWTON_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Hard,
    Soft,
    Scad,
    Lq,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Hard, Family::Soft, Family::Scad, Family::Lq];

    pub fn name(self) -> &'static str {
        match self {
            Family::Hard => "hard",
            Family::Soft => "soft",
            Family::Scad => "scad",
            Family::Lq => "lq",
        }
    }

    pub fn is_convex(self) -> bool {
        self == Family::Soft
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hard" => Ok(Family::Hard),
            "soft" | "l1" | "lasso" => Ok(Family::Soft),
            "scad" => Ok(Family::Scad),
            "lq" => Ok(Family::Lq),
            other => Err(Error::InvalidSpec(format!("unknown penalty family {other:?}"))),
        }
    }
}

/// Penalty family plus its parameters. `scad_a` is read only for SCAD and
/// `q` only for the `ℓq` family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySpec<T> {
    pub family: Family,
    pub lambda: T,
    pub scad_a: T,
    pub q: T,
}

impl<T: Scalar> PenaltySpec<T> {
    /// Spec with default shape parameters (`a = 3.7`, `q = 0.5`).
    pub fn new(family: Family, lambda: T) -> Result<Self> {
        PenaltySpec { family, lambda, scad_a: T::of(DEFAULT_SCAD_A), q: T::of(DEFAULT_LQ_Q) }
            .validated()
    }

    pub fn hard(lambda: T) -> Result<Self> {
        Self::new(Family::Hard, lambda)
    }

    pub fn soft(lambda: T) -> Result<Self> {
        Self::new(Family::Soft, lambda)
    }

    pub fn scad(lambda: T, a: T) -> Result<Self> {
        PenaltySpec { scad_a: a, ..Self::new(Family::Scad, lambda)? }.validated()
    }

    pub fn lq(lambda: T, q: T) -> Result<Self> {
        PenaltySpec { q, ..Self::new(Family::Lq, lambda)? }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
            return Err(Error::InvalidSpec(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if self.family == Family::Scad && !(self.scad_a > T::of(2.0) && self.scad_a.is_finite()) {
            return Err(Error::InvalidSpec(format!("SCAD requires a > 2, got {}", self.scad_a)));
        }
        if self.family == Family::Lq && !(self.q > T::zero() && self.q < T::one()) {
            return Err(Error::InvalidSpec(format!("lq requires 0 < q < 1, got {}", self.q)));
        }
        Ok(self)
    }

    pub fn with_lambda(self, lambda: T) -> Result<Self> {
        PenaltySpec { lambda, ..self }.validated()
    }

    /// `β = 2(1 − q)λ / (2 − q)`, the smallest nonzero `ℓq` output magnitude.
    pub fn lq_beta(&self) -> T {
        let two = T::of(2.0);
        two * (T::one() - self.q) * self.lambda / (two - self.q)
    }

    /// `α(λ, q) = (λ − β)β^{1−q} / q`, the `ℓq` weight that puts the threshold at `λ`.
    pub fn lq_alpha(&self) -> T {
        let beta = self.lq_beta();
        (self.lambda - beta) * beta.powf(T::one() - self.q) / self.q
    }

    /// `g_λ(x)`.
    pub fn value(&self, x: T) -> T {
        let ax = x.abs();
        let lam = self.lambda;
        let half = T::of(0.5);
        match self.family {
            Family::Soft => lam * ax,
            Family::Hard => {
                // halved so the proximal map with a ½-weighted fit is exactly xI(|x| > λ)
                let dip = if ax < lam { (ax - lam) * (ax - lam) } else { T::zero() };
                half * (lam * lam - dip)
            }
            Family::Scad => {
                let a = self.scad_a;
                if ax < lam {
                    lam * ax
                } else if ax < a * lam {
                    (T::of(2.0) * a * lam * ax - ax * ax - lam * lam) / (T::of(2.0) * (a - T::one()))
                } else {
                    (a + T::one()) * lam * lam * half
                }
            }
            Family::Lq => {
                if lam == T::zero() || ax == T::zero() {
                    T::zero()
                } else {
                    self.lq_alpha() * ax.powf(self.q)
                }
            }
        }
    }

    /// `w · g_{λ/w}(x)`: the penalty for which a proximal step with quadratic
    /// weight `w` is exactly `T_{λ/w}`. Equals `g_λ` for the soft penalty.
    pub fn split_value(&self, x: T, weight: T) -> T {
        let scaled = PenaltySpec { lambda: self.lambda / weight, ..*self };
        weight * scaled.value(x)
    }

    /// `T_λ(x)`. Odd in `x`; ties at `|x| = λ` resolve to zero.
    pub fn threshold(&self, x: T) -> Result<T> {
        let lam = self.lambda;
        if lam == T::zero() {
            return Ok(x);
        }
        let ax = x.abs();
        let mag = match self.family {
            Family::Hard => {
                if ax > lam {
                    ax
                } else {
                    T::zero()
                }
            }
            Family::Soft => (ax - lam).max(T::zero()),
            Family::Scad => {
                let a = self.scad_a;
                if ax <= T::of(2.0) * lam {
                    (ax - lam).max(T::zero())
                } else if ax <= a * lam {
                    ((a - T::one()) * ax - a * lam) / (a - T::of(2.0))
                } else {
                    ax
                }
            }
            Family::Lq => {
                if ax <= lam {
                    T::zero()
                } else {
                    lq_newton(self.lq_alpha(), self.q, ax, self.lq_beta())?
                }
            }
        };
        Ok(if x < T::zero() { -mag } else { mag })
    }
}

pub fn penalty_value<T: Scalar>(spec: &PenaltySpec<T>, x: T) -> T {
    spec.value(x)
}

pub fn threshold<T: Scalar>(spec: &PenaltySpec<T>, x: T) -> Result<T> {
    spec.threshold(x)
}

/// Root of `h(η) = αqη^{q−1} + η − |x|` on `(β, |x|]`.
///
/// Newton's method from `η⁰ = |x|`; `h` is convex and positive at `|x|`, so the
/// iterates decrease monotonically onto the root. Any iterate leaving the
/// bracket switches to bisection.
pub fn lq_newton<T: Scalar>(alpha: T, q: T, x_abs: T, beta: T) -> Result<T> {
    let fail = || Error::NewtonFailed { x_abs: x_abs.to_f64_lossy() };
    if !(x_abs > T::zero()) || !(alpha >= T::zero()) || !(q > T::zero() && q < T::one()) {
        return Err(fail());
    }
    let aq = alpha * q;
    let h = |eta: T| aq * eta.powf(q - T::one()) + eta - x_abs;
    let dh = |eta: T| aq * (q - T::one()) * eta.powf(q - T::of(2.0)) + T::one();
    let tol = T::of(NEWTON_TOL).max(T::tiny()) * x_abs.max(T::one());

    let mut eta = x_abs;
    for _ in 0..NEWTON_MAX_ITER {
        let hv = h(eta);
        if hv.abs() < tol {
            return Ok(eta);
        }
        let next = eta - hv / dh(eta);
        if !next.is_finite() || !(next > beta) || next > x_abs || next == eta {
            break;
        }
        eta = next;
    }

    // bisection on (β, |x|]
    let (mut lo, mut hi) = (beta.max(T::min_positive_value()), x_abs);
    if !(h(lo) < T::zero()) || h(hi) < T::zero() {
        return Err(fail());
    }
    for _ in 0..(4 * NEWTON_MAX_ITER) {
        let mid = (lo + hi) * T::of(0.5);
        let hv = h(mid);
        if hv.abs() < tol || hi - lo <= T::epsilon() * hi {
            return Ok(mid);
        }
        if hv < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(fail())
}

/// Thresholds every off-diagonal entry; the diagonal is left untouched.
pub fn apply_offdiag_threshold<T: Scalar>(m: &SymMat<T>, spec: &PenaltySpec<T>) -> Result<SymMat<T>> {
    let d = m.dim();
    let mut out = m.clone();
    for i in 0..d {
        for j in (i + 1)..d {
            out.set_sym(i, j, spec.threshold(m.get(i, j))?);
        }
    }
    Ok(out)
}

/// `Σ_{i≠j} g(m_ij)` with the penalty evaluated through `value`.
pub(crate) fn offdiag_sum<T: Scalar>(m: &SymMat<T>, mut value: impl FnMut(T) -> T) -> T {
    let d = m.dim();
    let mut total = T::zero();
    for i in 0..d {
        for j in (i + 1)..d {
            total += value(m.get(i, j));
        }
    }
    total * T::of(2.0)
}
