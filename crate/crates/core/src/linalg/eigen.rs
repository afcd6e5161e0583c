//! Symmetric eigendecomposition (Householder tridiagonalization followed by
//! implicit QL) and the spectral operations built on it.

use crate::error::{Error, Result};
use crate::linalg::{Dense, SymMat};
use crate::scalar::Scalar;

/// Eigenvalues in descending order with an orthonormal eigenvector basis.
/// Column `i` of `vectors` pairs with `values[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair<T> {
    pub values: Vec<T>,
    pub vectors: Dense<T>,
}

impl<T: Scalar> EigenPair<T> {
    /// `V·diag(f(λ))·Vᵀ`.
    pub fn reconstruct_with(&self, mut f: impl FnMut(T) -> T) -> SymMat<T> {
        let n = self.values.len();
        let mapped: Vec<T> = self.values.iter().map(|&v| f(v)).collect();
        let v = &self.vectors;
        // scaled = V·diag(mapped), stored column-major per eigenvector for locality
        let mut cols = vec![T::zero(); n * n];
        for k in 0..n {
            for i in 0..n {
                cols[k * n + i] = v.get(i, k);
            }
        }
        let mut out = vec![T::zero(); n * n];
        for k in 0..n {
            let w = mapped[k];
            if w == T::zero() {
                continue;
            }
            let col = &cols[k * n..(k + 1) * n];
            for i in 0..n {
                let a = w * col[i];
                let row = &mut out[i * n..(i + 1) * n];
                for j in i..n {
                    row[j] += a * col[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                out[i * n + j] = out[j * n + i];
            }
        }
        SymMat::from_symmetric_unchecked(n, out)
    }

    pub fn reconstruct(&self) -> SymMat<T> {
        self.reconstruct_with(|v| v)
    }

    pub fn min_value(&self) -> T {
        *self.values.last().expect("non-empty spectrum")
    }

    pub fn max_value(&self) -> T {
        self.values[0]
    }
}

/// Eigendecomposition of a symmetric matrix.
///
/// Values are sorted descending; each eigenvector is signed so that its
/// largest-magnitude component (first one on ties) is positive.
pub fn eig_sym<T: Scalar>(m: &SymMat<T>) -> Result<EigenPair<T>> {
    m.check_finite()?;
    let n = m.dim();
    if n == 1 {
        return Ok(EigenPair { values: vec![m.get(0, 0)], vectors: Dense::identity(1) });
    }
    let mut v: Vec<T> = m.as_slice().to_vec();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(n, &mut v, &mut d, &mut e);
    // QL rotates pairs of columns; work on the transpose so they are contiguous rows
    let mut vt = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            vt[j * n + i] = v[i * n + j];
        }
    }
    tridiagonal_ql(n, &mut vt, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).expect("finite eigenvalues"));
    let values: Vec<T> = order.iter().map(|&k| d[k]).collect();
    let mut vectors = Dense::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let vec_k = &vt[k * n..(k + 1) * n];
        let mut pivot = 0;
        for i in 1..n {
            if vec_k[i].abs() > vec_k[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if vec_k[pivot] < T::zero() { -T::one() } else { T::one() };
        for (i, &x) in vec_k.iter().enumerate() {
            vectors.set(i, col, sign * x);
        }
    }
    Ok(EigenPair { values, vectors })
}

// Householder reduction to tridiagonal form; `v` holds the accumulated
// orthogonal transform on exit, `d` the diagonal and `e` the subdiagonal.
fn tridiagonalize<T: Scalar>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T]) {
    let zero = T::zero();
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
    }
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = zero;
                v[j * n + i] = zero;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }
            for j in 0..i {
                f = d[j];
                v[j * n + i] = f;
                g = e[j] + v[j * n + j] * f;
                for k in (j + 1)..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = zero;
            }
        }
        d[i] = h;
    }
    for i in 0..(n - 1) {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g += v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = zero;
    }
    v[(n - 1) * n + n - 1] = T::one();
    e[0] = zero;
}

// Implicit QL iterations on the tridiagonal form. `vt` is the transposed
// transform: row `k` of `vt` is column `k` of the basis.
fn tridiagonal_ql<T: Scalar>(n: usize, vt: &mut [T], d: &mut [T], e: &mut [T]) -> Result<()> {
    let zero = T::zero();
    let one = T::one();
    let two = T::of(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let eps = T::epsilon();
    let mut f = zero;
    let mut tst1 = zero;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > 60 {
                    return Err(Error::NonFinite { row: l, col: l });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = vt.split_at_mut((i + 1) * n);
                    let (ri, ri1) = (&mut lo[i * n..], &mut hi[..n]);
                    for (a, b) in ri.iter_mut().zip(ri1.iter_mut()) {
                        let hb = *b;
                        *b = s * *a + c * hb;
                        *a = c * *a - s * hb;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }
    Ok(())
}

/// Cheap feasibility test for `m ⪰ eps·I`: attempts a Cholesky factorization
/// of `m − eps·I`.
pub fn floor_feasible<T: Scalar>(m: &SymMat<T>, eps: T) -> bool {
    let n = m.dim();
    let mut l = vec![T::zero(); n * n];
    for j in 0..n {
        let mut diag = m.get(j, j) - eps;
        for k in 0..j {
            diag -= l[j * n + k] * l[j * n + k];
        }
        if !(diag > T::zero()) {
            return false;
        }
        let ljj = diag.sqrt();
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            let (ri, rj) = (&l[i * n..i * n + j], &l[j * n..j * n + j]);
            for (a, b) in ri.iter().zip(rj) {
                s -= *a * *b;
            }
            l[i * n + j] = s / ljj;
        }
    }
    true
}

/// Frobenius-nearest matrix with every eigenvalue at least `eps`:
/// `Σ max(λᵢ, eps)·vᵢvᵢᵀ`. Returns `m` unchanged when it is already feasible.
pub fn spectral_floor<T: Scalar>(m: &SymMat<T>, eps: T) -> Result<SymMat<T>> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidConfig(format!("eigenvalue floor must be positive, got {eps}")));
    }
    m.check_finite()?;
    if floor_feasible(m, eps) {
        return Ok(m.clone());
    }
    let eig = eig_sym(m)?;
    if eig.min_value() >= eps {
        return Ok(m.clone());
    }
    // m + Σ_{λᵢ<eps} (eps − λᵢ)vᵢvᵢᵀ; usually only a few eigenvalues are lifted
    let n = m.dim();
    let mut out = m.as_slice().to_vec();
    let mut col = vec![T::zero(); n];
    for (k, &lam) in eig.values.iter().enumerate().rev() {
        if lam >= eps {
            break;
        }
        let w = eps - lam;
        for (i, c) in col.iter_mut().enumerate() {
            *c = eig.vectors.get(i, k);
        }
        for i in 0..n {
            let a = w * col[i];
            let row = &mut out[i * n..(i + 1) * n];
            for j in i..n {
                row[j] += a * col[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            out[i * n + j] = out[j * n + i];
        }
    }
    Ok(SymMat::from_symmetric_unchecked(n, out))
}

pub fn frob_norm<T: Scalar>(m: &SymMat<T>) -> Result<T> {
    m.check_finite()?;
    Ok(m.frob_norm())
}

/// Largest absolute eigenvalue.
pub fn spec_norm<T: Scalar>(m: &SymMat<T>) -> Result<T> {
    let eig = eig_sym(m)?;
    Ok(eig.max_value().abs().max(eig.min_value().abs()))
}

pub fn min_eigenvalue<T: Scalar>(m: &SymMat<T>) -> Result<T> {
    Ok(eig_sym(m)?.min_value())
}

/// Elementwise `a ⊘ b`.
pub fn hadamard_div<T: Scalar>(a: &SymMat<T>, b: &SymMat<T>) -> Result<SymMat<T>> {
    a.check_same_dim(b)?;
    let n = a.dim();
    for i in 0..n {
        for j in i..n {
            if b.get(i, j) == T::zero() {
                return Err(Error::DivByZero { row: i, col: j });
            }
        }
    }
    a.zip_map(b, |x, y| x / y)
}
