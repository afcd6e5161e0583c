//! Independent reference computations for the integration tests. Nothing here
//! calls into the solver code paths it checks.
#![allow(dead_code, clippy::needless_range_loop)]

use pdcov::{Family, PenaltySpec, SymMat};

/// Penalty values written out from the family definitions. The hard penalty
/// carries the ½ that makes its proximal map keep entries above `λ`.
pub fn penalty(spec: &PenaltySpec, x: f64) -> f64 {
    let (l, ax) = (spec.lambda, x.abs());
    match spec.family {
        Family::Soft => l * ax,
        Family::Hard => 0.5 * (l * l - if ax < l { (ax - l) * (ax - l) } else { 0.0 }),
        Family::Scad => {
            let a = spec.scad_a;
            if ax <= l {
                l * ax
            } else if ax <= a * l {
                (2.0 * a * l * ax - ax * ax - l * l) / (2.0 * (a - 1.0))
            } else {
                (a + 1.0) * l * l / 2.0
            }
        }
        Family::Lq => {
            let q = spec.q;
            let beta = 2.0 * (1.0 - q) * l / (2.0 - q);
            let alpha = (l - beta) * beta.powf(1.0 - q) / q;
            alpha * ax.powf(q)
        }
    }
}

pub fn prox_objective(spec: &PenaltySpec, x: f64, z: f64) -> f64 {
    0.5 * (z - x) * (z - x) + penalty(spec, z)
}

/// Grid minimizer of `½(z − x)² + g(z)`: a 1e-4 scan over an interval that
/// covers `[min(0, x), max(0, x)]` with margin, then a 1e-7 scan around the
/// best point. Returns `(argmin, min)`.
pub fn grid_prox(spec: &PenaltySpec, x: f64) -> (f64, f64) {
    let scan = |lo: f64, hi: f64, h: f64| {
        let steps = ((hi - lo) / h).ceil() as usize;
        let mut best = (lo, f64::INFINITY);
        for k in 0..=steps {
            let z = (lo + k as f64 * h).min(hi);
            let v = prox_objective(spec, x, z);
            if v < best.1 {
                best = (z, v);
            }
        }
        // 0 is a kink for every family; include it exactly
        let v0 = prox_objective(spec, x, 0.0);
        if lo <= 0.0 && hi >= 0.0 && v0 <= best.1 {
            best = (0.0, v0);
        }
        best
    };
    let (lo, hi) = (x.min(0.0) - 0.5, x.max(0.0) + 0.5);
    let coarse = scan(lo, hi, 1e-4);
    scan(coarse.0 - 2e-4, coarse.0 + 2e-4, 1e-7)
}

/// Smallest eigenvalue of `[[1, x, y], [x, 1, x], [y, x, 1]]`: `(1, 0, −1)`
/// gives `1 − y`, the symmetric pair gives `1 + y/2 ± sqrt(y²/4 + 2x²)`.
pub fn min_eig_persym3(x: f64, y: f64) -> f64 {
    (1.0 - y).min(1.0 + y / 2.0 - (y * y / 4.0 + 2.0 * x * x).sqrt())
}

/// Brute-force solution of the d = 3 soft-penalized correlation problem
/// with eigenvalue floor `eps` for `S` with `S₁₂ = S₂₃ = a`, `S₁₃ = b`. The
/// reflection `1 ↔ 3` leaves the convex problem invariant, so its solution
/// has `Θ₁₂ = Θ₂₃ = x`, `Θ₁₃ = y` and minimizes
/// `2(x − a)² + (y − b)² + 2λ(2|x| + |y|)` over the feasible `(x, y)`.
pub fn grid_d3_soft(a: f64, b: f64, lambda: f64, eps: f64) -> (f64, f64) {
    let f = |x: f64, y: f64| 2.0 * (x - a).powi(2) + (y - b).powi(2) + 2.0 * lambda * (2.0 * x.abs() + y.abs());
    let scan = |x0: f64, x1: f64, y0: f64, y1: f64, h: f64| {
        let (nx, ny) = (((x1 - x0) / h).round() as usize, ((y1 - y0) / h).round() as usize);
        let mut best = (f64::NAN, f64::NAN, f64::INFINITY);
        for i in 0..=nx {
            let x = x0 + i as f64 * h;
            for j in 0..=ny {
                let y = y0 + j as f64 * h;
                if min_eig_persym3(x, y) < eps {
                    continue;
                }
                let v = f(x, y);
                if v < best.2 {
                    best = (x, y, v);
                }
            }
        }
        best
    };
    let c = scan(-1.0, 1.0, -1.0, 1.0, 1e-3);
    let r = scan(c.0 - 2e-3, c.0 + 2e-3, c.1 - 2e-3, c.1 + 2e-3, 1e-6);
    (r.0, r.1)
}

fn jacobi_eig(m: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.len();
    let mut a = m.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// Projection onto the PSD cone via a Jacobi eigensolver.
pub fn psd_part(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let (vals, vecs) = jacobi_eig(m);
    let mut out = vec![vec![0.0; n]; n];
    for k in 0..n {
        let w = vals[k].max(0.0);
        for i in 0..n {
            for j in 0..n {
                out[i][j] += w * vecs[i][k] * vecs[j][k];
            }
        }
    }
    out
}

pub fn min_eig_jacobi(m: &[Vec<f64>]) -> f64 {
    jacobi_eig(m).0.into_iter().fold(f64::INFINITY, f64::min)
}

/// Dual projected gradient for `min ½‖Y − Σ‖² + λΣ_{i≠j}|Σ_ij|` s.t. `Σ ⪰ εI`.
/// For a multiplier `Λ ⪰ 0` the inner minimizer is the off-diagonal soft
/// threshold of `Y + Λ`; the dual gradient is `εI − Σ(Λ)` with Lipschitz
/// constant 1, so unit steps with projection onto the PSD cone converge.
pub fn dual_pg_sketch_identity(y: &[Vec<f64>], lambda: f64, eps: f64, iters: usize) -> Vec<Vec<f64>> {
    let n = y.len();
    let inner = |lam: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let v = y[i][j] + lam[i][j];
                        if i == j {
                            v
                        } else {
                            v.signum() * (v.abs() - lambda).max(0.0)
                        }
                    })
                    .collect()
            })
            .collect()
    };
    let mut lam = vec![vec![0.0; n]; n];
    for _ in 0..iters {
        let sig = inner(&lam);
        let step: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| lam[i][j] - (sig[i][j] - if i == j { eps } else { 0.0 })).collect())
            .collect();
        lam = psd_part(&step);
    }
    inner(&lam)
}

pub fn to_rows(m: &SymMat) -> Vec<Vec<f64>> {
    (0..m.dim()).map(|i| m.row(i).to_vec()).collect()
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n).map(|i| (0..m).map(|j| (0..k).map(|t| a[i][t] * b[t][j]).sum()).collect()).collect()
}

pub fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// Solves `Ax = b` by Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap()).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in (c + 1)..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Solves `GΣG + 2ρΣ = C` (`G` symmetric) through its `d² × d²` Kronecker
/// form `(G ⊗ G + 2ρI)·vec(Σ) = vec(C)`.
pub fn kronecker_normal_solve(g: &[Vec<f64>], c: &[Vec<f64>], rho: f64) -> Vec<Vec<f64>> {
    let d = g.len();
    let mut k = vec![vec![0.0; d * d]; d * d];
    for i in 0..d {
        for j in 0..d {
            for p in 0..d {
                for q in 0..d {
                    // (GΣG)_ij = Σ_pq G_ip Σ_pq G_qj
                    k[i * d + j][p * d + q] = g[i][p] * g[q][j] + if (i, j) == (p, q) { 2.0 * rho } else { 0.0 };
                }
            }
        }
    }
    let rhs: Vec<f64> = c.iter().flatten().copied().collect();
    let x = dense_solve(k, rhs);
    (0..d).map(|i| x[i * d..(i + 1) * d].to_vec()).collect()
}
