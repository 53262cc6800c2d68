//! Slow, independent reference implementations used to cross-check the
//! production solvers. None of these share code paths with the modules they
//! check: no nalgebra factorizations, no Cholesky reduction, no simplex.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::lp::LinearProgram;
use crate::natural_norm::{ControlPoint, SupremizerSet};
use crate::truth::AffineOperator;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub witness: Vec<f64>,
    pub method: &'static str,
}

const LP_MAX_VARS: usize = 5;
const LP_MAX_CONSTRAINTS: usize = 12;

/// Minimum of an LP by enumerating every intersection of `Q` hyperplanes
/// drawn from the constraints and box faces. `None` means infeasible.
pub fn lp_vertex_oracle(lp: &LinearProgram) -> Result<Option<OracleResult>> {
    let q = lp.num_vars();
    let m = lp.constraints.len();
    if q > LP_MAX_VARS || m > LP_MAX_CONSTRAINTS {
        return Err(Error::TooLarge {
            vars: q,
            constraints: m,
        });
    }
    let mut planes: Vec<(Vec<f64>, f64)> = lp
        .constraints
        .iter()
        .map(|c| (c.coeffs.clone(), c.rhs))
        .collect();
    for i in 0..q {
        let mut e = vec![0.0; q];
        e[i] = 1.0;
        planes.push((e.clone(), lp.lower[i]));
        planes.push((e, lp.upper[i]));
    }
    let scale = planes
        .iter()
        .flat_map(|(a, b)| a.iter().chain(std::iter::once(b)))
        .fold(1.0f64, |s, v| s.max(v.abs()));
    let tol = 1e-9 * scale;

    let mut best: Option<OracleResult> = None;
    let mut pick: Vec<usize> = (0..q).collect();
    loop {
        let a: Vec<Vec<f64>> = pick.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<f64> = pick.iter().map(|&i| planes[i].1).collect();
        if let Some(y) = gauss_solve(a, b) {
            let inside_box = (0..q).all(|i| y[i] >= lp.lower[i] - tol && y[i] <= lp.upper[i] + tol);
            let feasible = inside_box
                && lp.constraints.iter().all(|c| {
                    c.coeffs.iter().zip(&y).map(|(a, v)| a * v).sum::<f64>() >= c.rhs - tol
                });
            if feasible {
                let value = lp.value(&y);
                if best.as_ref().is_none_or(|r| value < r.value) {
                    best = Some(OracleResult {
                        value,
                        witness: y,
                        method: "vertex-enumeration",
                    });
                }
            }
        }
        if !next_combination(&mut pick, planes.len()) {
            break;
        }
    }
    Ok(best)
}

fn next_combination(pick: &mut [usize], n: usize) -> bool {
    let k = pick.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if pick[i] < n - k + i {
            pick[i] += 1;
            for j in i + 1..k {
                pick[j] = pick[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Gaussian elimination with partial pivoting; `None` if (near) singular.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let norm = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() <= 1e-12 * norm.max(1e-300) {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns ascending eigenvalues and the matching eigenvectors as columns.
pub fn jacobi_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = Matrix::identity(n, n);
    let total = m.norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|j| (0..n).filter(move |&i| i != j).map(move |i| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
            let values = order.iter().map(|&i| m[(i, i)]).collect();
            let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
            return Ok((values, vectors));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::ConvergenceFailure { iterations: 100 })
}

/// `S^{-1/2}` of a symmetric positive definite matrix via [`jacobi_eigen`].
pub fn inverse_sqrt(s: &Matrix) -> Result<Matrix> {
    let (values, vectors) = jacobi_eigen(s)?;
    if let Some(col) = values.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::NotPositiveDefinite { column: col });
    }
    let n = s.nrows();
    let scaled = Matrix::from_fn(n, n, |r, c| vectors[(r, c)] / values[c].sqrt());
    Ok(&scaled * vectors.transpose())
}

/// All eigenvalues of `lhs v = λ rhs v`, ascending, via symmetric
/// square-root whitening and Jacobi.
pub fn pencil_eigenvalues(lhs: &Matrix, rhs: &Matrix) -> Result<Vec<f64>> {
    let w = inverse_sqrt(rhs)?;
    let k = &w * lhs * &w;
    let k = (&k + k.transpose()) * 0.5;
    Ok(jacobi_eigen(&k)?.0)
}

/// Singular values of `a`, ascending, by one-sided (Hestenes) Jacobi.
pub fn jacobi_singular_values(a: &Matrix) -> Result<Vec<f64>> {
    let n = a.ncols();
    let mut u = a.clone();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for k in 0..u.nrows() {
                    alpha += u[(k, p)] * u[(k, p)];
                    beta += u[(k, q)] * u[(k, q)];
                    gamma += u[(k, p)] * u[(k, q)];
                }
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..u.nrows() {
                    let ukp = u[(k, p)];
                    let ukq = u[(k, q)];
                    u[(k, p)] = c * ukp - s * ukq;
                    u[(k, q)] = s * ukp + c * ukq;
                }
            }
        }
        if !rotated {
            let mut s: Vec<f64> = (0..n).map(|j| u.column(j).norm()).collect();
            s.sort_by(f64::total_cmp);
            return Ok(s);
        }
    }
    Err(Error::ConvergenceFailure { iterations: 80 })
}

const BRUTEFORCE_MAX_DIM: usize = 1200;

/// `β(μ)` as the smallest singular value of `X^{-1/2} A(μ) X^{-1/2}`.
pub fn beta_bruteforce(op: &AffineOperator, mu: &[f64]) -> Result<OracleResult> {
    if op.dim() > BRUTEFORCE_MAX_DIM {
        return Err(Error::TooLarge {
            vars: op.dim(),
            constraints: 0,
        });
    }
    let a = op.assemble(mu);
    let k = if op.x_is_identity() {
        a
    } else {
        let w = inverse_sqrt(op.xmat())?;
        &w * a * &w
    };
    let s = jacobi_singular_values(&k)?;
    Ok(OracleResult {
        value: s[0],
        witness: mu.to_vec(),
        method: "one-sided-jacobi-svd",
    })
}

/// The natural-norm quotient `a(w, T^μ̄ w; μ) / ‖T^μ̄ w‖²_X` for one `w`.
pub fn natural_quotient(cp: &ControlPoint, sup: &SupremizerSet<'_>, mu: &[f64], w: &Vector) -> f64 {
    let op = sup.op();
    let tw = cp.tbar() * w;
    let num = tw.dot(&(op.assemble(mu) * w));
    let den = tw.dot(&(op.xmat() * &tw));
    num / den
}

/// Smallest natural-norm quotient over `samples` Gaussian random vectors,
/// plus any `extra` vectors supplied by the caller.
pub fn rayleigh_sampler(
    cp: &ControlPoint,
    sup: &SupremizerSet<'_>,
    mu: &[f64],
    samples: usize,
    seed: u64,
    extra: &[Vector],
) -> Result<OracleResult> {
    if samples == 0 && extra.is_empty() {
        return Err(Error::Invalid("rayleigh_sampler needs at least one sample".into()));
    }
    let n = sup.op().dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = OracleResult {
        value: f64::INFINITY,
        witness: Vec::new(),
        method: "rayleigh-sampling",
    };
    let randoms = (0..samples).map(|_| Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal)));
    for w in extra.iter().cloned().chain(randoms) {
        let v = natural_quotient(cp, sup, mu, &w);
        if v < best.value {
            best.value = v;
            best.witness = w.iter().copied().collect();
        }
    }
    Ok(best)
}

/// Chebyshev first-derivative matrix built from the barycentric formula,
/// independent of the production construction.
fn cheb_d(n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let x: Vec<f64> = (0..=n)
        .map(|j| (std::f64::consts::PI * j as f64 / n as f64).cos())
        .collect();
    let w: Vec<f64> = (0..=n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                0.5 * s
            } else {
                s
            }
        })
        .collect();
    let mut d = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[i][j] = w[j] / w[i] / (x[i] - x[j]);
            }
        }
        d[i][i] = -(0..=n).filter(|&j| j != i).map(|j| d[i][j]).sum::<f64>();
    }
    (x, d)
}

/// `A(μ)` assembled entry by entry from the variable-coefficient operator
/// `c_xx(x,y) u_xx + c_yy(x,y) u_yy + c_0 u` without an affine split.
pub fn direct_collocation(
    n: usize,
    cxx: impl Fn(f64, f64) -> f64,
    cyy: impl Fn(f64, f64) -> f64,
    c0: f64,
) -> Matrix {
    let (x, d) = cheb_d(n);
    let d2: Vec<Vec<f64>> = (0..=n)
        .map(|i| {
            (0..=n)
                .map(|j| (0..=n).map(|k| d[i][k] * d[k][j]).sum())
                .collect()
        })
        .collect();
    let m = n - 1;
    let mut a = Matrix::zeros(m * m, m * m);
    for ix in 0..m {
        for iy in 0..m {
            let row = ix * m + iy;
            let (px, py) = (x[ix + 1], x[iy + 1]);
            for j in 0..m {
                a[(row, j * m + iy)] += cxx(px, py) * d2[ix + 1][j + 1];
                a[(row, ix * m + j)] += cyy(px, py) * d2[iy + 1][j + 1];
            }
            a[(row, row)] += c0;
        }
    }
    a
}

/// First benchmark operator at `μ` by direct assembly.
pub fn direct_problem1(n: usize, mu: &[f64]) -> Matrix {
    direct_collocation(n, |_, _| -1.0, |_, _| -mu[0], -mu[1])
}

/// Second benchmark operator at `μ` by direct assembly.
pub fn direct_problem2(n: usize, mu: &[f64]) -> Matrix {
    direct_collocation(n, |x, _| 1.0 + mu[0] * x, |_, y| 1.0 + mu[1] * y, 0.0)
}
