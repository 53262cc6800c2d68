//! Dense matrix kernels and symmetric-definite generalized eigensolvers.
//!
//! Matrices are `nalgebra::DMatrix<f64>`, stored column-major. All tolerances
//! are relative to Frobenius norms so they hold uniformly across the
//! parameter domain, where operator scales can differ by orders of magnitude.
//!
//! A generalized problem `lhs v = λ rhs v` is reduced to the standard
//! symmetric problem `L⁻¹ lhs L⁻ᵀ z = λ z` with `rhs = L Lᵀ`, then
//! `v = L⁻ᵀ z`. The reduction is exposed as [`CholeskyReduction`] so callers
//! evaluating many pencils against one right-hand side can factor it once.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative asymmetry tolerated before an input is rejected as non-symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Pivot threshold for [`solve_linear`], relative to `‖A‖_F`.
pub const PIVOT_TOL: f64 = 1e-14;
/// Residual contract for returned eigenpairs, relative to `‖lhs‖_F ‖v‖`.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

pub fn frobenius(m: &Matrix) -> f64 {
    m.norm()
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &Matrix) -> Matrix {
    let mut s = m.clone();
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

/// `max |M - Mᵀ| / max(‖M‖_F, tiny)`.
pub fn relative_asymmetry(m: &Matrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / frobenius(m).max(f64::MIN_POSITIVE)
}

fn check_square(m: &Matrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: (m.nrows(), m.nrows()),
            got: m.shape(),
        });
    }
    Ok(())
}

fn check_finite(m: &Matrix) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Solves `A C = B` by LU with partial pivoting.
pub fn solve_linear(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_square(a)?;
    if b.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: (a.nrows(), b.ncols()),
            got: b.shape(),
        });
    }
    let threshold = PIVOT_TOL * frobenius(a);
    let lu = a.clone().lu();
    let u = lu.u();
    let min_pivot = u.diagonal().iter().fold(f64::INFINITY, |m, p| m.min(p.abs()));
    if !(min_pivot > threshold) {
        return Err(Error::SingularMatrix { pivot: min_pivot });
    }
    lu.solve(b).ok_or(Error::SingularMatrix { pivot: min_pivot })
}

/// Lower-triangular `L` with `L Lᵀ = A`. Only the lower triangle of `A` is read.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    check_square(a)?;
    let n = a.nrows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { column: j });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Symmetric `lhs` with a symmetric positive-definite `rhs` of equal size.
#[derive(Debug, Clone)]
pub struct SymmetricPencil {
    lhs: Matrix,
    rhs: Matrix,
}

impl SymmetricPencil {
    /// Validates symmetry to [`SYMMETRY_TOL`] and symmetrizes both sides to
    /// absorb roundoff. Definiteness of `rhs` is checked when solving.
    pub fn new(lhs: Matrix, rhs: Matrix) -> Result<Self> {
        check_square(&lhs)?;
        if rhs.shape() != lhs.shape() {
            return Err(Error::DimensionMismatch {
                expected: lhs.shape(),
                got: rhs.shape(),
            });
        }
        check_finite(&lhs)?;
        check_finite(&rhs)?;
        for m in [&lhs, &rhs] {
            let asym = relative_asymmetry(m);
            if asym > SYMMETRY_TOL {
                return Err(Error::NotSymmetric { asymmetry: asym });
            }
        }
        Ok(Self {
            lhs: symmetrize(&lhs),
            rhs: symmetrize(&rhs),
        })
    }

    pub fn lhs(&self) -> &Matrix {
        &self.lhs
    }

    pub fn rhs(&self) -> &Matrix {
        &self.rhs
    }

    pub fn dim(&self) -> usize {
        self.lhs.nrows()
    }

    /// `‖lhs v − λ rhs v‖`.
    pub fn residual(&self, value: f64, vector: &Vector) -> f64 {
        (&self.lhs * vector - (&self.rhs * vector) * value).norm()
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub value: f64,
    /// Normalized so that `vᵀ rhs v = 1`.
    pub vector: Vector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extreme {
    Smallest,
    Largest,
}

/// Cholesky factor of a pencil's right-hand side, reused across many
/// left-hand sides.
#[derive(Debug, Clone)]
pub struct CholeskyReduction {
    factor: Matrix,
}

impl CholeskyReduction {
    pub fn new(rhs: &Matrix) -> Result<Self> {
        let factor = cholesky(&symmetrize(rhs)).map_err(|_| Error::IndefiniteRhs)?;
        Ok(Self { factor })
    }

    pub fn factor(&self) -> &Matrix {
        &self.factor
    }

    /// `sym(L⁻¹ M L⁻ᵀ)`.
    pub fn reduce(&self, m: &Matrix) -> Matrix {
        let l = &self.factor;
        let half = l
            .solve_lower_triangular(m)
            .expect("Cholesky factor has a positive diagonal");
        let full = l
            .solve_lower_triangular(&half.transpose())
            .expect("Cholesky factor has a positive diagonal");
        symmetrize(&full)
    }

    /// `L⁻ᵀ z`.
    pub fn back_transform(&self, z: &Vector) -> Vector {
        self.factor
            .tr_solve_lower_triangular(z)
            .expect("Cholesky factor has a positive diagonal")
    }
}

/// Extreme eigenpair of a symmetric matrix, eigenvector of unit 2-norm.
pub fn symmetric_extreme_eigenpair(c: &Matrix, which: Extreme) -> Result<(f64, Vector)> {
    check_square(c)?;
    check_finite(c)?;
    let n = c.nrows();
    if n == 0 {
        return Err(Error::DimensionMismatch {
            expected: (1, 1),
            got: (0, 0),
        });
    }
    let max_iter = 60 * n.max(10);
    let eig = nalgebra::SymmetricEigen::try_new(symmetrize(c), f64::EPSILON, max_iter)
        .ok_or(Error::ConvergenceFailure {
            iterations: max_iter,
        })?;
    let mut best = 0;
    for k in 1..n {
        let better = match which {
            Extreme::Smallest => eig.eigenvalues[k] < eig.eigenvalues[best],
            Extreme::Largest => eig.eigenvalues[k] > eig.eigenvalues[best],
        };
        if better {
            best = k;
        }
    }
    let mut v = eig.eigenvectors.column(best).into_owned();
    let nv = v.norm();
    v /= nv;
    Ok((eig.eigenvalues[best], v))
}

fn extreme_eigenpair(p: &SymmetricPencil, which: Extreme) -> Result<EigenResult> {
    let red = CholeskyReduction::new(p.rhs())?;
    let c = red.reduce(p.lhs());
    let (value, z) = symmetric_extreme_eigenpair(&c, which)?;
    let mut vector = red.back_transform(&z);
    let scale = vector.dot(&(p.rhs() * &vector)).sqrt();
    vector /= scale;
    let resid = p.residual(value, &vector);
    let bound = EIGEN_RESIDUAL_TOL
        * (frobenius(p.lhs()) + value.abs() * frobenius(p.rhs()))
        * vector.norm();
    if !(resid <= bound) {
        return Err(Error::ConvergenceFailure { iterations: 0 });
    }
    Ok(EigenResult { value, vector })
}

/// Minimal `λ` with `lhs v = λ rhs v`.
pub fn smallest_eigenpair(p: &SymmetricPencil) -> Result<EigenResult> {
    extreme_eigenpair(p, Extreme::Smallest)
}

/// Maximal `λ` with `lhs v = λ rhs v`.
pub fn largest_eigenpair(p: &SymmetricPencil) -> Result<EigenResult> {
    extreme_eigenpair(p, Extreme::Largest)
}

/// Smallest singular value of `a` and its right singular vector (unit 2-norm).
pub fn smallest_singular_pair(a: &Matrix) -> Result<(f64, Vector)> {
    check_square(a)?;
    check_finite(a)?;
    let n = a.nrows();
    let svd = nalgebra::SVD::try_new(a.clone(), false, true, f64::EPSILON, 100 * n.max(10))
        .ok_or(Error::ConvergenceFailure {
            iterations: 100 * n.max(10),
        })?;
    let (k, sigma) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, s)| if s < acc.1 { (i, s) } else { acc });
    let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
    let v = v_t.row(k).transpose();
    Ok((sigma, v))
}

/// Smallest singular value only.
pub fn smallest_singular_value(a: &Matrix) -> Result<f64> {
    check_square(a)?;
    check_finite(a)?;
    let n = a.nrows();
    let svd = nalgebra::SVD::try_new(a.clone(), false, false, f64::EPSILON, 100 * n.max(10))
        .ok_or(Error::ConvergenceFailure {
            iterations: 100 * n.max(10),
        })?;
    Ok(svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min))
}
