//! Affine truth discretizations on the Chebyshev square.
//!
//! Both benchmark operators are collocated on the tensor grid of Chebyshev
//! points on `(−1, 1)²`. Dirichlet boundary rows and columns are dropped, so
//! unknowns live on the `(n − 1)²` interior nodes, ordered x-major:
//! `k = ix·(n − 1) + iy`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDomain {
    bounds: Vec<[f64; 2]>,
}

impl ParameterDomain {
    pub fn new(bounds: Vec<[f64; 2]>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Invalid("parameter domain needs at least one axis".into()));
        }
        for (p, [lo, hi]) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Invalid(format!(
                    "parameter axis {p}: interval [{lo}, {hi}] is not a closed interval"
                )));
            }
        }
        Ok(Self { bounds })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    pub fn widths(&self) -> Vec<f64> {
        self.bounds.iter().map(|[lo, hi]| hi - lo).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|[lo, hi]| 0.5 * (lo + hi)).collect()
    }

    pub fn contains(&self, mu: &[f64]) -> bool {
        mu.len() == self.dim()
            && mu
                .iter()
                .zip(&self.bounds)
                .all(|(m, [lo, hi])| *lo <= *m && *m <= *hi)
    }

    pub fn corners(&self) -> Vec<Vec<f64>> {
        let p = self.dim();
        (0..1usize << p)
            .map(|mask| {
                (0..p)
                    .map(|k| self.bounds[k][(mask >> k) & 1])
                    .collect()
            })
            .collect()
    }
}

/// A coefficient function `Θ(μ) = offset + slopes·μ`.
///
/// Both benchmark problems (and any operator loaded from file) use
/// coefficients of this form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaFn {
    pub offset: f64,
    pub slopes: Vec<f64>,
}

impl ThetaFn {
    pub fn constant(value: f64, dim: usize) -> Self {
        Self {
            offset: value,
            slopes: vec![0.0; dim],
        }
    }

    /// `Θ(μ) = μ_p`.
    pub fn coordinate(p: usize, dim: usize) -> Self {
        let mut slopes = vec![0.0; dim];
        slopes[p] = 1.0;
        Self { offset: 0.0, slopes }
    }

    pub fn eval(&self, mu: &[f64]) -> f64 {
        self.offset + self.slopes.iter().zip(mu).map(|(s, m)| s * m).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum XNorm {
    /// Discrete ℓ² inner product.
    #[default]
    Identity,
    /// `I + D_xᵀ D_x + D_yᵀ D_y`, a symmetric discrete H¹ surrogate.
    H1Surrogate,
}

/// `a(w, v; μ) = Σ_q Θ_q(μ) vᵀ A_q w` together with the X inner product.
#[derive(Debug, Clone)]
pub struct AffineOperator {
    theta: Vec<ThetaFn>,
    terms: Vec<Matrix>,
    xmat: Matrix,
    x_is_identity: bool,
    domain: ParameterDomain,
}

impl AffineOperator {
    pub fn new(
        theta: Vec<ThetaFn>,
        terms: Vec<Matrix>,
        xmat: Matrix,
        domain: ParameterDomain,
    ) -> Result<Self> {
        if theta.is_empty() || theta.len() != terms.len() {
            return Err(Error::Invalid(format!(
                "affine operator needs matching theta/terms, got {} and {}",
                theta.len(),
                terms.len()
            )));
        }
        let n = xmat.nrows();
        if xmat.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: (n, n),
                got: xmat.shape(),
            });
        }
        for t in &terms {
            if t.shape() != (n, n) {
                return Err(Error::DimensionMismatch {
                    expected: (n, n),
                    got: t.shape(),
                });
            }
            if !t.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        for th in &theta {
            if th.slopes.len() != domain.dim() {
                return Err(Error::Invalid(format!(
                    "theta slope length {} does not match parameter dimension {}",
                    th.slopes.len(),
                    domain.dim()
                )));
            }
        }
        let asym = crate::linalg::relative_asymmetry(&xmat);
        if asym > crate::linalg::SYMMETRY_TOL {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        crate::linalg::cholesky(&xmat)?;
        let x_is_identity = xmat == Matrix::identity(n, n);
        Ok(Self {
            theta,
            terms,
            xmat,
            x_is_identity,
            domain,
        })
    }

    pub fn q(&self) -> usize {
        self.terms.len()
    }

    pub fn dim(&self) -> usize {
        self.xmat.nrows()
    }

    pub fn terms(&self) -> &[Matrix] {
        &self.terms
    }

    pub fn theta_fns(&self) -> &[ThetaFn] {
        &self.theta
    }

    pub fn xmat(&self) -> &Matrix {
        &self.xmat
    }

    pub fn x_is_identity(&self) -> bool {
        self.x_is_identity
    }

    pub fn domain(&self) -> &ParameterDomain {
        &self.domain
    }

    pub fn theta(&self, mu: &[f64]) -> Vec<f64> {
        self.theta.iter().map(|t| t.eval(mu)).collect()
    }

    /// `A(μ) = Σ Θ_q(μ) A_q`.
    pub fn assemble(&self, mu: &[f64]) -> Matrix {
        combine(&self.theta(mu), &self.terms)
    }
}

/// `Σ c_q M_q`.
pub fn combine(coeffs: &[f64], mats: &[Matrix]) -> Matrix {
    let mut out = Matrix::zeros(mats[0].nrows(), mats[0].ncols());
    for (c, m) in coeffs.iter().zip(mats) {
        if *c != 0.0 {
            out += m * *c;
        }
    }
    out
}

/// Chebyshev points `x_j = cos(jπ/n)`, `j = 0..=n`.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (0..=n).map(|j| (j as f64 * PI / n as f64).cos()).collect()
}

/// The `(n+1)×(n+1)` first-derivative collocation matrix on Chebyshev points.
///
/// Off-diagonal entries use the closed form; diagonal entries are the
/// negative row sums, which makes the matrix annihilate constants exactly.
pub fn chebyshev_diff_matrix(n: usize) -> Result<Matrix> {
    if n < 2 {
        return Err(Error::Invalid(format!("Chebyshev differentiation needs n >= 2, got {n}")));
    }
    let x = chebyshev_nodes(n);
    let weight = |j: usize| {
        let c = if j == 0 || j == n { 2.0 } else { 1.0 };
        if j.is_multiple_of(2) {
            c
        } else {
            -c
        }
    };
    let mut d = Matrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        let mut row_sum = 0.0;
        for j in 0..=n {
            if i != j {
                let v = weight(i) / weight(j) / (x[i] - x[j]);
                d[(i, j)] = v;
                row_sum += v;
            }
        }
        d[(i, i)] = -row_sum;
    }
    Ok(d)
}

fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = Matrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Interior blocks of the Chebyshev differentiation operators on the square.
#[derive(Debug, Clone)]
pub struct CollocationGrid {
    pub n: usize,
    /// Interior node coordinates along one axis.
    pub interior: Vec<f64>,
    pub dx: Matrix,
    pub dy: Matrix,
    pub dxx: Matrix,
    pub dyy: Matrix,
}

impl CollocationGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::Invalid(format!("truth resolution needs n >= 4, got {n}")));
        }
        let d = chebyshev_diff_matrix(n)?;
        let d2 = &d * &d;
        let m = n - 1;
        let d1_int = d.view((1, 1), (m, m)).into_owned();
        let d2_int = d2.view((1, 1), (m, m)).into_owned();
        let eye = Matrix::identity(m, m);
        let interior = chebyshev_nodes(n)[1..n].to_vec();
        Ok(Self {
            n,
            interior,
            dx: kron(&d1_int, &eye),
            dy: kron(&eye, &d1_int),
            dxx: kron(&d2_int, &eye),
            dyy: kron(&eye, &d2_int),
        })
    }

    pub fn unknowns(&self) -> usize {
        self.dxx.nrows()
    }

    /// x coordinate of every unknown.
    pub fn x_coords(&self) -> Vector {
        let m = self.interior.len();
        Vector::from_fn(m * m, |k, _| self.interior[k / m])
    }

    /// y coordinate of every unknown.
    pub fn y_coords(&self) -> Vector {
        let m = self.interior.len();
        Vector::from_fn(m * m, |k, _| self.interior[k % m])
    }

    pub fn xmat(&self, xnorm: XNorm) -> Matrix {
        let n = self.unknowns();
        match xnorm {
            XNorm::Identity => Matrix::identity(n, n),
            XNorm::H1Surrogate => {
                let x = Matrix::identity(n, n)
                    + self.dx.transpose() * &self.dx
                    + self.dy.transpose() * &self.dy;
                crate::linalg::symmetrize(&x)
            }
        }
    }
}

fn row_scale(diag: &Vector, m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= diag[i];
    }
    out
}

/// `−u_xx − μ¹u_yy − μ²u` on `[0.1, 4] × [0, 2]`.
pub fn assemble_problem1(n: usize, xnorm: XNorm) -> Result<AffineOperator> {
    let grid = CollocationGrid::new(n)?;
    let size = grid.unknowns();
    let domain = ParameterDomain::new(vec![[0.1, 4.0], [0.0, 2.0]])?;
    AffineOperator::new(
        vec![
            ThetaFn::constant(1.0, 2),
            ThetaFn::coordinate(0, 2),
            ThetaFn::coordinate(1, 2),
        ],
        vec![-&grid.dxx, -&grid.dyy, -Matrix::identity(size, size)],
        grid.xmat(xnorm),
        domain,
    )
}

/// `(1 + μ¹x)u_xx + (1 + μ²y)u_yy` on `[−0.99, 0.99]²`.
///
/// The two parameter-independent pieces are merged into one term, so Q = 3.
pub fn assemble_problem2(n: usize, xnorm: XNorm) -> Result<AffineOperator> {
    let grid = CollocationGrid::new(n)?;
    let domain = ParameterDomain::new(vec![[-0.99, 0.99], [-0.99, 0.99]])?;
    AffineOperator::new(
        vec![
            ThetaFn::constant(1.0, 2),
            ThetaFn::coordinate(0, 2),
            ThetaFn::coordinate(1, 2),
        ],
        vec![
            &grid.dxx + &grid.dyy,
            row_scale(&grid.x_coords(), &grid.dxx),
            row_scale(&grid.y_coords(), &grid.dyy),
        ],
        grid.xmat(xnorm),
        domain,
    )
}

/// On-disk form of an arbitrary affine operator. Matrices are row-major
/// nested arrays; `xmat` defaults to the identity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorFile {
    pub domain: Vec<[f64; 2]>,
    pub theta: Vec<ThetaFn>,
    pub terms: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub xmat: Option<Vec<Vec<f64>>>,
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Invalid("ragged matrix rows".into()));
    }
    Ok(Matrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl OperatorFile {
    pub fn from_operator(op: &AffineOperator) -> Self {
        Self {
            domain: op.domain().bounds().to_vec(),
            theta: op.theta_fns().to_vec(),
            terms: op.terms().iter().map(matrix_to_rows).collect(),
            xmat: Some(matrix_to_rows(op.xmat())),
        }
    }

    pub fn into_operator(self) -> Result<AffineOperator> {
        let domain = ParameterDomain::new(self.domain)?;
        let terms = self
            .terms
            .iter()
            .map(|t| matrix_from_rows(t))
            .collect::<Result<Vec<_>>>()?;
        let n = terms.first().map_or(0, Matrix::nrows);
        let xmat = match self.xmat {
            Some(rows) => matrix_from_rows(&rows)?,
            None => Matrix::identity(n, n),
        };
        AffineOperator::new(self.theta, terms, xmat, domain)
    }
}

pub fn load_operator(path: &Path) -> Result<AffineOperator> {
    let text = std::fs::read_to_string(path)?;
    let file: OperatorFile = serde_json::from_str(&text)?;
    file.into_operator()
}

/// Finite parameter sample with pruning flags.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample {
    points: Vec<Vec<f64>>,
    active: Vec<bool>,
}

impl TrainSample {
    pub fn new(points: Vec<Vec<f64>>) -> Self {
        let active = vec![true; points.len()];
        Self { points, active }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.active[i]).collect()
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn deactivate(&mut self, i: usize) {
        self.active[i] = false;
    }

    pub fn reset(&mut self) {
        self.active.iter_mut().for_each(|a| *a = true);
    }

    /// Index of the point nearest the domain center (first on ties).
    pub fn midpoint_index(&self, domain: &ParameterDomain) -> usize {
        let c = domain.center();
        let mut best = (0, f64::INFINITY);
        for (i, p) in self.points.iter().enumerate() {
            let d: f64 = p.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }
}

/// Tensor grid with endpoints, last axis varying fastest.
pub fn uniform_grid(domain: &ParameterDomain, counts: &[usize]) -> Result<TrainSample> {
    if counts.len() != domain.dim() {
        return Err(Error::Invalid(format!(
            "grid needs {} counts, got {}",
            domain.dim(),
            counts.len()
        )));
    }
    if let Some(c) = counts.iter().find(|c| **c < 2) {
        return Err(Error::Invalid(format!("grid counts must be >= 2, got {c}")));
    }
    let axes: Vec<Vec<f64>> = domain
        .bounds()
        .iter()
        .zip(counts)
        .map(|([lo, hi], &c)| {
            (0..c)
                .map(|k| {
                    if k == c - 1 {
                        *hi
                    } else {
                        lo + (hi - lo) * k as f64 / (c - 1) as f64
                    }
                })
                .collect()
        })
        .collect();
    let total: usize = counts.iter().product();
    let mut points = Vec::with_capacity(total);
    let mut idx = vec![0usize; counts.len()];
    for _ in 0..total {
        points.push(idx.iter().enumerate().map(|(p, &k)| axes[p][k]).collect());
        for p in (0..counts.len()).rev() {
            idx[p] += 1;
            if idx[p] < counts[p] {
                break;
            }
            idx[p] = 0;
        }
    }
    Ok(TrainSample::new(points))
}
