//! Supremizers, exact inf-sup and continuity constants, and the
//! natural-norm surrogate anchored at a control point.
//!
//! With `T^μ̄ = B`, the surrogate is the smallest eigenvalue of the pencil
//! `(sym(Bᵀ X T^μ), Bᵀ X B)`. Writing `M_q = sym(Bᵀ A_q)` and factoring
//! `G = Bᵀ X B = L Lᵀ` once per control point, each evaluation reduces to
//! the standard problem
//!
//! `C(μ) = I + Σ_q (Θ_q(μ) − Θ_q(μ̄)) L⁻¹ M_q L⁻ᵀ`,
//!
//! which equals the identity exactly at `μ = μ̄`.

use crate::error::{Error, Result};
use crate::linalg::{
    self, CholeskyReduction, Extreme, Matrix, SymmetricPencil, Vector,
};
use crate::truth::{combine, AffineOperator};

/// `T_q = X⁻¹ A_q`, so that `(T_q w, v)_X = a_q(w, v)`.
#[derive(Debug, Clone)]
pub struct SupremizerSet<'a> {
    op: &'a AffineOperator,
    tq: Vec<Matrix>,
    xfactor: Option<CholeskyReduction>,
}

pub fn build_supremizers(op: &AffineOperator) -> Result<SupremizerSet<'_>> {
    let (tq, xfactor) = if op.x_is_identity() {
        (op.terms().to_vec(), None)
    } else {
        let tq = op
            .terms()
            .iter()
            .map(|a| linalg::solve_linear(op.xmat(), a))
            .collect::<Result<Vec<_>>>()?;
        (tq, Some(CholeskyReduction::new(op.xmat())?))
    };
    Ok(SupremizerSet { op, tq, xfactor })
}

impl<'a> SupremizerSet<'a> {
    pub fn op(&self) -> &'a AffineOperator {
        self.op
    }

    pub fn tq(&self) -> &[Matrix] {
        &self.tq
    }

    /// `T^μ = Σ Θ_q(μ) T_q`.
    pub fn t_mu(&self, mu: &[f64]) -> Matrix {
        combine(&self.op.theta(mu), &self.tq)
    }

    /// `(u, v)_X`.
    pub fn x_inner(&self, u: &Vector, v: &Vector) -> f64 {
        if self.op.x_is_identity() {
            u.dot(v)
        } else {
            u.dot(&(self.op.xmat() * v))
        }
    }

    /// The operator `A(μ)` in X-orthonormal coordinates, `L⁻¹ A(μ) L⁻ᵀ`
    /// with `X = L Lᵀ`. Its singular values are the X-norm singular values.
    pub fn whitened(&self, mu: &[f64]) -> Matrix {
        let a = self.op.assemble(mu);
        match &self.xfactor {
            None => a,
            Some(red) => {
                let l = red.factor();
                let half = l.solve_lower_triangular(&a).expect("X factor is nonsingular");
                l.solve_lower_triangular(&half.transpose())
                    .expect("X factor is nonsingular")
                    .transpose()
            }
        }
    }

    /// `β(μ)` and a unit-X-norm minimizer `w` of `‖T^μ w‖_X / ‖w‖_X`.
    pub fn beta_exact_pair(&self, mu: &[f64]) -> Result<(f64, Vector)> {
        let k = self.whitened(mu);
        let (sigma, v) = linalg::smallest_singular_pair(&k)?;
        let w = match &self.xfactor {
            None => v,
            Some(red) => red.back_transform(&v),
        };
        Ok((sigma, w))
    }
}

/// `β(μ) = inf_w ‖T^μ w‖_X / ‖w‖_X`, the smallest X-norm singular value of
/// `A(μ)`.
///
/// Computed from the singular values of the X-whitened operator rather than
/// the eigenvalues of `(T^μ)ᵀ X T^μ`, which would square the condition number.
pub fn beta_exact(sup: &SupremizerSet<'_>, mu: &[f64]) -> Result<f64> {
    linalg::smallest_singular_value(&sup.whitened(mu))
}

/// `γ_q = sup_w ‖T_q w‖_X / ‖w‖_X` for every term.
pub fn gamma_q(sup: &SupremizerSet<'_>) -> Result<Vec<f64>> {
    let x = sup.op.xmat();
    sup.tq
        .iter()
        .map(|t| {
            let lhs = if sup.op.x_is_identity() {
                t.transpose() * t
            } else {
                t.transpose() * x * t
            };
            let p = SymmetricPencil::new(linalg::symmetrize(&lhs), x.clone())?;
            Ok(linalg::largest_eigenpair(&p)?.value.max(0.0).sqrt())
        })
        .collect()
}

/// `B_μ̄ = Π_q [−γ_q/β(μ̄), γ_q/β(μ̄)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    pub gamma: Vec<f64>,
    pub beta_ref: f64,
}

impl BoundingBox {
    pub fn new(gamma: Vec<f64>, beta_ref: f64) -> Self {
        Self { gamma, beta_ref }
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.gamma.iter().map(|g| g / self.beta_ref).collect()
    }

    pub fn contains(&self, y: &[f64], slack: f64) -> bool {
        y.iter()
            .zip(self.half_widths())
            .all(|(v, h)| v.abs() <= h * (1.0 + slack))
    }
}

/// Everything needed to evaluate the natural-norm surrogate around `μ̄`.
#[derive(Debug, Clone)]
pub struct ControlPoint {
    mubar: Vec<f64>,
    theta_bar: Vec<f64>,
    beta: f64,
    beta_minimizer: Vector,
    tbar: Matrix,
    gram: CholeskyReduction,
    reduced: Vec<Matrix>,
}

impl ControlPoint {
    pub fn new(sup: &SupremizerSet<'_>, mubar: &[f64]) -> Result<Self> {
        let op = sup.op();
        let degenerate = |reason: String| Error::ControlPointDegenerate {
            mu: mubar.to_vec(),
            reason,
        };
        let (beta, beta_minimizer) = sup.beta_exact_pair(mubar)?;
        if !(beta > 0.0) {
            return Err(degenerate(format!("beta = {beta:e}")));
        }
        let theta_bar = op.theta(mubar);
        let tbar = sup.t_mu(mubar);
        let tbar_t = tbar.transpose();
        // Bᵀ X T_q = Bᵀ A_q
        let forms: Vec<Matrix> = op
            .terms()
            .iter()
            .map(|a| linalg::symmetrize(&(&tbar_t * a)))
            .collect();
        let gram = combine(&theta_bar, &forms);
        let gram = CholeskyReduction::new(&gram)
            .map_err(|_| degenerate("natural-norm Gram matrix is not SPD".into()))?;
        let reduced = forms.iter().map(|m| gram.reduce(m)).collect();
        Ok(Self {
            mubar: mubar.to_vec(),
            theta_bar,
            beta,
            beta_minimizer,
            tbar,
            gram,
            reduced,
        })
    }

    pub fn mubar(&self) -> &[f64] {
        &self.mubar
    }

    /// `β(μ̄)`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `T^μ̄`.
    pub fn tbar(&self) -> &Matrix {
        &self.tbar
    }

    /// `(T^μ̄)ᵀ X T^μ̄`, reconstructed from its factor.
    pub fn gram(&self) -> Matrix {
        let l = self.gram.factor();
        l * l.transpose()
    }

    /// The natural-norm pencil at `μ` in its unreduced form.
    pub fn pencil(&self, sup: &SupremizerSet<'_>, mu: &[f64]) -> Result<SymmetricPencil> {
        let lhs = linalg::symmetrize(&(self.tbar.transpose() * sup.op().assemble(mu)));
        SymmetricPencil::new(lhs, linalg::symmetrize(&self.gram()))
    }

    fn reduced_at(&self, theta: &[f64]) -> Matrix {
        let n = self.tbar.nrows();
        let mut c = Matrix::identity(n, n);
        for ((t, tb), cq) in theta.iter().zip(&self.theta_bar).zip(&self.reduced) {
            let delta = t - tb;
            if delta != 0.0 {
                c += cq * delta;
            }
        }
        c
    }

    /// `β̄_μ̄(μ)` and a minimizing `w*` normalized to `‖T^μ̄ w*‖_X = 1`.
    ///
    /// At `μ = μ̄` every `w` attains the minimum 1; the returned `w*` is then
    /// the minimizer of `β(μ̄)` itself.
    pub fn beta_bar(&self, op: &AffineOperator, mu: &[f64]) -> Result<(f64, Vector)> {
        let theta = op.theta(mu);
        if theta == self.theta_bar {
            let w = &self.beta_minimizer;
            let z = self.gram.factor().transpose() * w;
            return Ok((1.0, w / z.norm()));
        }
        let c = self.reduced_at(&theta);
        let (value, z) = linalg::symmetric_extreme_eigenpair(&c, Extreme::Smallest)?;
        Ok((value, self.gram.back_transform(&z)))
    }

    /// `y_q(w) = a_q(w, T^μ̄ w) / ‖T^μ̄ w‖²_X`.
    pub fn y_of_w(&self, w: &Vector, sup: &SupremizerSet<'_>) -> Result<Vec<f64>> {
        let z = self.gram.factor().transpose() * w;
        let zz = z.norm_squared();
        let wx = sup.x_inner(w, w).sqrt();
        let ratio = zz.sqrt() / wx;
        if !(ratio > 1e-14) {
            return Err(Error::DegenerateVector { ratio });
        }
        Ok(self
            .reduced
            .iter()
            .map(|cq| z.dot(&(cq * &z)) / zz)
            .collect())
    }
}

/// `J(y; μ) = Σ Θ_q(μ) y_q`.
pub fn objective(theta: &[f64], y: &[f64]) -> f64 {
    theta.iter().zip(y).map(|(t, v)| t * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::truth::{assemble_problem1, ParameterDomain, ThetaFn};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single_term(a: Matrix, x: Matrix, theta: ThetaFn) -> AffineOperator {
        AffineOperator::new(
            vec![theta],
            vec![a],
            x,
            ParameterDomain::new(vec![[0.5, 2.0]]).unwrap(),
        )
        .unwrap()
    }

    fn diag(v: &[f64]) -> Matrix {
        Matrix::from_diagonal(&Vector::from_vec(v.to_vec()))
    }

    #[test]
    fn supremizers_for_identity_and_scaled_x() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let op = single_term(a.clone(), Matrix::identity(2, 2), ThetaFn::constant(1.0, 1));
        assert_eq!(build_supremizers(&op).unwrap().tq()[0], a);
        let op = single_term(a.clone(), Matrix::identity(2, 2) * 2.0, ThetaFn::constant(1.0, 1));
        let sup = build_supremizers(&op).unwrap();
        assert!((&sup.tq()[0] - a / 2.0).amax() < 1e-15);
    }

    #[test]
    fn beta_and_gamma_of_simple_operators() {
        let op = single_term(Matrix::identity(3, 3), Matrix::identity(3, 3), ThetaFn::constant(1.0, 1));
        let sup = build_supremizers(&op).unwrap();
        assert!((beta_exact(&sup, &[1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((gamma_q(&sup).unwrap()[0] - 1.0).abs() < 1e-14);

        let op = single_term(diag(&[2.0, 3.0]), Matrix::identity(2, 2), ThetaFn::constant(1.0, 1));
        let sup = build_supremizers(&op).unwrap();
        assert!((beta_exact(&sup, &[1.0]).unwrap() - 2.0).abs() < 1e-14);
        assert!((gamma_q(&sup).unwrap()[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn beta_bar_single_term_is_theta_ratio() {
        let op = single_term(diag(&[2.0, 3.0, 5.0]), Matrix::identity(3, 3), ThetaFn::coordinate(0, 1));
        let sup = build_supremizers(&op).unwrap();
        let cp = ControlPoint::new(&sup, &[1.5]).unwrap();
        assert!((cp.beta() - 3.0).abs() < 1e-14);
        for mu in [0.5, 1.0, 1.5, 2.0] {
            let (bb, w) = cp.beta_bar(&op, &[mu]).unwrap();
            assert!((bb - mu / 1.5).abs() < 1e-14, "mu = {mu}");
            let y = cp.y_of_w(&w, &sup).unwrap();
            assert!((y[0] - 1.0 / 1.5).abs() < 1e-14);
        }
    }

    #[test]
    fn beta_bar_is_one_at_control_point() {
        let op = assemble_problem1(8, Default::default()).unwrap();
        let sup = build_supremizers(&op).unwrap();
        let cp = ControlPoint::new(&sup, &[1.0, 0.5]).unwrap();
        let (bb, w) = cp.beta_bar(&op, &[1.0, 0.5]).unwrap();
        assert_eq!(bb, 1.0);
        let y = cp.y_of_w(&w, &sup).unwrap();
        assert!((objective(&op.theta(&[1.0, 0.5]), &y) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn y_of_w_rejects_zero_vector() {
        let op = assemble_problem1(6, Default::default()).unwrap();
        let sup = build_supremizers(&op).unwrap();
        let cp = ControlPoint::new(&sup, &[1.0, 0.5]).unwrap();
        let w = Vector::zeros(op.dim());
        assert!(cp.y_of_w(&w, &sup).is_err());
    }

    #[test]
    fn y_matches_rayleigh_quotient_and_box() {
        let op = assemble_problem1(8, Default::default()).unwrap();
        let sup = build_supremizers(&op).unwrap();
        let cp = ControlPoint::new(&sup, &[2.0, 1.0]).unwrap();
        let bx = BoundingBox::new(gamma_q(&sup).unwrap(), cp.beta());
        let mu = [1.2, 0.1];
        let p = cp.pencil(&sup, &mu).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let w = Vector::from_fn(op.dim(), |_, _| rng.gen_range(-1.0..1.0));
            let y = cp.y_of_w(&w, &sup).unwrap();
            let rq = w.dot(&(p.lhs() * &w)) / w.dot(&(p.rhs() * &w));
            assert!((objective(&op.theta(&mu), &y) - rq).abs() < 1e-9 * rq.abs().max(1.0));
            assert!(bx.contains(&y, 1e-12));
        }
    }
}
