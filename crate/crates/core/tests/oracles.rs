//! Production routines checked against the independent oracles.

use approx::assert_relative_eq;
use infsup::certification::{qhat_vector, theta_hat, QhatExpansion};
use infsup::linalg::{smallest_eigenpair, SymmetricPencil};
use infsup::lp::{solve_lp, LinearProgram, LpStatus};
use infsup::natural_norm::{beta_exact, build_supremizers, ControlPoint};
use infsup::oracles::{
    beta_bruteforce, direct_problem1, direct_problem2, lp_vertex_oracle, pencil_eigenvalues,
    rayleigh_sampler,
};
use infsup::truth::{assemble_problem1, assemble_problem2, XNorm};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let q = rng.gen_range(1..=4);
    let m = rng.gen_range(0..=10);
    let obj = (0..q).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let half: Vec<f64> = (0..q).map(|_| rng.gen_range(0.5..5.0)).collect();
    let mut lp = LinearProgram::new(obj, half.iter().map(|h| -h).collect(), half).unwrap();
    for _ in 0..m {
        let a = (0..q).map(|_| rng.gen_range(-2.0..2.0)).collect();
        lp.add_constraint(a, rng.gen_range(-3.0..1.0)).unwrap();
    }
    lp
}

#[test]
fn simplex_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut optimal, mut infeasible) = (0, 0);
    for k in 0..200 {
        let lp = random_lp(&mut rng);
        let sol = solve_lp(&lp).unwrap();
        match lp_vertex_oracle(&lp).unwrap() {
            Some(o) => {
                assert_eq!(sol.status, LpStatus::Optimal, "lp {k}");
                let tol = 1e-10 * o.value.abs().max(1.0);
                assert!((sol.value - o.value).abs() <= tol, "lp {k}: {} vs {}", sol.value, o.value);
                assert!(lp.max_violation(&sol.point) < 1e-9, "lp {k}");
                optimal += 1;
            }
            None => {
                assert_eq!(sol.status, LpStatus::Infeasible, "lp {k}");
                infeasible += 1;
            }
        }
    }
    assert!(optimal > 100, "only {optimal} feasible programs");
    assert!(infeasible > 0);
}

#[test]
fn contradictory_constraints_are_infeasible() {
    let mut lp = LinearProgram::new(vec![1.0, 1.0], vec![-1.0; 2], vec![1.0; 2]).unwrap();
    lp.add_constraint(vec![1.0, 0.0], 0.5).unwrap();
    lp.add_constraint(vec![-1.0, 0.0], -0.2).unwrap();
    assert!(lp_vertex_oracle(&lp).unwrap().is_none());
    assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
}

#[test]
fn svd_inf_sup_matches_jacobi_oracle() {
    for op in [
        assemble_problem1(10, XNorm::Identity).unwrap(),
        assemble_problem2(10, XNorm::Identity).unwrap(),
        assemble_problem1(8, XNorm::H1Surrogate).unwrap(),
    ] {
        let sup = build_supremizers(&op).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..15 {
            let mu: Vec<f64> = op
                .domain()
                .bounds()
                .iter()
                .map(|[a, b]| rng.gen_range(*a..=*b))
                .collect();
            let fast = beta_exact(&sup, &mu).unwrap();
            let slow = beta_bruteforce(&op, &mu).unwrap().value;
            assert_relative_eq!(fast, slow, max_relative = 1e-9);
        }
    }
}

#[test]
fn affine_assembly_matches_direct_collocation() {
    let n = 9;
    let p1 = assemble_problem1(n, XNorm::Identity).unwrap();
    let p2 = assemble_problem2(n, XNorm::Identity).unwrap();
    for mu in [[0.1, 0.0], [4.0, 2.0], [1.3, 0.7]] {
        let d = direct_problem1(n, &mu);
        let a = p1.assemble(&mu);
        assert!((a - &d).norm() <= 1e-10 * d.norm(), "p1 at {mu:?}");
    }
    for mu in [[-0.99, -0.99], [0.99, 0.99], [0.3, -0.4]] {
        let d = direct_problem2(n, &mu);
        let a = p2.assemble(&mu);
        assert!((a - &d).norm() <= 1e-10 * d.norm(), "p2 at {mu:?}");
    }
}

fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    &b * b.transpose() + DMatrix::identity(n, n) * 0.5
}

#[test]
fn smallest_pencil_eigenvalue_matches_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [1, 2, 5, 12, 30] {
        let c = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let lhs = (&c + c.transpose()) * 0.5;
        let rhs = random_spd(n, &mut rng);
        let oracle = pencil_eigenvalues(&lhs, &rhs).unwrap()[0];
        let fast = smallest_eigenpair(&SymmetricPencil::new(lhs, rhs).unwrap()).unwrap();
        assert!((fast.value - oracle).abs() <= 1e-10 * oracle.abs().max(1.0), "n = {n}");
    }
}

#[test]
fn sampled_quotients_never_undercut_beta_bar() {
    let op = assemble_problem2(8, XNorm::Identity).unwrap();
    let sup = build_supremizers(&op).unwrap();
    let cp = ControlPoint::new(&sup, &[0.0, 0.0]).unwrap();
    for mu in [[0.5, 0.5], [-0.9, 0.9], [0.99, -0.99]] {
        let (bb, w) = cp.beta_bar(&op, &mu).unwrap();
        let sampled = rayleigh_sampler(&cp, &sup, &mu, 500, 3, &[]).unwrap();
        assert!(sampled.value >= bb - 1e-10 * bb.abs().max(1.0));
        let with_min = rayleigh_sampler(&cp, &sup, &mu, 0, 3, &[w]).unwrap();
        assert_relative_eq!(with_min.value, bb, max_relative = 1e-9);
    }
}

#[test]
fn qhat_expansion_reproduces_supremizer_norm() {
    let op = assemble_problem1(8, XNorm::H1Surrogate).unwrap();
    let sup = build_supremizers(&op).unwrap();
    assert_eq!(QhatExpansion::new(op.q()).qhat(), 6);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let mu = [rng.gen_range(0.1..4.0), rng.gen_range(0.0..2.0)];
        let w = DVector::from_fn(op.dim(), |_, _| rng.gen_range(-1.0..1.0));
        let tw = sup.t_mu(&mu) * &w;
        let exact = sup.x_inner(&tw, &tw) / sup.x_inner(&w, &w);
        let z = qhat_vector(&sup, &w).unwrap();
        let expanded: f64 = theta_hat(&op, &mu).iter().zip(&z).map(|(a, b)| a * b).sum();
        assert_relative_eq!(expanded, exact, max_relative = 1e-10);
    }
}
