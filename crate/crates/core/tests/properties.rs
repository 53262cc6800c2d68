//! Invariants of the bounds under random parameters, samples and vectors.

use std::sync::LazyLock;

use infsup::certification::{beta_ub_local, BoundRegistry, Subdomain};
use infsup::greedy::make_sample_point;
use infsup::natural_norm::{
    beta_exact, build_supremizers, gamma_q, objective, BoundingBox, ControlPoint,
};
use infsup::scm::{g_lb, g_ub, nearest_points, NeighborRule, SamplePoint, ScmSample};
use infsup::table::{BoundsRow, BoundsTable};
use infsup::truth::{assemble_problem1, assemble_problem2, AffineOperator, XNorm};
use nalgebra::DVector;
use proptest::prelude::*;

static P1: LazyLock<AffineOperator> =
    LazyLock::new(|| assemble_problem1(8, XNorm::Identity).unwrap());
static P2: LazyLock<AffineOperator> =
    LazyLock::new(|| assemble_problem2(8, XNorm::Identity).unwrap());

fn op(which: bool) -> &'static AffineOperator {
    if which {
        &P1
    } else {
        &P2
    }
}

/// A point of the domain from unit coordinates.
fn at(op: &AffineOperator, u: [f64; 2]) -> Vec<f64> {
    op.domain()
        .bounds()
        .iter()
        .zip(u)
        .map(|([a, b], t)| a + t * (b - a))
        .collect()
}

fn unit() -> impl Strategy<Value = [f64; 2]> {
    [0.0..=1.0f64, 0.0..=1.0f64]
}

fn close_enough(a: f64, b: f64) -> bool {
    a <= b + 1e-9 * b.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn local_bounds_sandwich_beta_bar(
        p1 in any::<bool>(),
        centre in unit(),
        pts in prop::collection::vec(unit(), 1..6),
        probe in unit(),
        jnb in prop::option::of(1usize..4),
    ) {
        let op = op(p1);
        let sup = build_supremizers(op).unwrap();
        let cp = ControlPoint::new(&sup, &at(op, centre)).unwrap();
        let bx = BoundingBox::new(gamma_q(&sup).unwrap(), cp.beta());
        let mut sample = ScmSample::new();
        for u in &pts {
            sample.push(make_sample_point(&cp, &sup, &at(op, *u)).unwrap());
        }
        let mu = at(op, probe);
        let rule = NeighborRule { jnb, scale: None };
        let lb = g_lb(&sample, &bx, op, &mu, &rule).unwrap();
        let ub = g_ub(&sample, op, &mu).unwrap();
        let (bb, _) = cp.beta_bar(op, &mu).unwrap();
        prop_assert!(close_enough(lb, bb), "g_lb {lb} > beta_bar {bb}");
        prop_assert!(close_enough(bb, ub), "beta_bar {bb} > g_ub {ub}");

        let beta = beta_exact(&sup, &mu).unwrap();
        prop_assert!(close_enough(cp.beta() * lb, beta));
        prop_assert!(close_enough(beta, beta_ub_local(&sample, op, &mu).unwrap()));
    }

    #[test]
    fn more_constraints_never_loosen_bounds(
        p1 in any::<bool>(),
        centre in unit(),
        pts in prop::collection::vec(unit(), 2..6),
        probe in unit(),
    ) {
        let op = op(p1);
        let sup = build_supremizers(op).unwrap();
        let cp = ControlPoint::new(&sup, &at(op, centre)).unwrap();
        let bx = BoundingBox::new(gamma_q(&sup).unwrap(), cp.beta());
        let mu = at(op, probe);
        let mut sample = ScmSample::new();
        let (mut prev_lb, mut prev_ub, mut prev_beta_ub) =
            (f64::NEG_INFINITY, f64::INFINITY, f64::INFINITY);
        for u in &pts {
            sample.push(make_sample_point(&cp, &sup, &at(op, *u)).unwrap());
            let lb = g_lb(&sample, &bx, op, &mu, &NeighborRule::all()).unwrap();
            let ub = g_ub(&sample, op, &mu).unwrap();
            let beta_ub = beta_ub_local(&sample, op, &mu).unwrap();
            prop_assert!(close_enough(prev_lb, lb));
            prop_assert!(ub <= prev_ub && beta_ub <= prev_beta_ub);
            (prev_lb, prev_ub, prev_beta_ub) = (lb, ub, beta_ub);
        }
    }

    #[test]
    fn translation_inequality(p1 in any::<bool>(), centre in unit(), probe in unit()) {
        let op = op(p1);
        let sup = build_supremizers(op).unwrap();
        let cp = ControlPoint::new(&sup, &at(op, centre)).unwrap();
        let mu = at(op, probe);
        let (bb, _) = cp.beta_bar(op, &mu).unwrap();
        prop_assert!(close_enough(cp.beta() * bb, beta_exact(&sup, &mu).unwrap()));
    }

    #[test]
    fn stored_minimizer_reproduces_beta_bar(
        p1 in any::<bool>(),
        centre in unit(),
        probe in unit(),
        seed in prop::collection::vec(-1.0..1.0f64, 49),
    ) {
        let op = op(p1);
        let sup = build_supremizers(op).unwrap();
        let cp = ControlPoint::new(&sup, &at(op, centre)).unwrap();
        let mu = at(op, probe);
        let (bb, w) = cp.beta_bar(op, &mu).unwrap();
        let y = cp.y_of_w(&w, &sup).unwrap();
        prop_assert!((objective(&op.theta(&mu), &y) - bb).abs() <= 1e-10 * bb.abs().max(1.0));

        // Any other direction gives a quotient no smaller than the minimum.
        let v = DVector::from_vec(seed);
        prop_assume!(v.norm() > 1e-3);
        let yv = cp.y_of_w(&v, &sup).unwrap();
        prop_assert!(close_enough(bb, objective(&op.theta(&mu), &yv)));
    }
}

proptest! {
    #[test]
    fn nearest_points_are_nearest(
        pts in prop::collection::vec([-5.0..5.0f64, -5.0..5.0f64], 1..30),
        mu in [-5.0..5.0f64, -5.0..5.0f64],
        jnb in 1usize..10,
    ) {
        let sample = ScmSample {
            points: pts
                .iter()
                .map(|p| SamplePoint { mu: p.to_vec(), betabar: 1.0, ystar: vec![], qhat: vec![] })
                .collect(),
        };
        let rule = NeighborRule::nearest(jnb);
        let chosen = nearest_points(&sample, &mu, &rule).unwrap();
        prop_assert_eq!(chosen.len(), jnb.min(pts.len()));
        let far = chosen.iter().map(|&j| rule.distance2(&pts[j], &mu)).fold(0.0, f64::max);
        for (j, p) in pts.iter().enumerate() {
            if !chosen.contains(&j) {
                prop_assert!(rule.distance2(p, &mu) >= far);
            }
        }
    }

    #[test]
    fn bounds_table_round_trips(
        rows in prop::collection::vec(
            (prop::array::uniform3(any::<f64>()), any::<f64>(), prop::option::of(any::<f64>())),
            0..20,
        ),
    ) {
        let table = BoundsTable::new(
            rows.iter()
                .map(|([a, b, c], d, t)| BoundsRow {
                    mu: vec![*a, *b],
                    beta_lb: *c,
                    beta_ub: *d,
                    eps: a - b,
                    beta_truth: *t,
                })
                .collect(),
        );
        let back = BoundsTable::from_csv_str(&table.to_csv_string().unwrap()).unwrap();
        prop_assert_eq!(back.len(), table.len());
        for (x, y) in back.rows.iter().zip(&table.rows) {
            let same = |p: f64, q: f64| p.to_bits() == q.to_bits() || (p.is_nan() && q.is_nan());
            prop_assert!(x.mu.iter().zip(&y.mu).all(|(p, q)| same(*p, *q)));
            prop_assert!(same(x.beta_lb, y.beta_lb) && same(x.beta_ub, y.beta_ub) && same(x.eps, y.eps));
            prop_assert_eq!(x.beta_truth.is_some(), y.beta_truth.is_some());
        }
    }
}

#[test]
fn registry_json_round_trips() {
    let op = &*P1;
    let sup = build_supremizers(op).unwrap();
    let gamma = gamma_q(&sup).unwrap();
    let cp = ControlPoint::new(&sup, &[2.0, 1.0]).unwrap();
    let mut sample = ScmSample::new();
    for mu in [[2.0, 1.0], [0.3, 1.7], [3.9, 0.2]] {
        sample.push(make_sample_point(&cp, &sup, &mu).unwrap());
    }
    let mut reg = BoundRegistry::new(gamma, NeighborRule::nearest(8));
    reg.push(Subdomain { round: 1, mubar: vec![2.0, 1.0], beta: cp.beta(), sample }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("registry.json");
    reg.save(&path).unwrap();
    assert_eq!(BoundRegistry::load(&path).unwrap(), reg);
}
