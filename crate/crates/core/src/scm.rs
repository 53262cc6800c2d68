//! The successive-constraint relaxation of the natural-norm surrogate.
//!
//! `g_lb` minimizes `J(y; μ)` over the bounding box cut by the stability
//! constraints of the `jnb` sample points nearest `μ`; `g_ub` minimizes it
//! over the stored minimizers `y*` only. For the true feasible set `Y`,
//! `{y*} ⊂ Y ⊂ Y^LB`, so `g_lb ≤ β̄_μ̄(μ) ≤ g_ub`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::natural_norm::{objective, BoundingBox};
use crate::truth::AffineOperator;

/// One SCM sample point with everything later evaluations need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub mu: Vec<f64>,
    /// `β̄_μ̄(μ̂)`.
    pub betabar: f64,
    /// `y*(μ̂)`, the image of the natural-norm minimizer.
    pub ystar: Vec<f64>,
    /// Normalized cross inner products of the minimizer, see
    /// [`crate::certification::qhat_vector`].
    pub qhat: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScmSample {
    pub points: Vec<SamplePoint>,
}

impl ScmSample {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, p: SamplePoint) {
        self.points.push(p);
    }

    pub fn contains_mu(&self, mu: &[f64]) -> bool {
        self.points.iter().any(|p| p.mu == mu)
    }
}

/// How the constraint subset is chosen for a given `μ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborRule {
    /// Number of nearest sample points; `None` uses all of them.
    pub jnb: Option<usize>,
    /// Per-axis divisors applied before measuring distance; `None` means raw
    /// Euclidean distance in parameter coordinates.
    #[serde(default)]
    pub scale: Option<Vec<f64>>,
}

impl NeighborRule {
    pub fn nearest(jnb: usize) -> Self {
        Self {
            jnb: Some(jnb),
            scale: None,
        }
    }

    pub fn all() -> Self {
        Self {
            jnb: None,
            scale: None,
        }
    }

    pub fn distance2(&self, a: &[f64], b: &[f64]) -> f64 {
        match &self.scale {
            None => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
            Some(s) => a
                .iter()
                .zip(b)
                .zip(s)
                .map(|((x, y), w)| {
                    let d = (x - y) / if *w > 0.0 { *w } else { 1.0 };
                    d * d
                })
                .sum(),
        }
    }
}

/// Indices of the `min(jnb, J)` sample points closest to `mu`, nearest first.
/// Equidistant points keep insertion order.
pub fn nearest_points(sample: &ScmSample, mu: &[f64], rule: &NeighborRule) -> Result<Vec<usize>> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if rule.jnb == Some(0) {
        return Err(Error::Invalid("jnb must be at least 1".into()));
    }
    let mut order: Vec<(f64, usize)> = sample
        .points
        .iter()
        .enumerate()
        .map(|(j, p)| (rule.distance2(&p.mu, mu), j))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let take = rule.jnb.map_or(order.len(), |k| k.min(order.len()));
    Ok(order[..take].iter().map(|(_, j)| *j).collect())
}

/// The relaxed linear program whose minimum is `g_lb(μ)`.
pub fn lower_bound_program(
    sample: &ScmSample,
    bx: &BoundingBox,
    op: &AffineOperator,
    mu: &[f64],
    rule: &NeighborRule,
) -> Result<LinearProgram> {
    let chosen = nearest_points(sample, mu, rule)?;
    program_from(sample, bx, op, mu, &chosen)
}

fn program_from(
    sample: &ScmSample,
    bx: &BoundingBox,
    op: &AffineOperator,
    mu: &[f64],
    chosen: &[usize],
) -> Result<LinearProgram> {
    let half = bx.half_widths();
    let mut lp = LinearProgram::new(op.theta(mu), half.iter().map(|h| -h).collect(), half)?;
    for &j in chosen {
        let p = &sample.points[j];
        lp.add_constraint(op.theta(&p.mu), p.betabar)?;
    }
    Ok(lp)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundEval {
    pub value: f64,
    pub pivots: usize,
    /// Squared distance to the farthest selected neighbour, or infinity
    /// while fewer than `jnb` points exist. A new sample point changes the
    /// selection only if it lies strictly closer than this.
    pub radius2: f64,
}

/// `g_lb` together with solver statistics.
pub fn g_lb_eval(
    sample: &ScmSample,
    bx: &BoundingBox,
    op: &AffineOperator,
    mu: &[f64],
    rule: &NeighborRule,
) -> Result<LowerBoundEval> {
    let chosen = nearest_points(sample, mu, rule)?;
    let lp = program_from(sample, bx, op, mu, &chosen)?;
    let sol = solve_lp(&lp)?;
    let radius2 = match (rule.jnb, chosen.last()) {
        (Some(k), Some(&j)) if chosen.len() == k => rule.distance2(&sample.points[j].mu, mu),
        _ => f64::INFINITY,
    };
    match sol.status {
        LpStatus::Optimal => Ok(LowerBoundEval {
            value: sol.value,
            pivots: sol.pivots,
            radius2,
        }),
        LpStatus::Infeasible => Err(Error::InfeasibleRelaxation { mu: mu.to_vec() }),
    }
}

/// `g^LB_μ̄(μ; C)`.
pub fn g_lb(
    sample: &ScmSample,
    bx: &BoundingBox,
    op: &AffineOperator,
    mu: &[f64],
    rule: &NeighborRule,
) -> Result<f64> {
    g_lb_eval(sample, bx, op, mu, rule).map(|e| e.value)
}

/// `g^UB_μ̄(μ; C) = min_j J(y*(μ̂ʲ); μ)`.
pub fn g_ub(sample: &ScmSample, op: &AffineOperator, mu: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let theta = op.theta(mu);
    Ok(sample
        .points
        .iter()
        .map(|p| objective(&theta, &p.ystar))
        .fold(f64::INFINITY, f64::min))
}

/// Below this magnitude of `g_ub` the ratio indicator is undefined.
pub const UNDEFINED_UB: f64 = 1e-14;

/// `(g_ub − g_lb) / g_ub`, or `None` when `|g_ub| ≤ 1e-14`.
pub fn ratio_indicator(lb: f64, ub: f64) -> Option<f64> {
    if ub.abs() <= UNDEFINED_UB {
        None
    } else {
        Some((ub - lb) / ub)
    }
}

/// `ε_μ̄(μ; C)`, returned raw; negative when `g_ub < 0`.
pub fn epsilon_ratio(
    sample: &ScmSample,
    bx: &BoundingBox,
    op: &AffineOperator,
    mu: &[f64],
    rule: &NeighborRule,
) -> Result<Option<f64>> {
    let lb = g_lb(sample, bx, op, mu, rule)?;
    let ub = g_ub(sample, op, mu)?;
    Ok(ratio_indicator(lb, ub))
}
