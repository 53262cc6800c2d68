//! Offline checks of a saved registry: internal consistency of every stored
//! sample point, then the sandwich `β^LB ≤ β ≤ β^UB` at random train points
//! against the brute-force inf-sup oracle.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::certification::{global_lb, global_ub, BoundRegistry, QhatExpansion};
use crate::error::{Error, Result};
use crate::natural_norm::{beta_exact, build_supremizers, objective};
use crate::oracles::beta_bruteforce;
use crate::truth::{AffineOperator, TrainSample};

/// Relative slack on the sandwich inequalities.
pub const SANDWICH_SLACK: f64 = 1e-8;
const CONSISTENCY_TOL: f64 = 1e-10;
const BOX_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checked_points: usize,
    pub violations: Vec<String>,
    /// `min (β − β^LB) / β^UB` over checked points.
    pub worst_lower_margin: f64,
    /// `min (β^UB − β) / β^UB` over checked points.
    pub worst_upper_margin: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that stored `y*` reproduce `β̄`, lie in the box, and that the
/// stored `Q̂` vectors have nonnegative squared-norm entries.
pub fn registry_consistency(
    reg: &BoundRegistry,
    op: &AffineOperator,
) -> Vec<String> {
    let mut out = Vec::new();
    if reg.q != op.q() || reg.gamma.len() != op.q() {
        out.push(format!("registry has Q = {} but the operator has Q = {}", reg.q, op.q()));
        return out;
    }
    let expansion = QhatExpansion::new(op.q());
    for (k, sd) in reg.subdomains.iter().enumerate() {
        let bx = reg.bounding_box(sd);
        if !(sd.beta > 0.0) {
            out.push(format!("subdomain {k}: beta(mubar) = {:e} is not positive", sd.beta));
        }
        for (j, p) in sd.sample.points.iter().enumerate() {
            let tag = format!("subdomain {k} point {j} at {:?}", p.mu);
            if p.ystar.len() != op.q() || p.qhat.len() != expansion.qhat() {
                out.push(format!("{tag}: wrong vector lengths"));
                continue;
            }
            let j_val = objective(&op.theta(&p.mu), &p.ystar);
            if (j_val - p.betabar).abs() > CONSISTENCY_TOL * p.betabar.abs().max(1.0) {
                out.push(format!(
                    "{tag}: J(y*) = {j_val:.12e} does not reproduce betabar = {:.12e}",
                    p.betabar
                ));
            }
            if !bx.contains(&p.ystar, BOX_SLACK) {
                out.push(format!("{tag}: y* = {:?} leaves the bounding box", p.ystar));
            }
            let zmax = p.qhat.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (i, &(a, b)) in expansion.pairs().iter().enumerate() {
                if a == b && p.qhat[i] < -1e-12 * zmax {
                    out.push(format!("{tag}: qhat diagonal entry {i} = {:e} is negative", p.qhat[i]));
                }
            }
        }
    }
    out
}

/// Runs the consistency checks and the sandwich at `samples` random train
/// points drawn with `seed`.
pub fn validate_registry(
    reg: &BoundRegistry,
    op: &AffineOperator,
    xi: &TrainSample,
    samples: usize,
    seed: u64,
) -> Result<ValidationReport> {
    if reg.is_empty() {
        return Err(Error::EmptyRegistry);
    }
    let mut violations = registry_consistency(reg, op);
    let mut report = ValidationReport {
        checked_points: 0,
        violations: Vec::new(),
        worst_lower_margin: f64::INFINITY,
        worst_upper_margin: f64::INFINITY,
    };
    if samples > 0 && !xi.is_empty() {
        let sup = build_supremizers(op)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picks: Vec<usize> = if samples >= xi.len() {
            (0..xi.len()).collect()
        } else {
            index::sample(&mut rng, xi.len(), samples).into_vec()
        };
        for i in picks {
            let mu = xi.point(i);
            let lb = global_lb(reg, op, mu)?;
            let ub = global_ub(reg, op, mu)?;
            let truth = match beta_bruteforce(op, mu) {
                Ok(r) => r.value,
                Err(Error::TooLarge { .. }) => beta_exact(&sup, mu)?,
                Err(e) => return Err(e),
            };
            let lower = (truth - lb) / ub;
            let upper = (ub - truth) / ub;
            report.worst_lower_margin = report.worst_lower_margin.min(lower);
            report.worst_upper_margin = report.worst_upper_margin.min(upper);
            report.checked_points += 1;
            if lb > truth + SANDWICH_SLACK * ub {
                violations.push(format!("mu = {mu:?}: lower bound {lb:.12e} exceeds beta {truth:.12e}"));
            }
            if truth > ub + SANDWICH_SLACK * ub {
                violations.push(format!("mu = {mu:?}: beta {truth:.12e} exceeds upper bound {ub:.12e}"));
            }
        }
    }
    report.violations = violations;
    Ok(report)
}
