//! The subdomain greedy (NNSCM) and its multi-round certified variant
//! (cNNSCM).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certification::{beta_ub_local, BoundRegistry, Subdomain};
use crate::error::{Error, Result};
use crate::natural_norm::{
    build_supremizers, gamma_q, objective, BoundingBox, ControlPoint, SupremizerSet,
};
use crate::scm::{g_lb_eval, ratio_indicator, NeighborRule, SamplePoint, ScmSample, UNDEFINED_UB};
use crate::truth::{AffineOperator, TrainSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Nnscm,
    Cnnscm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyConfig {
    pub eps_betabar: f64,
    pub eps_g: f64,
    pub neighbors: NeighborRule,
    /// Constant coverage threshold `φ`; only the single-round algorithm
    /// uses it, the certified variant always tests `g_lb > 0`.
    pub phi: f64,
    pub max_rounds: usize,
    pub max_points_per_subdomain: usize,
    /// Picks the first control point at random; `None` uses the grid point
    /// nearest the domain center.
    pub seed: Option<u64>,
    pub progress: bool,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self {
            eps_betabar: 0.8,
            eps_g: 0.8,
            neighbors: NeighborRule::nearest(8),
            phi: 0.0,
            max_rounds: 20,
            max_points_per_subdomain: 200,
            seed: None,
            progress: false,
        }
    }
}

impl GreedyConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        unit("eps_betabar", self.eps_betabar)?;
        unit("eps_g", self.eps_g)?;
        if self.neighbors.jnb == Some(0) {
            return Err(Error::Config("jnb must be at least 1".into()));
        }
        if !(self.phi >= 0.0 && self.phi.is_finite()) {
            return Err(Error::Config(format!("phi_constant must be finite and >= 0, got {}", self.phi)));
        }
        if self.max_rounds == 0 {
            return Err(Error::Config("max_rounds must be at least 1".into()));
        }
        if self.max_points_per_subdomain == 0 {
            return Err(Error::Config("max_points_per_subdomain must be at least 1".into()));
        }
        Ok(())
    }
}

/// A finished inner greedy.
#[derive(Debug, Clone)]
pub struct InnerOutcome {
    pub subdomain: Subdomain,
    /// Train indices with `g_lb > φ` under the final sample.
    pub covered: Vec<usize>,
    /// `(train index, g_lb)` for every point that was active, final sample.
    pub active_lb: Vec<(usize, f64)>,
    pub eps_max: f64,
    /// Coverage count after each added point.
    pub coverage_history: Vec<usize>,
    pub capped: bool,
    pub lp_pivots: usize,
}

/// Evaluates `β̄_μ̄` at `mu` and packages the sample point.
pub fn make_sample_point(
    cp: &ControlPoint,
    sup: &SupremizerSet<'_>,
    mu: &[f64],
) -> Result<SamplePoint> {
    let (betabar, w) = cp.beta_bar(sup.op(), mu)?;
    let ystar = cp.y_of_w(&w, sup)?;
    let qhat = crate::certification::qhat_vector(sup, &w)?;
    Ok(SamplePoint {
        mu: mu.to_vec(),
        betabar,
        ystar,
        qhat,
    })
}

#[derive(Debug, Clone, Copy)]
struct PointState {
    lb: f64,
    ub: f64,
    radius2: f64,
}

/// Builds `C_μ̄` over the active points of `xi`.
pub fn inner_greedy(
    sup: &SupremizerSet<'_>,
    gamma: &[f64],
    mubar: &[f64],
    xi: &TrainSample,
    cfg: &GreedyConfig,
    phi: f64,
    round: usize,
) -> Result<InnerOutcome> {
    let op = sup.op();
    let cp = ControlPoint::new(sup, mubar)?;
    let bx = BoundingBox::new(gamma.to_vec(), cp.beta());
    let active = xi.active_indices();
    let n = active.len();
    let mut state = vec![
        PointState {
            lb: f64::NEG_INFINITY,
            ub: f64::INFINITY,
            radius2: f64::INFINITY,
        };
        n
    ];
    let mut in_sample = vec![false; n];
    let mut r_prev = vec![false; n];
    let mut r_star = vec![false; n];
    let mut sample = ScmSample::new();
    let mut eps_max = f64::INFINITY;
    let mut coverage_history = Vec::new();
    let mut capped = false;
    let mut lp_pivots = 0;

    loop {
        let grew = r_star.iter().zip(&r_prev).any(|(s, r)| *s && !*r);
        if !grew && eps_max <= cfg.eps_betabar {
            break;
        }
        if sample.len() >= cfg.max_points_per_subdomain {
            capped = true;
            break;
        }
        let (next_mu, local) = if sample.is_empty() {
            let local = active.iter().position(|&i| xi.point(i) == mubar);
            (mubar.to_vec(), local)
        } else {
            match argmax_indicator(&state, &in_sample) {
                Some(k) => (xi.point(active[k]).to_vec(), Some(k)),
                None => break,
            }
        };
        if let Some(k) = local {
            in_sample[k] = true;
        }
        let point = make_sample_point(&cp, sup, &next_mu)?;
        let new_theta_mu = point.mu.clone();
        let new_y = point.ystar.clone();
        sample.push(point);

        let rule = &cfg.neighbors;
        let updates: Vec<(PointState, usize)> = state
            .par_iter()
            .zip(active.par_iter())
            .map(|(st, &i)| {
                let mu = xi.point(i);
                let ub = st.ub.min(objective(&op.theta(mu), &new_y));
                if rule.distance2(&new_theta_mu, mu) < st.radius2 {
                    let e = g_lb_eval(&sample, &bx, op, mu, rule)?;
                    Ok((
                        PointState {
                            lb: e.value,
                            ub,
                            radius2: e.radius2,
                        },
                        e.pivots,
                    ))
                } else {
                    Ok((PointState { ub, ..*st }, 0))
                }
            })
            .collect::<Result<_>>()?;
        for (k, (st, piv)) in updates.into_iter().enumerate() {
            state[k] = st;
            lp_pivots += piv;
        }

        std::mem::swap(&mut r_prev, &mut r_star);
        for (flag, st) in r_star.iter_mut().zip(&state) {
            *flag = st.lb > phi;
        }
        eps_max = state
            .iter()
            .filter(|st| st.ub > UNDEFINED_UB)
            .filter_map(|st| ratio_indicator(st.lb, st.ub))
            .fold(0.0, f64::max);
        let covered = r_star.iter().filter(|f| **f).count();
        coverage_history.push(covered);
        if covered == n {
            break;
        }
    }

    let covered = active
        .iter()
        .zip(&r_star)
        .filter(|(_, f)| **f)
        .map(|(i, _)| *i)
        .collect();
    let active_lb = active.iter().zip(&state).map(|(i, st)| (*i, st.lb)).collect();
    Ok(InnerOutcome {
        subdomain: Subdomain {
            round,
            mubar: mubar.to_vec(),
            beta: cp.beta(),
            sample,
        },
        covered,
        active_lb,
        eps_max,
        coverage_history,
        capped,
        lp_pivots,
    })
}

fn argmax_indicator(state: &[PointState], in_sample: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, st) in state.iter().enumerate() {
        if in_sample[k] {
            continue;
        }
        let Some(eps) = ratio_indicator(st.lb, st.ub) else {
            continue;
        };
        if best.is_none_or(|(_, b)| eps > b) {
            best = Some((k, eps));
        }
    }
    best.map(|(k, _)| k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub round: usize,
    pub control_points: Vec<Vec<f64>>,
    pub sample_sizes: Vec<usize>,
    pub subdomain_eps_max: Vec<f64>,
    pub capped_subdomains: usize,
    /// Largest `ε(μ)` over the full train set once the round is complete.
    pub max_eps: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub algorithm: Algorithm,
    pub converged: bool,
    pub train_size: usize,
    pub rounds: Vec<RoundSummary>,
    pub subdomains: usize,
    pub total_sample_points: usize,
    pub lp_pivots: usize,
    pub max_eps: f64,
    pub seconds: f64,
}

/// Global bounds at every train point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBounds {
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
}

impl GridBounds {
    fn new(n: usize) -> Self {
        Self {
            lb: vec![f64::NEG_INFINITY; n],
            ub: vec![f64::INFINITY; n],
        }
    }

    /// `ε(μ)` per point; infinite where the upper bound is not positive.
    pub fn eps(&self) -> Vec<f64> {
        self.lb
            .iter()
            .zip(&self.ub)
            .map(|(l, u)| if *u > 0.0 { (u - l) / u } else { f64::INFINITY })
            .collect()
    }

    pub fn max_eps(&self) -> f64 {
        self.eps().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub registry: BoundRegistry,
    pub report: RunReport,
    pub bounds: GridBounds,
    /// Bounds after each completed round.
    pub round_bounds: Vec<GridBounds>,
}

fn initial_index(xi: &TrainSample, op: &AffineOperator, seed: Option<u64>) -> usize {
    match seed {
        Some(s) => ChaCha8Rng::seed_from_u64(s).gen_range(0..xi.len()),
        None => xi.midpoint_index(op.domain()),
    }
}

fn absorb(
    bounds: &mut GridBounds,
    reg: &BoundRegistry,
    sd: &Subdomain,
    op: &AffineOperator,
    xi: &TrainSample,
) -> Result<()> {
    let bx = reg.bounding_box(sd);
    let vals: Vec<(f64, f64)> = xi
        .points()
        .par_iter()
        .map(|mu| {
            let lb = sd.beta * g_lb_eval(&sd.sample, &bx, op, mu, &reg.neighbors)?.value;
            let ub = beta_ub_local(&sd.sample, op, mu)?;
            Ok((lb, ub))
        })
        .collect::<Result<_>>()?;
    for (k, (lb, ub)) in vals.into_iter().enumerate() {
        bounds.lb[k] = bounds.lb[k].max(lb);
        bounds.ub[k] = bounds.ub[k].min(ub);
    }
    Ok(())
}

/// Single-round natural-norm SCM.
pub fn run_nnscm(op: &AffineOperator, xi: &TrainSample, cfg: &GreedyConfig) -> Result<RunOutcome> {
    run(op, xi, cfg, Algorithm::Nnscm)
}

/// Certified natural-norm SCM: rounds continue until `max ε ≤ ε_g`.
pub fn run_cnnscm(op: &AffineOperator, xi: &TrainSample, cfg: &GreedyConfig) -> Result<RunOutcome> {
    run(op, xi, cfg, Algorithm::Cnnscm)
}

pub fn run(
    op: &AffineOperator,
    xi: &TrainSample,
    cfg: &GreedyConfig,
    algorithm: Algorithm,
) -> Result<RunOutcome> {
    cfg.validate()?;
    if xi.is_empty() {
        return Err(Error::EmptyTrainSample);
    }
    let started = Instant::now();
    let sup = build_supremizers(op)?;
    let gamma = gamma_q(&sup)?;
    let phi = match algorithm {
        Algorithm::Nnscm => cfg.phi,
        Algorithm::Cnnscm => 0.0,
    };
    let mut registry = BoundRegistry::new(gamma.clone(), cfg.neighbors.clone());
    let mut bounds = GridBounds::new(xi.len());
    let mut round_bounds = Vec::new();
    let mut rounds = Vec::new();
    let mut lp_pivots = 0;
    let mut work = xi.clone();
    work.reset();
    let mut start = initial_index(xi, op, cfg.seed);
    let mut converged = false;

    for round in 1..=cfg.max_rounds {
        let round_started = Instant::now();
        work.reset();
        let mut summary = RoundSummary {
            round,
            control_points: Vec::new(),
            sample_sizes: Vec::new(),
            subdomain_eps_max: Vec::new(),
            capped_subdomains: 0,
            max_eps: f64::INFINITY,
            seconds: 0.0,
        };
        let mut mubar = xi.point(start).to_vec();
        loop {
            let inner = inner_greedy(&sup, &gamma, &mubar, &work, cfg, phi, round)?;
            if inner.covered.is_empty() {
                return Err(Error::NoProgress { mu: mubar });
            }
            lp_pivots += inner.lp_pivots;
            summary.control_points.push(mubar.clone());
            summary.sample_sizes.push(inner.subdomain.sample.len());
            summary.subdomain_eps_max.push(inner.eps_max);
            summary.capped_subdomains += usize::from(inner.capped);
            for &i in &inner.covered {
                work.deactivate(i);
            }
            if cfg.progress {
                eprintln!(
                    "round {round} subdomain {} J={} eps_max={:.4} remaining={}",
                    summary.control_points.len(),
                    inner.subdomain.sample.len(),
                    inner.eps_max,
                    work.active_count()
                );
            }
            absorb(&mut bounds, &registry, &inner.subdomain, op, xi)?;
            registry.push(inner.subdomain)?;
            if work.active_count() == 0 {
                break;
            }
            let next = inner
                .active_lb
                .iter()
                .filter(|(i, _)| work.is_active(*i))
                .fold(None::<(usize, f64)>, |best, &(i, v)| match best {
                    Some((_, b)) if b <= v => best,
                    _ => Some((i, v)),
                })
                .map(|(i, _)| i)
                .ok_or(Error::EmptyTrainSample)?;
            mubar = xi.point(next).to_vec();
        }

        let eps = bounds.eps();
        let (worst, max_eps) = eps
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
        summary.max_eps = max_eps;
        summary.seconds = round_started.elapsed().as_secs_f64();
        if cfg.progress {
            eprintln!(
                "round {round} done: {} subdomains, max eps {:.6}",
                summary.control_points.len(),
                max_eps
            );
        }
        rounds.push(summary);
        round_bounds.push(bounds.clone());
        match algorithm {
            Algorithm::Nnscm => {
                converged = true;
                break;
            }
            Algorithm::Cnnscm => {
                if max_eps <= cfg.eps_g {
                    converged = true;
                    break;
                }
                start = worst;
            }
        }
    }

    let report = RunReport {
        algorithm,
        converged,
        train_size: xi.len(),
        subdomains: registry.len(),
        total_sample_points: registry.subdomains.iter().map(|s| s.sample.len()).sum(),
        lp_pivots,
        max_eps: bounds.max_eps(),
        rounds,
        seconds: started.elapsed().as_secs_f64(),
    };
    Ok(RunOutcome {
        registry,
        report,
        bounds,
        round_bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::truth::{ParameterDomain, ThetaFn};

    #[test]
    fn config_validation_names_fields() {
        let mut cfg = GreedyConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.eps_g = 1.5;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("eps_g"), "{msg}");
        cfg.eps_g = 0.5;
        cfg.max_rounds = 0;
        assert!(cfg.validate().unwrap_err().to_string().contains("max_rounds"));
    }

    #[test]
    fn single_point_train_set_stops_after_one_point() {
        let op = AffineOperator::new(
            vec![ThetaFn::constant(1.0, 1), ThetaFn::coordinate(0, 1)],
            vec![Matrix::identity(2, 2), Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0])],
            Matrix::identity(2, 2),
            ParameterDomain::new(vec![[0.0, 1.0]]).unwrap(),
        )
        .unwrap();
        let sup = build_supremizers(&op).unwrap();
        let gamma = gamma_q(&sup).unwrap();
        let xi = TrainSample::new(vec![vec![0.5]]);
        let out = inner_greedy(&sup, &gamma, &[0.5], &xi, &GreedyConfig::default(), 0.0, 1).unwrap();
        assert_eq!(out.subdomain.sample.len(), 1);
        assert_eq!(out.covered, vec![0]);
        assert!(out.eps_max.abs() < 1e-12);
    }
}
