//! Upper bounds from the `Q̂`-term expansion of `‖T^μ w‖²_X` and the global
//! lower/upper bounds over all registered subdomains.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::natural_norm::{BoundingBox, SupremizerSet};
use crate::scm::{g_lb, NeighborRule, ScmSample};
use crate::truth::AffineOperator;

/// Index pairs `(q′, q″)`, `q′ ≤ q″`, in lexicographic order (zero based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QhatExpansion {
    pairs: Vec<(usize, usize)>,
}

impl QhatExpansion {
    pub fn new(q: usize) -> Self {
        let pairs = (0..q).flat_map(|a| (a..q).map(move |b| (a, b))).collect();
        Self { pairs }
    }

    pub fn qhat(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

/// `Θ̂(μ)` with entries `(2 − δ) Θ_{q′}(μ) Θ_{q″}(μ)`.
pub fn theta_hat(op: &AffineOperator, mu: &[f64]) -> Vec<f64> {
    theta_hat_from(&op.theta(mu))
}

pub fn theta_hat_from(theta: &[f64]) -> Vec<f64> {
    QhatExpansion::new(theta.len())
        .pairs()
        .iter()
        .map(|&(a, b)| {
            let f = if a == b { 1.0 } else { 2.0 };
            f * theta[a] * theta[b]
        })
        .collect()
}

/// Entries `(T_{q′} w, T_{q″} w)_X / ‖w‖²_X`.
pub fn qhat_vector(sup: &SupremizerSet<'_>, w: &Vector) -> Result<Vec<f64>> {
    let ww = sup.x_inner(w, w);
    if !(ww.sqrt() > 1e-14) {
        return Err(Error::DegenerateVector { ratio: ww.max(0.0).sqrt() });
    }
    let images: Vec<Vector> = sup.tq().iter().map(|t| t * w).collect();
    Ok(QhatExpansion::new(images.len())
        .pairs()
        .iter()
        .map(|&(a, b)| sup.x_inner(&images[a], &images[b]) / ww)
        .collect())
}

/// Relative size of a negative radicand still treated as rounding noise.
const RADICAND_TOL: f64 = 1e-10;

/// `sqrt(min_j Θ̂(μ)·z_j)` over the candidates of one subdomain.
pub fn beta_ub_local(sample: &ScmSample, op: &AffineOperator, mu: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let th = theta_hat(op, mu);
    let mut best = f64::INFINITY;
    let mut best_scale = 0.0;
    for p in &sample.points {
        let (v, s) = th
            .iter()
            .zip(&p.qhat)
            .fold((0.0, 0.0), |(v, s), (t, z)| (v + t * z, s + (t * z).abs()));
        if v < best {
            best = v;
            best_scale = s;
        }
    }
    if best < 0.0 {
        if best < -RADICAND_TOL * best_scale {
            return Err(Error::NegativeRadicand { value: best });
        }
        return Ok(0.0);
    }
    Ok(best.sqrt())
}

/// One completed control-point neighbourhood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subdomain {
    pub round: usize,
    pub mubar: Vec<f64>,
    /// `β(μ̄)`.
    pub beta: f64,
    pub sample: ScmSample,
}

pub const REGISTRY_SCHEMA_VERSION: u32 = 1;

/// Every subdomain from every round, plus what is needed to rebuild the
/// relaxations offline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRegistry {
    pub schema_version: u32,
    pub q: usize,
    pub gamma: Vec<f64>,
    pub neighbors: NeighborRule,
    pub subdomains: Vec<Subdomain>,
}

impl BoundRegistry {
    pub fn new(gamma: Vec<f64>, neighbors: NeighborRule) -> Self {
        Self {
            schema_version: REGISTRY_SCHEMA_VERSION,
            q: gamma.len(),
            gamma,
            neighbors,
            subdomains: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.subdomains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subdomains.is_empty()
    }

    pub fn push(&mut self, sd: Subdomain) -> Result<()> {
        if !(sd.beta > 0.0) {
            return Err(Error::ControlPointDegenerate {
                mu: sd.mubar.clone(),
                reason: format!("beta = {:e}", sd.beta),
            });
        }
        self.subdomains.push(sd);
        Ok(())
    }

    pub fn bounding_box(&self, sd: &Subdomain) -> BoundingBox {
        BoundingBox::new(self.gamma.clone(), sd.beta)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let reg: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        if reg.schema_version != REGISTRY_SCHEMA_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported registry schema_version {}",
                reg.schema_version
            )));
        }
        if reg.gamma.len() != reg.q {
            return Err(Error::DimensionMismatch {
                expected: (reg.q, 1),
                got: (reg.gamma.len(), 1),
            });
        }
        Ok(reg)
    }
}

/// `β^LB(μ) = max_k β(μ̄_k) g^LB_k(μ)`.
pub fn global_lb(reg: &BoundRegistry, op: &AffineOperator, mu: &[f64]) -> Result<f64> {
    if reg.is_empty() {
        return Err(Error::EmptyRegistry);
    }
    let mut best = f64::NEG_INFINITY;
    for sd in &reg.subdomains {
        let v = sd.beta * g_lb(&sd.sample, &reg.bounding_box(sd), op, mu, &reg.neighbors)?;
        best = best.max(v);
    }
    Ok(best)
}

/// `β^UB(μ) = min_k β^UB_local(μ; μ̄_k)`.
pub fn global_ub(reg: &BoundRegistry, op: &AffineOperator, mu: &[f64]) -> Result<f64> {
    if reg.is_empty() {
        return Err(Error::EmptyRegistry);
    }
    let mut best = f64::INFINITY;
    for sd in &reg.subdomains {
        best = best.min(beta_ub_local(&sd.sample, op, mu)?);
    }
    Ok(best)
}

/// `(β^UB − β^LB) / β^UB`.
pub fn epsilon_from(lb: f64, ub: f64) -> Result<f64> {
    if !(ub > 0.0) {
        return Err(Error::NonpositiveUpperBound { value: ub });
    }
    Ok((ub - lb) / ub)
}

pub fn epsilon_global(reg: &BoundRegistry, op: &AffineOperator, mu: &[f64]) -> Result<f64> {
    let lb = global_lb(reg, op, mu)?;
    let ub = global_ub(reg, op, mu)?;
    epsilon_from(lb, ub)
}
