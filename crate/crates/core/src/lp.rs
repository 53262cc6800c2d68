//! Dense bounded-variable primal simplex for the small SCM relaxations.
//!
//! Problem form: minimize `c·y` subject to `lo ≤ y ≤ hi` and `a_i·y ≥ b_i`.
//! Each inequality gets a surplus `s_i ≥ 0` (`a_i·y − s_i = b_i`); rows whose
//! surplus would start negative get an artificial variable and are driven to
//! feasibility in phase one. Pricing is Dantzig's rule, falling back to
//! Bland's rule after a run of degenerate pivots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub constraints: Vec<LinearConstraint>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = objective.len();
        if lower.len() != n || upper.len() != n {
            return Err(Error::Invalid("objective and bounds differ in length".into()));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !(l.is_finite() && u.is_finite() && l <= u) {
                return Err(Error::Invalid(format!("invalid box [{l}, {u}]")));
            }
        }
        if !objective.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            objective,
            lower,
            upper,
            constraints: Vec::new(),
        })
    }

    /// Adds `coeffs·y ≥ rhs`.
    pub fn add_constraint(&mut self, coeffs: Vec<f64>, rhs: f64) -> Result<()> {
        if coeffs.len() != self.objective.len() {
            return Err(Error::Invalid("constraint length differs from objective".into()));
        }
        if !(rhs.is_finite() && coeffs.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite);
        }
        self.constraints.push(LinearConstraint { coeffs, rhs });
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        self.objective.iter().zip(y).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any bound or constraint at `y`.
    pub fn max_violation(&self, y: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for ((v, l), u) in y.iter().zip(&self.lower).zip(&self.upper) {
            worst = worst.max(l - v).max(v - u);
        }
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(y).map(|(a, v)| a * v).sum();
            worst = worst.max(c.rhs - lhs);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub point: Vec<f64>,
    pub pivots: usize,
}

const PIVOT_TOL: f64 = 1e-11;
const DEGENERATE_RUN: usize = 30;

struct Tableau {
    /// Row-major `rows × cols` matrix `B⁻¹ A`.
    tab: Vec<f64>,
    rows: usize,
    cols: usize,
    basis: Vec<usize>,
    x: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    at_upper: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    fn entry(&self, r: usize, c: usize) -> f64 {
        self.tab[r * self.cols + c]
    }

    fn is_basic(&self) -> Vec<bool> {
        let mut b = vec![false; self.cols];
        for &j in &self.basis {
            b[j] = true;
        }
        b
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let cols = self.cols;
        let p = self.tab[r * cols + c];
        for v in &mut self.tab[r * cols..(r + 1) * cols] {
            *v /= p;
        }
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.tab[i * cols + c];
            if f != 0.0 {
                for j in 0..cols {
                    self.tab[i * cols + j] -= f * self.tab[r * cols + j];
                }
                self.tab[i * cols + c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Runs primal simplex on `cost` until no improving column remains.
    fn optimize(&mut self, cost: &[f64], tol: f64, cap: usize) -> Result<()> {
        let mut degenerate = 0usize;
        for _ in 0..cap {
            let basic = self.is_basic();
            let bland = degenerate >= DEGENERATE_RUN;
            // reduced costs d_j = c_j − Σ_i c_B(i) tab[i][j]
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.cols {
                if basic[j] || self.lo[j] == self.hi[j] {
                    continue;
                }
                let mut d = cost[j];
                for i in 0..self.rows {
                    d -= cost[self.basis[i]] * self.entry(i, j);
                }
                let improving = if self.at_upper[j] { d > tol } else { d < -tol };
                if !improving {
                    continue;
                }
                match entering {
                    None => entering = Some((j, d)),
                    Some((_, best)) if !bland && d.abs() > best.abs() => entering = Some((j, d)),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
            let Some((j, _)) = entering else {
                return Ok(());
            };
            // moving x_j by σ t changes x_B(i) by −σ t tab[i][j]
            let sigma = if self.at_upper[j] { -1.0 } else { 1.0 };
            let mut step = self.hi[j] - self.lo[j];
            let mut leave: Option<(usize, bool)> = None;
            for i in 0..self.rows {
                let alpha = -sigma * self.entry(i, j);
                let b = self.basis[i];
                let limit = if alpha < -PIVOT_TOL {
                    (self.x[b] - self.lo[b]).max(0.0) / -alpha
                } else if alpha > PIVOT_TOL {
                    if self.hi[b].is_finite() {
                        (self.hi[b] - self.x[b]).max(0.0) / alpha
                    } else {
                        continue;
                    }
                } else {
                    continue;
                };
                let better = if limit < step {
                    true
                } else if limit == step {
                    match leave {
                        Some((r, _)) if bland => self.basis[i] < self.basis[r],
                        Some((r, _)) => alpha.abs() > self.entry(r, j).abs(),
                        None => false,
                    }
                } else {
                    false
                };
                if better {
                    step = limit;
                    leave = Some((i, alpha > 0.0));
                }
            }
            if !step.is_finite() {
                return Err(Error::Unbounded);
            }
            if step <= tol {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            for i in 0..self.rows {
                let b = self.basis[i];
                self.x[b] -= sigma * step * self.entry(i, j);
            }
            self.x[j] += sigma * step;
            match leave {
                None => {
                    // bound flip
                    self.at_upper[j] = !self.at_upper[j];
                    self.x[j] = if self.at_upper[j] { self.hi[j] } else { self.lo[j] };
                }
                Some((r, to_upper)) => {
                    let b = self.basis[r];
                    self.x[b] = if to_upper { self.hi[b] } else { self.lo[b] };
                    self.at_upper[b] = to_upper;
                    self.at_upper[j] = false;
                    self.pivot(r, j);
                }
            }
        }
        Err(Error::CycleDetected { iterations: cap })
    }
}

/// Global minimum of `c·y` over the box-bounded polytope.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.num_vars();
    let m = lp.constraints.len();
    let scale = lp
        .lower
        .iter()
        .chain(&lp.upper)
        .chain(lp.constraints.iter().map(|c| &c.rhs))
        .fold(1.0f64, |s, v| s.max(v.abs()));
    let tol = 1e-12 * scale;

    // start every y_j at the bound its cost prefers
    let mut y0: Vec<f64> = (0..n)
        .map(|j| if lp.objective[j] < 0.0 { lp.upper[j] } else { lp.lower[j] })
        .collect();
    let residual: Vec<f64> = lp
        .constraints
        .iter()
        .map(|c| c.coeffs.iter().zip(&y0).map(|(a, v)| a * v).sum::<f64>() - c.rhs)
        .collect();
    let needs_art: Vec<usize> = (0..m).filter(|&i| residual[i] < 0.0).collect();
    let cols = n + m + needs_art.len();

    let mut lo = vec![0.0; cols];
    let mut hi = vec![f64::INFINITY; cols];
    lo[..n].copy_from_slice(&lp.lower);
    hi[..n].copy_from_slice(&lp.upper);
    let mut x = vec![0.0; cols];
    x[..n].copy_from_slice(&y0);
    let mut at_upper = vec![false; cols];
    for j in 0..n {
        at_upper[j] = lp.objective[j] < 0.0 && lp.lower[j] != lp.upper[j];
    }

    let mut tab = vec![0.0; m * cols];
    let mut basis = vec![0; m];
    let mut art_of_row = vec![None; m];
    for (k, &i) in needs_art.iter().enumerate() {
        art_of_row[i] = Some(n + m + k);
    }
    for (i, c) in lp.constraints.iter().enumerate() {
        // row expressed so that the basic variable has coefficient +1
        match art_of_row[i] {
            None => {
                // s_i − a_i·y = −b_i
                for j in 0..n {
                    tab[i * cols + j] = -c.coeffs[j];
                }
                tab[i * cols + n + i] = 1.0;
                basis[i] = n + i;
                x[n + i] = residual[i];
            }
            Some(a) => {
                // r_i + a_i·y − s_i = b_i
                for j in 0..n {
                    tab[i * cols + j] = c.coeffs[j];
                }
                tab[i * cols + n + i] = -1.0;
                tab[i * cols + a] = 1.0;
                basis[i] = a;
                x[a] = -residual[i];
            }
        }
    }

    let mut t = Tableau {
        tab,
        rows: m,
        cols,
        basis,
        x,
        lo,
        hi,
        at_upper,
        pivots: 0,
    };
    let cap = 200 * (cols + m + 1);

    if !needs_art.is_empty() {
        let mut cost1 = vec![0.0; cols];
        for c in cost1.iter_mut().skip(n + m) {
            *c = 1.0;
        }
        t.optimize(&cost1, tol, cap)?;
        let infeas: f64 = (n + m..cols).map(|j| t.x[j]).sum();
        if infeas > 1e-9 * scale {
            y0.copy_from_slice(&t.x[..n]);
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                value: f64::NAN,
                point: y0,
                pivots: t.pivots,
            });
        }
        // fix artificials at zero; pivot basic ones out where possible
        for j in n + m..cols {
            t.hi[j] = 0.0;
            t.x[j] = 0.0;
            t.at_upper[j] = false;
        }
        for r in 0..m {
            if t.basis[r] >= n + m {
                let basic = t.is_basic();
                let col = (0..n + m)
                    .filter(|&j| !basic[j])
                    .max_by(|&a, &b| t.entry(r, a).abs().total_cmp(&t.entry(r, b).abs()));
                if let Some(j) = col {
                    if t.entry(r, j).abs() > PIVOT_TOL {
                        // degenerate exchange: values are unchanged
                        t.pivot(r, j);
                    }
                }
            }
        }
    }

    let mut cost2 = vec![0.0; cols];
    cost2[..n].copy_from_slice(&lp.objective);
    t.optimize(&cost2, tol, cap)?;

    let point: Vec<f64> = (0..n)
        .map(|j| t.x[j].clamp(lp.lower[j], lp.upper[j]))
        .collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        value: lp.value(&point),
        point,
        pivots: t.pivots,
    })
}
