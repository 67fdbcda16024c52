//! Penalized weighted least-squares subproblem solved by cyclic coordinate descent.
//!
//! The objective is `(y_m - X_m γ)ᵀ(y_m - X_m γ) + λ Σ_{j≥1} w_j |γ_j|` with the quadratic
//! left un-halved, so each coordinate update soft-thresholds at `λ w_j / 2`. Column 0 is the
//! intercept and carries no penalty.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Coefficients;
use crate::error::{Error, Result};
use crate::penalty::PenaltyWeights;

/// Surrogate regression `X_m = diag(√h2) X`, `y_m`, with penalty level `lambda`.
#[derive(Debug, Clone)]
pub struct SurrogateProblem {
    pub xm: DMatrix<f64>,
    pub ym: DVector<f64>,
    pub lambda: f64,
    pub w: PenaltyWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerConfig {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_sweeps: 5000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub gamma: Coefficients,
    pub sweeps: usize,
    /// False when the sweep budget ran out before the tolerance was met.
    pub converged: bool,
}

#[inline]
pub fn soft_threshold(z: f64, tau: f64) -> f64 {
    if z > tau {
        z - tau
    } else if z < -tau {
        z + tau
    } else {
        0.0
    }
}

impl SurrogateProblem {
    fn validate(&self) -> Result<()> {
        if self.xm.nrows() != self.ym.len() || self.xm.ncols() != self.w.len() + 1 {
            return Err(Error::DimensionMismatch(format!(
                "surrogate design {}x{}, response {}, weights {}",
                self.xm.nrows(),
                self.xm.ncols(),
                self.ym.len(),
                self.w.len()
            )));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// Value of the penalized least-squares objective at `gamma`.
    pub fn objective(&self, gamma: &Coefficients) -> f64 {
        let r = &self.ym - &self.xm * gamma.as_vector();
        let pen: f64 = gamma
            .slopes()
            .iter()
            .zip(self.w.as_slice())
            .map(|(g, w)| w * g.abs())
            .sum();
        r.norm_squared() + self.lambda * pen
    }

    /// Largest `λ` for which the all-zero-slope point is optimal: `max_j 2|X_jᵀ r| / w_j`
    /// with `r` the intercept-only residual.
    pub fn zero_threshold(&self) -> f64 {
        let col0 = self.xm.column(0);
        let s0 = col0.norm_squared();
        let g0 = if s0 > 0.0 { col0.dot(&self.ym) / s0 } else { 0.0 };
        let r = &self.ym - col0 * g0;
        (1..self.xm.ncols())
            .map(|j| 2.0 * self.xm.column(j).dot(&r).abs() / self.w.0[j - 1])
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max)
    }
}

struct Workspace<'a> {
    p: &'a SurrogateProblem,
    gamma: Vec<f64>,
    resid: DVector<f64>,
    sq_norms: Vec<f64>,
}

impl Workspace<'_> {
    /// Exact minimization along coordinate `j`; returns `|Δγ_j|`.
    fn update(&mut self, j: usize) -> f64 {
        let s = self.sq_norms[j];
        let old = self.gamma[j];
        let col = self.p.xm.column(j);
        let new = if s > 0.0 {
            let rho = col.dot(&self.resid) + s * old;
            if j == 0 {
                rho / s
            } else {
                soft_threshold(rho, 0.5 * self.p.lambda * self.p.w.0[j - 1]) / s
            }
        } else {
            0.0
        };
        let delta = new - old;
        if delta != 0.0 {
            self.resid.axpy(-delta, &col, 1.0);
            self.gamma[j] = new;
        }
        delta.abs()
    }

    fn sweep(&mut self, coords: impl Iterator<Item = usize>) -> f64 {
        let mut max_change: f64 = 0.0;
        for j in coords {
            max_change = max_change.max(self.update(j));
        }
        max_change
    }
}

/// Cyclic coordinate descent warm-started at `gamma_init`.
///
/// After each full sweep the solver iterates over the nonzero coordinates only, and returns
/// once a full sweep moves no coordinate by more than `tol`.
pub fn solve_weighted_lasso(
    p: &SurrogateProblem,
    gamma_init: &Coefficients,
    tol: f64,
    max_sweeps: usize,
) -> Result<InnerSolution> {
    solve_traced(p, gamma_init, tol, max_sweeps, None)
}

/// Like [`solve_weighted_lasso`], also recording the objective after every sweep.
pub fn solve_weighted_lasso_traced(
    p: &SurrogateProblem,
    gamma_init: &Coefficients,
    tol: f64,
    max_sweeps: usize,
) -> Result<(InnerSolution, Vec<f64>)> {
    let mut trace = Vec::new();
    let sol = solve_traced(p, gamma_init, tol, max_sweeps, Some(&mut trace))?;
    Ok((sol, trace))
}

fn solve_traced(
    p: &SurrogateProblem,
    gamma_init: &Coefficients,
    tol: f64,
    max_sweeps: usize,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<InnerSolution> {
    p.validate()?;
    if max_sweeps == 0 || !(tol > 0.0) {
        return Err(Error::InvalidInput(
            "inner solver needs max_sweeps >= 1 and tol > 0".into(),
        ));
    }
    let k1 = p.xm.ncols();
    if gamma_init.len() != k1 {
        return Err(Error::DimensionMismatch(format!(
            "warm start of length {} for {} columns",
            gamma_init.len(),
            k1
        )));
    }
    let mut ws = Workspace {
        p,
        gamma: gamma_init.as_slice().to_vec(),
        resid: &p.ym - &p.xm * gamma_init.as_vector(),
        sq_norms: (0..k1).map(|j| p.xm.column(j).norm_squared()).collect(),
    };
    let mut record = |ws: &Workspace| {
        if let Some(t) = trace.as_deref_mut() {
            let g = Coefficients::from_vec(ws.gamma.clone());
            t.push(p.objective(&g));
        }
    };
    record(&ws);

    let mut sweeps = 0;
    let mut converged = false;
    'outer: while sweeps < max_sweeps {
        let change = ws.sweep(0..k1);
        sweeps += 1;
        record(&ws);
        if change < tol {
            converged = true;
            break;
        }
        let active: Vec<usize> = (0..k1).filter(|&j| j == 0 || ws.gamma[j] != 0.0).collect();
        while sweeps < max_sweeps {
            let change = ws.sweep(active.iter().copied());
            sweeps += 1;
            record(&ws);
            if change < tol {
                continue 'outer;
            }
        }
    }
    Ok(InnerSolution {
        gamma: Coefficients::from_vec(ws.gamma),
        sweeps,
        converged,
    })
}
