//! IRLS fitting of AW-DPD-LASSO estimates, λ paths and HGIC selection.
//!
//! Each outer iteration builds the Newton surrogate of the DPD loss at the current point,
//! solves its weighted-ℓ1 least-squares problem by coordinate descent, and moves along the
//! segment between the current point and the surrogate solution to the best grid point of
//! the penalized objective.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Coefficients, Dataset};
use crate::deriv::bundle_from_eta;
use crate::error::{Error, Result};
use crate::inner::{solve_weighted_lasso, InnerConfig, SurrogateProblem};
use crate::loss::{dpd_from_eta, nll_from_eta, DpdParams};
use crate::penalty::{
    compute_weights, concave_penalty_value, penalty_value, PenaltyWeights, WeightScheme,
};

/// Bound on the magnitude of the default starting intercept.
pub const INTERCEPT_INIT_BOUND: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaGrid {
    /// Strictly descending positive values.
    Explicit(Vec<f64>),
    /// `points` values log-spaced from `λ_max` down to `λ_max · ratio`.
    Auto { points: usize, ratio: f64 },
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid::Auto {
            points: 50,
            ratio: 1e-3,
        }
    }
}

/// How often adaptive weights are recomputed during one fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRefresh {
    /// Recompute `w(|β_j^(m)|)` from the current iterate at every IRLS iteration.
    EveryIteration,
    /// Compute the weights once from the starting point of the fit.
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarmStart {
    /// Each λ starts from the previous λ's solution.
    Chain,
    /// Each λ starts from the path's initial coefficients.
    FromInitial,
}

/// Missing fields take their defaults when deserialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub alpha: f64,
    /// Penalty level for single fits.
    pub lambda: f64,
    pub lambda_grid: LambdaGrid,
    pub scheme: WeightScheme,
    pub refresh: WeightRefresh,
    pub max_iter: usize,
    /// Relative objective decrease below which the outer loop stops.
    pub obj_tol: f64,
    /// Number of equally spaced step sizes in `[0, 1]`, endpoints included.
    pub line_search_points: usize,
    pub inner: InnerConfig,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            lambda: 0.1,
            lambda_grid: LambdaGrid::default(),
            scheme: WeightScheme::constant(),
            refresh: WeightRefresh::EveryIteration,
            max_iter: 100,
            obj_tol: 1e-7,
            line_search_points: 20,
            inner: InnerConfig::default(),
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        DpdParams::new(self.alpha)?;
        self.scheme.validate()?;
        if self.max_iter == 0 || self.line_search_points < 2 {
            return Err(Error::InvalidInput(
                "max_iter must be >= 1 and the line search needs >= 2 points".into(),
            ));
        }
        if !(self.obj_tol > 0.0) || !(self.inner.tol > 0.0) || self.inner.max_sweeps == 0 {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        match &self.lambda_grid {
            LambdaGrid::Explicit(grid) => {
                if grid.is_empty() || grid.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
                    return Err(Error::InvalidInput(
                        "lambda grid must be nonempty with positive finite entries".into(),
                    ));
                }
                if grid.windows(2).any(|w| !(w[1] < w[0])) {
                    return Err(Error::InvalidInput(
                        "lambda grid must be strictly descending".into(),
                    ));
                }
            }
            LambdaGrid::Auto { points, ratio } => {
                if *points == 0 || !(*ratio > 0.0 && *ratio <= 1.0) {
                    return Err(Error::InvalidInput(
                        "auto grid needs points >= 1 and ratio in (0, 1]".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn params(&self) -> DpdParams {
        DpdParams::new(self.alpha).expect("validated")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub lambda: f64,
    pub beta_hat: Coefficients,
    pub support: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the start point followed by one entry per iteration.
    pub objective_trace: Vec<f64>,
    /// Share of Hessian weights floored, over all observations and iterations.
    pub clamped_fraction: f64,
    /// Iterations whose inner solve hit its sweep budget.
    pub inner_unconverged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub lambda: f64,
    pub fit: Option<FitResult>,
    pub hgic: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub points: Vec<PathPoint>,
    pub lambda_star: f64,
    pub selected_index: usize,
    pub selected: FitResult,
}

impl PathResult {
    pub fn lambdas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lambda).collect()
    }

    pub fn hgic_values(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.hgic).collect()
    }
}

/// Both stages of an adaptive fit. `adaptive` is `None` for a constant-weight config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStageResult {
    pub initial: PathResult,
    pub adaptive: Option<PathResult>,
}

impl TwoStageResult {
    pub fn final_path(&self) -> &PathResult {
        self.adaptive.as_ref().unwrap_or(&self.initial)
    }

    pub fn selected(&self) -> &FitResult {
        &self.final_path().selected
    }
}

/// Intercept `logit(ȳ)` (clamped to `±10`) with all slopes zero.
pub fn default_initial(data: &Dataset) -> Coefficients {
    let ybar = data.y().mean();
    let logit = (ybar / (1.0 - ybar)).ln();
    let mut b = Coefficients::zeros(data.k()).into_vector();
    b[0] = logit.clamp(-INTERCEPT_INIT_BOUND, INTERCEPT_INIT_BOUND);
    Coefficients::from_vector(b)
}

/// High-dimensional GIC: `-2 log L(β̂)/n + (log log n · log k / n) ‖β̂‖₀`.
pub fn hgic(data: &Dataset, beta_hat: &Coefficients) -> Result<f64> {
    data.check_beta(beta_hat)?;
    let n = data.n() as f64;
    if n <= std::f64::consts::E {
        return Err(Error::InvalidInput(format!(
            "HGIC needs n > e (log log n > 0), got n = {}",
            data.n()
        )));
    }
    let k = data.k().max(1) as f64;
    let loglik = -nll_from_eta(data.y(), &data.linear_predictor(beta_hat));
    Ok(-2.0 * loglik / n + n.ln().ln() * k.ln() / n * beta_hat.l0() as f64)
}

/// Newton surrogate at `eta`: `X_m = diag(√h2) X`, `y_m = -diag(√h2) z` with
/// `z = h1 / h2 - η`. The penalty level is rescaled to `2nλ` because the surrogate
/// quadratic is `2n` times the loss's second-order expansion.
fn surrogate(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    eta: &DVector<f64>,
    alpha: f64,
    lambda: f64,
    w: PenaltyWeights,
) -> (SurrogateProblem, usize) {
    let n = y.len();
    let bundle = bundle_from_eta(y, eta, alpha);
    let root = bundle.h2.map(f64::sqrt);
    let mut xm = x.clone();
    for (i, r) in root.iter().enumerate() {
        xm.row_mut(i).scale_mut(*r);
    }
    let ym = DVector::from_fn(n, |i, _| {
        let z = bundle.h1[i] / bundle.h2[i] - eta[i];
        -root[i] * z
    });
    (
        SurrogateProblem {
            xm,
            ym,
            lambda: 2.0 * n as f64 * lambda,
            w,
        },
        bundle.clamped_count,
    )
}

/// Smallest λ at which the first IRLS surrogate from `beta0` zeroes every slope.
pub fn lambda_max(data: &Dataset, alpha: f64, beta0: &Coefficients, w: &PenaltyWeights) -> f64 {
    let eta = data.linear_predictor(beta0);
    let (p, _) = surrogate(data.x(), data.y(), &eta, alpha, 0.0, w.clone());
    p.zero_threshold() / (2.0 * data.n() as f64)
}

fn log_grid(lmax: f64, points: usize, ratio: f64) -> Vec<f64> {
    if points == 1 {
        return vec![lmax];
    }
    (0..points)
        .map(|i| lmax * ratio.powf(i as f64 / (points - 1) as f64))
        .collect()
}

/// The λ grid a path from `beta0` would use.
pub fn resolve_grid(data: &Dataset, cfg: &FitConfig, beta0: &Coefficients) -> Result<Vec<f64>> {
    match &cfg.lambda_grid {
        LambdaGrid::Explicit(grid) => Ok(grid.clone()),
        LambdaGrid::Auto { points, ratio } => {
            // Weights at the top of the grid: SCAD weights are all 1 once λ exceeds every
            // |β̃_j|, so the constant-weight threshold is raised to at least that level.
            let (w, floor) = match cfg.scheme.function {
                crate::penalty::WeightFunction::ScadDeriv { .. } => (
                    PenaltyWeights::ones(data.k()),
                    beta0.slopes().iter().fold(0.0f64, |m, b| m.max(b.abs())),
                ),
                _ => (compute_weights(beta0, &cfg.scheme, 1.0)?, 0.0),
            };
            let lmax = lambda_max(data, cfg.alpha, beta0, &w).max(floor);
            if !(lmax > 0.0) || !lmax.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "cannot build a lambda grid: lambda_max = {lmax}"
                )));
            }
            Ok(log_grid(lmax, *points, *ratio))
        }
    }
}

/// Objective recorded in the trace and used for stopping.
///
/// With refreshed adaptive weights the penalty is `λ Σ P(|β_j|)`, `P` the primitive of the
/// weight function; the weighted-ℓ1 line-search objective majorizes it, so it cannot increase.
fn tracked_objective(
    y: &DVector<f64>,
    eta: &DVector<f64>,
    beta: &Coefficients,
    cfg: &FitConfig,
    lambda: f64,
    frozen: Option<&PenaltyWeights>,
) -> f64 {
    let loss = dpd_from_eta(y, eta, cfg.alpha);
    match frozen {
        Some(w) => loss + penalty_value(beta, w, lambda),
        None => loss + concave_penalty_value(beta, &cfg.scheme, lambda),
    }
}

/// Fits at `cfg.lambda` starting from `beta0`.
pub fn fit(data: &Dataset, cfg: &FitConfig, beta0: &Coefficients) -> Result<FitResult> {
    cfg.validate()?;
    fit_at(data, cfg, cfg.lambda, beta0)
}

fn fit_at(data: &Dataset, cfg: &FitConfig, lambda: f64, beta0: &Coefficients) -> Result<FitResult> {
    data.check_beta(beta0)?;
    if !beta0.is_finite() {
        return Err(Error::InvalidInput("initial coefficients must be finite".into()));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
    }
    let n = data.n();
    let x = data.x();
    let y = data.y();
    let alpha = cfg.params().alpha();

    let frozen = match (cfg.scheme.is_adaptive(), cfg.refresh) {
        (true, WeightRefresh::EveryIteration) => None,
        _ => Some(compute_weights(beta0, &cfg.scheme, lambda)?),
    };

    let mut beta = beta0.clone();
    let mut eta = data.linear_predictor(&beta);
    let mut objective = tracked_objective(y, &eta, &beta, cfg, lambda, frozen.as_ref());
    let mut trace = vec![objective];
    let mut converged = false;
    let mut iterations = 0;
    let mut clamped_total = 0usize;
    let mut inner_unconverged = 0;
    let last = (cfg.line_search_points - 1) as f64;

    for m in 1..=cfg.max_iter {
        iterations = m;
        let w = match &frozen {
            Some(w) => w.clone(),
            None => compute_weights(&beta, &cfg.scheme, lambda)?,
        };
        let (problem, clamped) = surrogate(x, y, &eta, alpha, lambda, w);
        clamped_total += clamped;
        let inner = solve_weighted_lasso(&problem, &beta, cfg.inner.tol, cfg.inner.max_sweeps)?;
        if !inner.converged {
            inner_unconverged += 1;
        }
        let gamma = inner.gamma.as_vector();
        let eta_gamma = x * gamma;

        // t = 1 keeps the current point, so the search never increases the objective.
        let w = &problem.w;
        let mut best_obj = dpd_from_eta(y, &eta, alpha) + penalty_value(&beta, w, lambda);
        let mut best: Option<(DVector<f64>, DVector<f64>)> = None;
        for i in 0..cfg.line_search_points - 1 {
            let t = i as f64 / last;
            let b_t = beta.as_vector() * t + gamma * (1.0 - t);
            let e_t = &eta * t + &eta_gamma * (1.0 - t);
            let q = dpd_from_eta(y, &e_t, alpha)
                + penalty_value(&Coefficients::from_vector(b_t.clone()), w, lambda);
            if q.is_finite() && !(q >= best_obj) {
                best_obj = q;
                best = Some((b_t, e_t));
            }
        }
        if !best_obj.is_finite() {
            return Err(Error::NonFiniteObjective {
                iteration: m,
                lambda,
                beta: beta.as_slice().to_vec(),
            });
        }
        let mut next = objective;
        if let Some((b, e)) = best {
            let candidate = Coefficients::from_vector(b);
            let value = tracked_objective(y, &e, &candidate, cfg, lambda, frozen.as_ref());
            // The majorization guarantees no increase; rounding can still produce one.
            if value <= objective {
                beta = candidate;
                eta = e;
                next = value;
            }
        }
        let decrease = objective - next;
        trace.push(next);
        objective = next;
        if decrease <= cfg.obj_tol * objective.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        lambda,
        support: beta.support(),
        beta_hat: beta,
        iterations,
        converged,
        objective_trace: trace,
        clamped_fraction: clamped_total as f64 / (n * iterations.max(1)) as f64,
        inner_unconverged,
    })
}

/// Fits every λ of the grid (chained warm starts) and selects `λ*` by HGIC.
pub fn fit_path(data: &Dataset, cfg: &FitConfig, beta0: &Coefficients) -> Result<PathResult> {
    fit_path_with(data, cfg, beta0, WarmStart::Chain)
}

pub fn fit_path_with(
    data: &Dataset,
    cfg: &FitConfig,
    beta0: &Coefficients,
    warm: WarmStart,
) -> Result<PathResult> {
    cfg.validate()?;
    data.check_beta(beta0)?;
    let grid = resolve_grid(data, cfg, beta0)?;
    let mut points = Vec::with_capacity(grid.len());
    let mut start = beta0.clone();
    let mut last_error = String::new();
    for &lambda in &grid {
        match fit_at(data, cfg, lambda, &start) {
            Ok(f) => {
                let hgic = hgic(data, &f.beta_hat).ok().filter(|h| h.is_finite());
                if warm == WarmStart::Chain {
                    start = f.beta_hat.clone();
                }
                points.push(PathPoint {
                    lambda,
                    fit: Some(f),
                    hgic,
                    error: None,
                });
            }
            Err(e) => {
                last_error = e.to_string();
                points.push(PathPoint {
                    lambda,
                    fit: None,
                    hgic: None,
                    error: Some(last_error.clone()),
                });
            }
        }
    }
    // Strict comparison over a descending grid breaks ties toward the larger λ.
    let mut selected: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        if let Some(h) = p.hgic {
            if selected.is_none_or(|(_, best)| h < best) {
                selected = Some((i, h));
            }
        }
    }
    let selected_index = match selected {
        Some((i, _)) => i,
        None => {
            // Fits that succeeded but have no finite HGIC (n too small) fall back to the last one.
            match points.iter().rposition(|p| p.fit.is_some()) {
                Some(i) => i,
                None => return Err(Error::PathFailed(last_error)),
            }
        }
    };
    let chosen = points[selected_index].fit.clone().expect("selected point has a fit");
    Ok(PathResult {
        lambda_star: points[selected_index].lambda,
        selected_index,
        selected: chosen,
        points,
    })
}

/// DPD-LASSO path from the default start, then (for adaptive schemes) a second path whose
/// every λ starts from the first stage's selected coefficients.
pub fn two_stage_fit(data: &Dataset, cfg: &FitConfig) -> Result<TwoStageResult> {
    cfg.validate()?;
    let stage1_cfg = FitConfig {
        scheme: WeightScheme::constant().with_cap(cfg.scheme.cap),
        ..cfg.clone()
    };
    let initial = fit_path(data, &stage1_cfg, &default_initial(data))?;
    if !cfg.scheme.is_adaptive() {
        return Ok(TwoStageResult {
            initial,
            adaptive: None,
        });
    }
    let beta_tilde = initial.selected.beta_hat.clone();
    let adaptive = fit_path_with(data, cfg, &beta_tilde, WarmStart::FromInitial)?;
    Ok(TwoStageResult {
        initial,
        adaptive: Some(adaptive),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        let cov = DMatrix::from_fn(40, 3, |i, j| ((i * (j + 3) + 7 * j) as f64 * 0.731).sin());
        let y: Vec<f64> = (0..40)
            .map(|i| {
                let e = 2.0 * cov[(i, 0)] - 1.5 * cov[(i, 2)] + 0.3 * ((i as f64) * 1.7).cos();
                if e > 0.0 { 1.0 } else { 0.0 }
            })
            .collect();
        Dataset::new(y, cov).unwrap()
    }

    #[test]
    fn hgic_intercept_only_balanced() {
        let n = 100;
        let k = 500;
        let cov = DMatrix::from_fn(n, k, |i, j| ((i * 31 + j * 17) % 97) as f64 + (j as f64) * 1e-3 * (i % 3) as f64);
        let y: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let d = Dataset::new(y, cov).unwrap();
        let b = Coefficients::zeros(k);
        assert!((hgic(&d, &b).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn hgic_rejects_tiny_n() {
        let d = Dataset::from_design(vec![0.0, 1.0], DMatrix::from_element(2, 1, 1.0)).unwrap();
        assert!(hgic(&d, &Coefficients::zeros(0)).is_err());
    }

    #[test]
    fn grid_validation() {
        let mut cfg = FitConfig {
            lambda_grid: LambdaGrid::Explicit(vec![0.1, 0.2]),
            ..FitConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.lambda_grid = LambdaGrid::Explicit(vec![]);
        assert!(cfg.validate().is_err());
        cfg.lambda_grid = LambdaGrid::Explicit(vec![0.2, 0.1]);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn lambda_max_zeroes_all_slopes() {
        let d = toy();
        for alpha in [0.0, 0.5] {
            let cfg = FitConfig {
                alpha,
                ..FitConfig::default()
            };
            let path = fit_path(&d, &cfg, &default_initial(&d)).unwrap();
            assert!(path.points[0].fit.as_ref().unwrap().support.is_empty());
            assert!(!path.points.last().unwrap().fit.as_ref().unwrap().support.is_empty());
        }
    }

    #[test]
    fn single_point_path_equals_fit() {
        let d = toy();
        let cfg = FitConfig {
            alpha: 0.3,
            lambda: 0.02,
            lambda_grid: LambdaGrid::Explicit(vec![0.02]),
            ..FitConfig::default()
        };
        let b0 = default_initial(&d);
        let single = fit(&d, &cfg, &b0).unwrap();
        let path = fit_path(&d, &cfg, &b0).unwrap();
        assert_eq!(path.selected, single);
        assert_eq!(path.lambda_star, 0.02);
    }

    #[test]
    fn constant_scheme_two_stage_is_one_path() {
        let d = toy();
        let cfg = FitConfig {
            alpha: 0.2,
            lambda_grid: LambdaGrid::Auto { points: 8, ratio: 1e-2 },
            ..FitConfig::default()
        };
        let two = two_stage_fit(&d, &cfg).unwrap();
        let one = fit_path(&d, &cfg, &default_initial(&d)).unwrap();
        assert!(two.adaptive.is_none());
        assert_eq!(two.initial, one);
    }

    #[test]
    fn default_initial_clamps_intercept() {
        let d = Dataset::from_design(vec![1.0; 5], DMatrix::from_element(5, 1, 1.0)).unwrap();
        assert_eq!(default_initial(&d).intercept(), INTERCEPT_INIT_BOUND);
    }

    #[test]
    fn traces_are_monotone_for_every_scheme() {
        let d = toy();
        for scheme in [WeightScheme::constant(), WeightScheme::hard_threshold(), WeightScheme::scad(3.7)] {
            let cfg = FitConfig {
                alpha: 0.5,
                scheme,
                lambda_grid: LambdaGrid::Auto { points: 10, ratio: 1e-2 },
                ..FitConfig::default()
            };
            let res = two_stage_fit(&d, &cfg).unwrap();
            for path in [Some(&res.initial), res.adaptive.as_ref()].into_iter().flatten() {
                for p in &path.points {
                    let f = p.fit.as_ref().unwrap();
                    for pair in f.objective_trace.windows(2) {
                        assert!(pair[1] <= pair[0]);
                    }
                }
            }
        }
    }
}
