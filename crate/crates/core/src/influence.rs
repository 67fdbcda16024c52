//! Influence function of the AW-DPD-LASSO functional under point contamination, for a
//! fixed design (expectations over `x` replaced by sample averages).

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Coefficients, Dataset};
use crate::deriv::psi;
use crate::error::{Error, Result};
use crate::loss::{sigmoid, DpdParams};
use crate::penalty::WeightScheme;

/// `S` is reported singular when `σ_min ≤ SINGULAR_RCOND · σ_max`.
pub const SINGULAR_RCOND: f64 = 1e-12;

/// Intercept plus the support of `beta`.
pub fn default_active_set(beta: &Coefficients) -> Vec<usize> {
    std::iter::once(0).chain(beta.support()).collect()
}

/// `S_α` restricted to `active`:
/// `((α+1)/n^α) (1/n) Σ_i [π^{α+1}(1-π)² + π²(1-π)^{α+1}] x_{iA} x_{iAᵀ}`.
///
/// The bracket is the second derivative of the per-observation loss averaged over
/// `y ~ Bernoulli(π)`; at `α = 0` it is the Fisher weight `π(1-π)`.
pub fn j_alpha(
    data: &Dataset,
    beta: &Coefficients,
    alpha: f64,
    active: &[usize],
) -> Result<DMatrix<f64>> {
    let params = DpdParams::new(alpha)?;
    data.check_beta(beta)?;
    check_active(active, beta.len())?;
    let alpha = params.alpha();
    let n = data.n();
    let eta = data.linear_predictor(beta);
    let scale = (alpha + 1.0) / (n as f64).powf(alpha) / n as f64;
    let xa = data.x().select_columns(active);
    let c = DVector::from_iterator(
        n,
        eta.iter().map(|&e| {
            let p = sigmoid(e);
            let q = sigmoid(-e);
            p.powf(alpha + 1.0) * q * q + p * p * q.powf(alpha + 1.0)
        }),
    );
    let mut weighted = xa.clone();
    for (i, ci) in c.iter().enumerate() {
        weighted.row_mut(i).scale_mut(*ci);
    }
    Ok(xa.tr_mul(&weighted) * scale)
}

fn check_active(active: &[usize], len: usize) -> Result<()> {
    if active.is_empty() {
        return Err(Error::InvalidInput("active set is empty".into()));
    }
    if active.windows(2).any(|w| w[1] <= w[0]) || active.iter().any(|&j| j >= len) {
        return Err(Error::InvalidInput(format!(
            "active set must be strictly increasing indices below {len}"
        )));
    }
    Ok(())
}

/// Influence of the initial estimator on the active coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum IfInitial {
    /// Weights treated as fixed.
    Zero,
    /// One value per active coordinate.
    Vector(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct IfRequest<'a> {
    pub data: &'a Dataset,
    pub beta: Coefficients,
    /// Initial estimate the weights are built from; `None` means `beta` itself.
    pub beta_initial: Option<Coefficients>,
    pub alpha: f64,
    pub lambda: f64,
    pub scheme: WeightScheme,
    pub if_initial: IfInitial,
    /// Active coordinates; `None` means [`default_active_set`].
    pub active: Option<Vec<usize>>,
    pub y_t: f64,
    /// Contamination covariates including the leading 1.
    pub x_t: DVector<f64>,
}

impl<'a> IfRequest<'a> {
    pub fn new(data: &'a Dataset, beta: Coefficients, alpha: f64, lambda: f64, scheme: WeightScheme) -> Self {
        let k1 = beta.len();
        let mut x_t = DVector::zeros(k1);
        x_t[0] = 1.0;
        Self {
            data,
            beta,
            beta_initial: None,
            alpha,
            lambda,
            scheme,
            if_initial: IfInitial::Zero,
            active: None,
            y_t: 1.0,
            x_t,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Influence {
    pub active: Vec<usize>,
    /// Values on the active coordinates.
    pub block: DVector<f64>,
    /// Full-length vector, exactly 0 off the active set.
    pub full: DVector<f64>,
}

impl Influence {
    pub fn norm(&self) -> f64 {
        self.block.norm()
    }
}

fn solve_spd(s: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = s.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > SINGULAR_RCOND * smax) {
        return Err(Error::Singular {
            smallest_singular_value: smin,
        });
    }
    svd.solve(rhs, 0.0)
        .map_err(|_| Error::Singular {
            smallest_singular_value: smin,
        })
}

/// `-S⁻¹ [((1+α)/n^α) ψ(x_tᵀβ, y_t) x_{tA} + λ P* + λ P⁽²⁾ IF_initial]`.
///
/// `P*_j = w(|β̃_j|) sign(β_j)` and `P⁽²⁾ = diag(w'(|β̃_j|) sign(β̃_j β_j))`, both 0 on the
/// intercept.
pub fn influence_vector(req: &IfRequest) -> Result<Influence> {
    let data = req.data;
    data.check_beta(&req.beta)?;
    if !(req.y_t == 0.0 || req.y_t == 1.0) {
        return Err(Error::InvalidInput(format!("y_t must be 0 or 1, got {}", req.y_t)));
    }
    if req.x_t.len() != req.beta.len() || req.x_t[0] != 1.0 {
        return Err(Error::DimensionMismatch(format!(
            "x_t must have length {} with a leading 1",
            req.beta.len()
        )));
    }
    req.scheme.validate()?;
    let beta_init = req.beta_initial.as_ref().unwrap_or(&req.beta);
    data.check_beta(beta_init)?;
    let active = req.active.clone().unwrap_or_else(|| default_active_set(&req.beta));
    let s = j_alpha(data, &req.beta, req.alpha, &active)?;

    let alpha = req.alpha;
    let n = data.n() as f64;
    let score = (1.0 + alpha) / n.powf(alpha) * psi(req.x_t.dot(req.beta.as_vector()), req.y_t, alpha);
    let mut rhs = DVector::from_iterator(active.len(), active.iter().map(|&j| score * req.x_t[j]));

    let init = match &req.if_initial {
        IfInitial::Zero => None,
        IfInitial::Vector(v) => {
            if v.len() != active.len() {
                return Err(Error::DimensionMismatch(format!(
                    "initial influence has length {}, active set has {}",
                    v.len(),
                    active.len()
                )));
            }
            Some(v)
        }
    };
    for (a, &j) in active.iter().enumerate() {
        if j == 0 {
            continue;
        }
        let b = req.beta[j];
        let bt = beta_init[j];
        let p_star = req.scheme.weight(bt.abs(), req.lambda) * b.signum() * (b != 0.0) as i32 as f64;
        rhs[a] += req.lambda * p_star;
        if let Some(v) = init {
            let p2 = req.scheme.weight_derivative(bt.abs(), req.lambda) * (bt * b).signum() * ((bt * b) != 0.0) as i32 as f64;
            rhs[a] += req.lambda * p2 * v[a];
        }
    }
    let block = -solve_spd(&s, &rhs)?;
    let mut full = DVector::zeros(req.beta.len());
    for (a, &j) in active.iter().enumerate() {
        full[j] = block[a];
    }
    Ok(Influence {
        active,
        block,
        full,
    })
}

/// Label given to the contamination point along a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    Fixed(u8),
    /// The label the model finds least likely: 1 when `x_tᵀβ < 0`, else 0.
    Misfit,
}

impl LabelMode {
    pub fn label(&self, eta: f64) -> f64 {
        match self {
            LabelMode::Fixed(y) => *y as f64,
            LabelMode::Misfit => {
                if eta < 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// `‖IF‖₂` at `x_t = (1, t, …, t)` for each `t`; failed points are `None`.
pub fn if_norm_curve(template: &IfRequest, labels: LabelMode, t_grid: &[f64]) -> Result<Vec<(f64, Option<f64>)>> {
    if t_grid.is_empty() {
        return Err(Error::InvalidInput("t grid is empty".into()));
    }
    if let LabelMode::Fixed(y) = labels {
        if y > 1 {
            return Err(Error::InvalidInput(format!("fixed label must be 0 or 1, got {y}")));
        }
    }
    Ok(t_grid
        .iter()
        .map(|&t| {
            let mut req = template.clone();
            req.x_t = DVector::from_fn(template.beta.len(), |j, _| if j == 0 { 1.0 } else { t });
            req.y_t = labels.label(req.x_t.dot(req.beta.as_vector()));
            (t, influence_vector(&req).ok().map(|inf| inf.norm()))
        })
        .collect())
}

/// `points` equally spaced values from `lo` to `hi`.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Standardized synthetic design with i.i.d. normal covariates and labels drawn from the
/// logistic model at `beta`.
pub fn synthetic_design(n: usize, beta: &Coefficients, seed: u64) -> Result<Dataset> {
    let k = beta.num_slopes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cov = DMatrix::from_fn(n, k, |_, _| StandardNormal.sample(&mut rng));
    let y = (0..n)
        .map(|i| {
            let eta = beta.intercept() + (0..k).map(|j| cov[(i, j)] * beta[j + 1]).sum::<f64>();
            let u: f64 = rand::Rng::random(&mut rng);
            if u < sigmoid(eta) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Dataset::new(y, cov)
}
