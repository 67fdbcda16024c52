//! Logistic model primitives and the density power divergence loss family.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::{Coefficients, Dataset};
use crate::error::{Error, Result};

/// Probabilities are clamped to `[PI_CLAMP, 1 - PI_CLAMP]` before powers and logs.
pub const PI_CLAMP: f64 = 1e-10;

/// Robustness tuning parameter of the DPD loss. `alpha = 0` is the likelihood limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpdParams {
    alpha: f64,
}

impl DpdParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!(
                "alpha must be finite and >= 0, got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// `e^η / (1 + e^η)`, branching on the sign of `η` so neither tail overflows.
#[inline]
pub fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn clamp_pi(pi: f64) -> f64 {
    pi.clamp(PI_CLAMP, 1.0 - PI_CLAMP)
}

/// Per-observation DPD term (for `alpha > 0`), without the `1/n^{1+α}` normalization.
///
/// The constant `(y^{α+1} + (1-y)^{α+1}) / α` equals `1/α` for binary `y` and is kept so
/// that the term is a nonnegative divergence contribution.
#[inline]
pub(crate) fn dpd_term(pi: f64, y: f64, alpha: f64) -> f64 {
    let p = clamp_pi(pi);
    let q = 1.0 - p;
    let fit = p.powf(alpha) * p + q.powf(alpha) * q;
    let cross = y * p.powf(alpha) + (1.0 - y) * q.powf(alpha);
    fit - (1.0 + 1.0 / alpha) * cross + 1.0 / alpha
}

#[inline]
fn nll_term(pi: f64, y: f64) -> f64 {
    let p = clamp_pi(pi);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

pub(crate) fn nll_from_eta(y: &DVector<f64>, eta: &DVector<f64>) -> f64 {
    y.iter()
        .zip(eta.iter())
        .map(|(&yi, &e)| nll_term(sigmoid(e), yi))
        .sum()
}

/// DPD loss evaluated from a precomputed linear predictor.
pub(crate) fn dpd_from_eta(y: &DVector<f64>, eta: &DVector<f64>, alpha: f64) -> f64 {
    let n = y.len() as f64;
    if alpha == 0.0 {
        return nll_from_eta(y, eta) / n;
    }
    let sum: f64 = y
        .iter()
        .zip(eta.iter())
        .map(|(&yi, &e)| dpd_term(sigmoid(e), yi, alpha))
        .sum();
    sum / n.powf(1.0 + alpha)
}

/// Negative Bernoulli log-likelihood `-Σ [y log π + (1-y) log(1-π)]`.
pub fn nll(data: &Dataset, beta: &Coefficients) -> f64 {
    nll_from_eta(data.y(), &data.linear_predictor(beta))
}

/// DPD loss `n^{-(1+α)} Σ_i [π^{1+α} + (1-π)^{1+α} - (1+1/α)(y π^α + (1-y)(1-π)^α) + 1/α]`.
///
/// At `alpha = 0` this is exactly `nll / n`, the continuous limit for binary responses.
pub fn dpd_loss(data: &Dataset, beta: &Coefficients, params: DpdParams) -> f64 {
    dpd_from_eta(data.y(), &data.linear_predictor(beta), params.alpha())
}
