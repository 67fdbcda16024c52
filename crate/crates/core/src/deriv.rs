//! Analytic first and second derivatives of the DPD loss.
//!
//! Both are written as `(1/n) Xᵀ h1` and `(1/n) Xᵀ diag(h2) X` with per-observation
//! weights, which is the form the IRLS surrogate consumes.

use nalgebra::DVector;

use crate::data::{Coefficients, Dataset};
use crate::loss::{sigmoid, DpdParams};

/// Floor applied to the Hessian weights before they enter the IRLS surrogate.
pub const HESSIAN_FLOOR: f64 = 1e-6;

/// Per-observation gradient and Hessian weights at one coefficient vector.
#[derive(Debug, Clone)]
pub struct DerivBundle {
    /// `H^(1)_i = ((α+1)/n^α) ψ_α(x_iᵀβ, y_i)`.
    pub h1: DVector<f64>,
    /// Hessian weights floored at [`HESSIAN_FLOOR`].
    pub h2: DVector<f64>,
    /// Exact Hessian weights before flooring; may be negative for `alpha > 0`.
    pub h2_raw: DVector<f64>,
    pub clamped_count: usize,
}

/// Estimating-equation kernel `ψ_α`.
///
/// Uses `(e^{αη} + e^η)/(1+e^η)^{α+1} = π^α(1-π) + π(1-π)^α` and
/// `(e^η - y(1+e^η))/(1+e^η) = π - y`, so no raw exponential appears.
#[inline]
pub fn psi(xb: f64, y: f64, alpha: f64) -> f64 {
    let p = sigmoid(xb);
    let q = sigmoid(-xb);
    if alpha == 0.0 {
        return p - y;
    }
    (p.powf(alpha) * q + p * q.powf(alpha)) * (p - y)
}

/// Second derivative of the per-observation DPD term with respect to `xb`, divided by `α+1`.
#[inline]
fn psi_slope(xb: f64, y: f64, alpha: f64) -> f64 {
    let p = sigmoid(xb);
    let q = sigmoid(-xb);
    let pa = p.powf(alpha);
    let qa = q.powf(alpha);
    let fit = pa * p * q * ((1.0 + alpha) - (2.0 + alpha) * p) + qa * p * p * (2.0 - (2.0 + alpha) * p);
    let cross = pa * q * (alpha - (1.0 + alpha) * p) + p * qa * (1.0 - (alpha + 1.0) * p);
    fit - y * cross
}

#[inline]
fn scale(alpha: f64, n: usize) -> f64 {
    (alpha + 1.0) / (n as f64).powf(alpha)
}

/// Gradient weights `H^(1)` from a linear predictor.
pub(crate) fn gradient_weights(y: &DVector<f64>, eta: &DVector<f64>, alpha: f64) -> DVector<f64> {
    let c = scale(alpha, y.len());
    DVector::from_iterator(
        y.len(),
        y.iter().zip(eta.iter()).map(|(&yi, &e)| c * psi(e, yi, alpha)),
    )
}

pub(crate) fn bundle_from_eta(y: &DVector<f64>, eta: &DVector<f64>, alpha: f64) -> DerivBundle {
    let n = y.len();
    let c = scale(alpha, n);
    let h1 = gradient_weights(y, eta, alpha);
    let h2_raw = DVector::from_iterator(
        n,
        y.iter().zip(eta.iter()).map(|(&yi, &e)| c * psi_slope(e, yi, alpha)),
    );
    let mut clamped_count = 0;
    let h2 = h2_raw.map(|h| {
        if h < HESSIAN_FLOOR || h.is_nan() {
            clamped_count += 1;
            HESSIAN_FLOOR
        } else {
            h
        }
    });
    DerivBundle {
        h1,
        h2,
        h2_raw,
        clamped_count,
    }
}

/// Exact gradient of [`crate::loss::dpd_loss`]: `(1/n) Xᵀ H^(1)`.
pub fn gradient(data: &Dataset, beta: &Coefficients, params: DpdParams) -> DVector<f64> {
    let eta = data.linear_predictor(beta);
    let h1 = gradient_weights(data.y(), &eta, params.alpha());
    data.x().tr_mul(&h1) / data.n() as f64
}

/// Per-observation Hessian weights; `(1/n) Xᵀ diag(h2_raw) X` is the exact Hessian.
pub fn hessian_diag(data: &Dataset, beta: &Coefficients, params: DpdParams) -> DerivBundle {
    let eta = data.linear_predictor(beta);
    bundle_from_eta(data.y(), &eta, params.alpha())
}
