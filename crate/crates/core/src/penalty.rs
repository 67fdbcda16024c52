//! Adaptive weight schemes and the weighted ℓ1 penalty.

use serde::{Deserialize, Serialize};

use crate::data::Coefficients;
use crate::error::{Error, Result};

pub const DEFAULT_WEIGHT_CAP: f64 = 1e6;
pub const DEFAULT_SCAD_A: f64 = 3.7;

/// Weight function `w(|β̃_j|)` applied to an initial estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightFunction {
    /// `w ≡ 1` (plain DPD-LASSO).
    Constant,
    /// `w(s) = 1/s`, the adaptive LASSO weight.
    HardThreshold,
    /// Derivative of the SCAD penalty divided by `λ`.
    ScadDeriv { a: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightScheme {
    pub function: WeightFunction,
    /// Ceiling on every weight; a zero initial coefficient receives exactly this value.
    #[serde(default = "default_cap")]
    pub cap: f64,
}

fn default_cap() -> f64 {
    DEFAULT_WEIGHT_CAP
}

impl Default for WeightScheme {
    fn default() -> Self {
        Self::constant()
    }
}

impl WeightScheme {
    pub fn constant() -> Self {
        Self {
            function: WeightFunction::Constant,
            cap: DEFAULT_WEIGHT_CAP,
        }
    }

    pub fn hard_threshold() -> Self {
        Self {
            function: WeightFunction::HardThreshold,
            cap: DEFAULT_WEIGHT_CAP,
        }
    }

    pub fn scad(a: f64) -> Self {
        Self {
            function: WeightFunction::ScadDeriv { a },
            cap: DEFAULT_WEIGHT_CAP,
        }
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = cap;
        self
    }

    pub fn is_adaptive(&self) -> bool {
        !matches!(self.function, WeightFunction::Constant)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cap >= 1.0) || !self.cap.is_finite() {
            return Err(Error::InvalidInput(format!(
                "weight cap must be finite and at least 1, got {}",
                self.cap
            )));
        }
        if let WeightFunction::ScadDeriv { a } = self.function {
            if !(a > 2.0) || !a.is_finite() {
                return Err(Error::InvalidInput(format!("SCAD constant must exceed 2, got {a}")));
            }
        }
        Ok(())
    }

    fn check_lambda(&self, lambda: f64) -> Result<()> {
        if matches!(self.function, WeightFunction::ScadDeriv { .. }) && !(lambda > 0.0) {
            return Err(Error::InvalidInput(format!(
                "SCAD weights need a positive lambda, got {lambda}"
            )));
        }
        Ok(())
    }

    /// `w(s)` for `s = |β̃_j| ≥ 0`, capped.
    pub fn weight(&self, s: f64, lambda: f64) -> f64 {
        let raw = match self.function {
            WeightFunction::Constant => 1.0,
            WeightFunction::HardThreshold => {
                if s == 0.0 {
                    self.cap
                } else {
                    1.0 / s
                }
            }
            WeightFunction::ScadDeriv { a } => {
                if s <= lambda {
                    1.0
                } else {
                    (a * lambda - s).max(0.0) / ((a - 1.0) * lambda)
                }
            }
        };
        raw.min(self.cap)
    }

    /// `∂w/∂s` of the capped weight function (zero wherever the cap binds).
    pub fn weight_derivative(&self, s: f64, lambda: f64) -> f64 {
        match self.function {
            WeightFunction::Constant => 0.0,
            WeightFunction::HardThreshold => {
                if s == 0.0 || 1.0 / s >= self.cap {
                    0.0
                } else {
                    -1.0 / (s * s)
                }
            }
            WeightFunction::ScadDeriv { a } => {
                if s > lambda && s < a * lambda {
                    -1.0 / ((a - 1.0) * lambda)
                } else {
                    0.0
                }
            }
        }
    }

    /// Primitive `P(s) = ∫₀ˢ w(u) du` of the capped weight function.
    ///
    /// `P` is concave with `P' = w`, so `λ Σ w(|β̃_j|)|β_j|` majorizes `λ Σ P(|β_j|)` up to a
    /// constant, tight at `β = β̃`. This is the objective that re-weighted iterations descend.
    pub fn primitive(&self, s: f64, lambda: f64) -> f64 {
        match self.function {
            WeightFunction::Constant => s,
            WeightFunction::HardThreshold => {
                let knee = 1.0 / self.cap;
                if s <= knee {
                    self.cap * s
                } else {
                    1.0 + (s / knee).ln()
                }
            }
            WeightFunction::ScadDeriv { a } => {
                if s <= lambda {
                    s
                } else if s <= a * lambda {
                    (2.0 * a * lambda * s - s * s - lambda * lambda) / (2.0 * (a - 1.0) * lambda)
                } else {
                    (a + 1.0) * lambda / 2.0
                }
            }
        }
    }
}

/// One weight per covariate (no intercept entry).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyWeights(pub Vec<f64>);

impl PenaltyWeights {
    pub fn ones(k: usize) -> Self {
        Self(vec![1.0; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Weights `w_j = min(w(|β̃_j|), cap)` for `j = 1..=k`.
pub fn compute_weights(
    beta_tilde: &Coefficients,
    scheme: &WeightScheme,
    lambda: f64,
) -> Result<PenaltyWeights> {
    scheme.validate()?;
    scheme.check_lambda(lambda)?;
    Ok(PenaltyWeights(
        beta_tilde
            .slopes()
            .iter()
            .map(|b| scheme.weight(b.abs(), lambda))
            .collect(),
    ))
}

/// `λ Σ_{j≥1} w_j |β_j|`; the intercept is never penalized.
pub fn penalty_value(beta: &Coefficients, w: &PenaltyWeights, lambda: f64) -> f64 {
    debug_assert_eq!(beta.num_slopes(), w.len());
    lambda
        * beta
            .slopes()
            .iter()
            .zip(w.as_slice())
            .map(|(b, wj)| wj * b.abs())
            .sum::<f64>()
}

/// `λ Σ_{j≥1} P(|β_j|)` with `P` the primitive of the scheme's weight function.
pub fn concave_penalty_value(beta: &Coefficients, scheme: &WeightScheme, lambda: f64) -> f64 {
    lambda
        * beta
            .slopes()
            .iter()
            .map(|b| scheme.primitive(b.abs(), lambda))
            .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_initial_gets_the_cap() {
        let b = Coefficients::from_vec(vec![1.0, 0.0, 0.5]);
        let w = compute_weights(&b, &WeightScheme::hard_threshold(), 0.1).unwrap();
        assert_eq!(w.0, vec![DEFAULT_WEIGHT_CAP, 2.0]);
        let tiny = Coefficients::from_vec(vec![0.0, 1e-9]);
        let w = compute_weights(&tiny, &WeightScheme::hard_threshold(), 0.1).unwrap();
        assert_eq!(w.0, vec![DEFAULT_WEIGHT_CAP]);
    }

    #[test]
    fn scad_weights() {
        let s = WeightScheme::scad(3.7);
        let b = Coefficients::from_vec(vec![0.0, 0.05, -0.5, 0.2]);
        let w = compute_weights(&b, &s, 0.1).unwrap();
        assert_eq!(w.0[0], 1.0);
        assert_eq!(w.0[1], 0.0);
        assert!((w.0[2] - (0.37 - 0.2) / (2.7 * 0.1)).abs() < 1e-15);
        assert!(compute_weights(&b, &s, 0.0).is_err());
        assert!(WeightScheme::scad(2.0).validate().is_err());
    }

    #[test]
    fn penalty_excludes_intercept() {
        let b = Coefficients::from_vec(vec![5.0, 3.0, -2.0]);
        assert!((penalty_value(&b, &PenaltyWeights::ones(2), 0.1) - 0.5).abs() < 1e-15);
        assert_eq!(penalty_value(&Coefficients::zeros(2), &PenaltyWeights::ones(2), 0.1), 0.0);
    }

    #[test]
    fn adaptive_weights_telescope_on_own_estimate() {
        let b = Coefficients::from_vec(vec![0.7, 2.0, 0.0, -0.25, 4.0]);
        let w = compute_weights(&b, &WeightScheme::hard_threshold(), 0.3).unwrap();
        assert!((penalty_value(&b, &w, 0.3) - 0.3 * 3.0).abs() < 1e-12);
    }

    #[test]
    fn primitive_is_continuous_and_matches_weight() {
        for scheme in [WeightScheme::constant(), WeightScheme::hard_threshold(), WeightScheme::scad(3.7)] {
            let lambda = 0.2;
            for &s in &[1e-7f64, 1e-6, 0.05, 0.2, 0.3, 0.74, 1.5] {
                let h = 1e-7 * s.max(1e-6);
                let fd = (scheme.primitive(s + h, lambda) - scheme.primitive(s - h, lambda)) / (2.0 * h);
                let w = scheme.weight(s, lambda);
                assert!((fd - w).abs() < 1e-4 * w.max(1.0), "{scheme:?} s={s} fd={fd} w={w}");
            }
        }
    }

    proptest! {
        #[test]
        fn weights_are_non_increasing(mut v in proptest::collection::vec(0.0f64..5.0, 2..20), lambda in 0.01f64..1.0) {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for scheme in [WeightScheme::hard_threshold(), WeightScheme::scad(3.7)] {
                let w: Vec<f64> = v.iter().map(|s| scheme.weight(*s, lambda)).collect();
                for pair in w.windows(2) {
                    prop_assert!(pair[1] <= pair[0]);
                }
                prop_assert!(w.iter().all(|x| *x >= 0.0 && *x <= scheme.cap));
            }
        }

        #[test]
        fn penalty_is_homogeneous_and_sign_blind(
            b in proptest::collection::vec(-3.0f64..3.0, 1..10),
            lambda in 0.0f64..2.0,
            c in 0.0f64..5.0,
        ) {
            let mut full = vec![1.0];
            full.extend(&b);
            let beta = Coefficients::from_vec(full.clone());
            let flipped = Coefficients::from_vec(full.iter().map(|v| -v).collect());
            let w = PenaltyWeights(b.iter().map(|x| 0.5 + x.abs()).collect());
            let p = penalty_value(&beta, &w, lambda);
            prop_assert!((penalty_value(&flipped, &w, lambda) - p).abs() < 1e-12);
            prop_assert!((penalty_value(&beta, &w, c * lambda) - c * p).abs() < 1e-9 * (1.0 + p));
        }
    }
}
