use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// `π̂ ≥ 0.5` is classified as 1.
pub const CLASSIFICATION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub n: usize,
    pub accuracy: f64,
    /// Mean absolute difference between fitted probability and label.
    pub mae: f64,
}

pub fn evaluate(probs: &[f64], y: &[f64]) -> CliResult<Evaluation> {
    if probs.is_empty() {
        return Err(CliError::Data("evaluation set is empty".into()));
    }
    if probs.len() != y.len() {
        return Err(CliError::Data(format!("{} predictions for {} labels", probs.len(), y.len())));
    }
    let n = probs.len();
    let correct = probs
        .iter()
        .zip(y)
        .filter(|(p, y)| ((**p >= CLASSIFICATION_THRESHOLD) as u8 as f64) == **y)
        .count();
    let mae = probs.iter().zip(y).map(|(p, y)| (p - y).abs()).sum::<f64>() / n as f64;
    Ok(Evaluation {
        n,
        accuracy: correct as f64 / n as f64,
        mae,
    })
}
