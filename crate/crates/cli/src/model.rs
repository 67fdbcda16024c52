//! Versioned JSON model files.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use awdpd_core::{sigmoid, Coefficients, Dataset, RawTable, WeightScheme};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::ingest::Preprocessing;

pub const MODEL_SCHEMA: &str = "awdpd-model/1";
pub const INTERCEPT_NAME: &str = "(intercept)";

/// Coefficients are on the standardized scale of `preprocessing`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema: String,
    pub alpha: f64,
    pub lambda_star: f64,
    pub scheme: WeightScheme,
    pub coefficients: IndexMap<String, f64>,
    pub preprocessing: Preprocessing,
}

impl ModelFile {
    pub fn new(alpha: f64, lambda_star: f64, scheme: WeightScheme, beta: &Coefficients, pre: Preprocessing) -> CliResult<Self> {
        if beta.num_slopes() != pre.retained.len() {
            return Err(CliError::Data(format!(
                "{} slopes for {} retained columns",
                beta.num_slopes(),
                pre.retained.len()
            )));
        }
        let mut coefficients = IndexMap::with_capacity(beta.len());
        coefficients.insert(INTERCEPT_NAME.to_string(), beta.intercept());
        for (name, b) in pre.retained.iter().zip(beta.slopes()) {
            coefficients.insert(name.clone(), *b);
        }
        Ok(Self {
            schema: MODEL_SCHEMA.to_string(),
            alpha,
            lambda_star,
            scheme,
            coefficients,
            preprocessing: pre,
        })
    }

    /// Checks the schema tag and that coefficient names follow the retained columns.
    pub fn validate(&self) -> CliResult<()> {
        if self.schema != MODEL_SCHEMA {
            return Err(CliError::Data(format!("unsupported model schema `{}`", self.schema)));
        }
        let p = &self.preprocessing;
        let k = p.retained.len();
        if p.means.len() != k || p.scales.len() != k {
            return Err(CliError::Data("preprocessing means/scales do not match retained columns".into()));
        }
        let names: Vec<&str> = self.coefficients.keys().map(String::as_str).collect();
        let expected: Vec<&str> = std::iter::once(INTERCEPT_NAME)
            .chain(p.retained.iter().map(String::as_str))
            .collect();
        if names != expected {
            return Err(CliError::Data(
                "coefficient names must be the intercept followed by the retained columns".into(),
            ));
        }
        Ok(())
    }

    pub fn beta(&self) -> Coefficients {
        Coefficients::from_vec(self.coefficients.values().copied().collect())
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let mut value: serde_json::Value = serde_json::from_reader(BufReader::new(file))?;
        // Fit reports nest the model under `model`.
        if let Some(inner) = value.get_mut("model").filter(|m| m.is_object()) {
            value = inner.take();
        }
        let model: ModelFile = serde_json::from_value(value)?;
        model.validate()?;
        Ok(model)
    }

    /// Fitted probabilities for the rows of a raw table.
    pub fn predict(&self, table: &RawTable) -> CliResult<Vec<f64>> {
        let x = self.preprocessing.design(table)?;
        let data = Dataset::from_design(table.y.clone(), x)?;
        Ok(data.linear_predictor(&self.beta()).iter().map(|e| sigmoid(*e)).collect())
    }
}
