//! Datasets with an explicit intercept column and coefficient vectors.

use std::io::Read;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Coefficient vector `(β₀, β₁, …, β_k)`; index 0 is the unpenalized intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients(DVector<f64>);

impl Coefficients {
    /// All-zero coefficients for `k` covariates (length `k + 1`).
    pub fn zeros(k: usize) -> Self {
        Self(DVector::zeros(k + 1))
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self(DVector::from_vec(values))
    }

    pub fn from_vector(values: DVector<f64>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of covariates `k`.
    pub fn num_slopes(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn intercept(&self) -> f64 {
        self.0[0]
    }

    pub fn slopes(&self) -> &[f64] {
        &self.0.as_slice()[1..]
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    /// Indices `j ≥ 1` with a nonzero coefficient. The intercept is never part of the support.
    pub fn support(&self) -> Vec<usize> {
        (1..self.0.len()).filter(|&j| self.0[j] != 0.0).collect()
    }

    /// `‖β‖₀` over the non-intercept entries.
    pub fn l0(&self) -> usize {
        self.slopes().iter().filter(|b| **b != 0.0).count()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|b| b.is_finite())
    }
}

impl std::ops::Index<usize> for Coefficients {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

impl Serialize for Coefficients {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.as_slice().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Coefficients {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Vec::<f64>::deserialize(deserializer).map(Coefficients::from_vec)
    }
}

/// Per-column centering and scaling applied to covariates `1..=k`.
///
/// Scales use the population (`1/n`) variance, so every standardized column has
/// sample mean 0, mean square 1 and Euclidean norm exactly `√n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    pub fn identity(k: usize) -> Self {
        Self {
            mean: vec![0.0; k],
            scale: vec![1.0; k],
        }
    }

    /// Maps coefficients fitted on the standardized design back to raw covariate units.
    pub fn to_original(&self, beta: &Coefficients) -> Coefficients {
        let mut out = Vec::with_capacity(beta.len());
        let mut intercept = beta.intercept();
        let mut slopes = Vec::with_capacity(self.scale.len());
        for (j, b) in beta.slopes().iter().enumerate() {
            let raw = b / self.scale[j];
            intercept -= raw * self.mean[j];
            slopes.push(raw);
        }
        out.push(intercept);
        out.extend(slopes);
        Coefficients::from_vec(out)
    }

    /// Standardizes one raw covariate row (without intercept).
    pub fn apply(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }
}

/// Binary responses and a design matrix whose column 0 is all ones.
#[derive(Debug, Clone)]
pub struct Dataset {
    y: DVector<f64>,
    x: DMatrix<f64>,
    standardization: Standardization,
    names: Vec<String>,
}

fn check_labels(y: &[f64]) -> Result<()> {
    for (row, &value) in y.iter().enumerate() {
        if value != 0.0 && value != 1.0 {
            return Err(Error::NonBinaryResponse { row, value });
        }
    }
    Ok(())
}

fn default_names(k: usize) -> Vec<String> {
    (1..=k).map(|j| format!("x{j}")).collect()
}

/// Population mean and standard deviation of a column.
pub(crate) fn mean_and_scale(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl Dataset {
    /// Builds a dataset from raw covariates (`n × k`, no intercept), standardizing every
    /// column and prepending the intercept.
    pub fn new(y: Vec<f64>, covariates: DMatrix<f64>) -> Result<Self> {
        let k = covariates.ncols();
        Self::with_names(y, covariates, default_names(k))
    }

    pub fn with_names(y: Vec<f64>, covariates: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        let n = covariates.nrows();
        let k = covariates.ncols();
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} responses for {} rows",
                y.len(),
                n
            )));
        }
        if names.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} covariates",
                names.len(),
                k
            )));
        }
        if n == 0 {
            return Err(Error::InvalidInput("dataset has no observations".into()));
        }
        check_labels(&y)?;
        let mut x = DMatrix::from_element(n, k + 1, 1.0);
        let mut std = Standardization::identity(k);
        for j in 0..k {
            let col = covariates.column(j);
            let (mean, scale) = mean_and_scale(col.iter().copied());
            if !(scale > 0.0) || !scale.is_finite() {
                return Err(Error::ZeroVariance { column: j + 1 });
            }
            for i in 0..n {
                x[(i, j + 1)] = (col[i] - mean) / scale;
            }
            std.mean[j] = mean;
            std.scale[j] = scale;
        }
        Ok(Self {
            y: DVector::from_vec(y),
            x,
            standardization: std,
            names,
        })
    }

    /// Uses `x` as the final design (column 0 must be all ones); no standardization is applied.
    pub fn from_design(y: Vec<f64>, x: DMatrix<f64>) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} responses for {} rows",
                y.len(),
                x.nrows()
            )));
        }
        if x.ncols() == 0 || x.column(0).iter().any(|v| *v != 1.0) {
            return Err(Error::InvalidInput(
                "column 0 of the design must be the all-ones intercept".into(),
            ));
        }
        check_labels(&y)?;
        let k = x.ncols() - 1;
        Ok(Self {
            y: DVector::from_vec(y),
            x,
            standardization: Standardization::identity(k),
            names: default_names(k),
        })
    }

    /// Reads a CSV with a header row and a `y` column; every other column is a numeric
    /// covariate. The intercept is synthesized.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let table = RawTable::from_csv(reader)?;
        let (n, k) = (table.y.len(), table.names.len());
        let cov = DMatrix::from_fn(n, k, |i, j| table.columns[j][i]);
        Self::with_names(table.y, cov, table.names)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of covariates, excluding the intercept.
    pub fn k(&self) -> usize {
        self.x.ncols() - 1
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn standardization(&self) -> &Standardization {
        &self.standardization
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn linear_predictor(&self, beta: &Coefficients) -> DVector<f64> {
        &self.x * beta.as_vector()
    }

    pub(crate) fn check_beta(&self, beta: &Coefficients) -> Result<()> {
        if beta.len() != self.x.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "coefficient length {} for design with {} columns",
                beta.len(),
                self.x.ncols()
            )));
        }
        Ok(())
    }
}

/// Column-oriented view of a numeric CSV with a binary `y` column.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub y: Vec<f64>,
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl RawTable {
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let y_idx = headers
            .iter()
            .position(|h| h == "y")
            .ok_or_else(|| Error::InvalidInput("no column named `y`".into()))?;
        let names: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != y_idx)
            .map(|(_, h)| h.to_string())
            .collect();
        let mut y = Vec::new();
        let mut columns = vec![Vec::new(); names.len()];
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let mut c = 0;
            for (i, field) in record.iter().enumerate() {
                let value: f64 = field.parse().map_err(|_| {
                    Error::InvalidInput(format!(
                        "row {}: field `{}` in column `{}` is not numeric",
                        row + 1,
                        field,
                        &headers[i]
                    ))
                })?;
                if i == y_idx {
                    y.push(value);
                } else {
                    columns[c].push(value);
                    c += 1;
                }
            }
        }
        check_labels(&y)?;
        Ok(Self { y, names, columns })
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }
}
