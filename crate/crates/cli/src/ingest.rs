//! Reading a CSV into a standardized [`Dataset`], with optional clamping, log transform,
//! zero-variance removal and correlation screening against `y`.

use std::fs::File;
use std::path::Path;

use awdpd_core::{Dataset, RawTable};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LogTransform {
    #[default]
    None,
    Log2,
    Log10,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Filter {
    /// Keep columns with `|corr(x_j, y)|` strictly above this value.
    pub corr_threshold: Option<f64>,
    pub log_transform: LogTransform,
    pub floor: Option<f64>,
    pub ceiling: Option<f64>,
}

impl Filter {
    pub fn validate(&self) -> CliResult<()> {
        if let Some(t) = self.corr_threshold {
            if !(t > 0.0 && t < 1.0) {
                return Err(CliError::Usage(format!("correlation threshold must lie in (0, 1), got {t}")));
            }
        }
        for v in [self.floor, self.ceiling].into_iter().flatten() {
            if !v.is_finite() {
                return Err(CliError::Usage("floor and ceiling must be finite".into()));
            }
        }
        if let (Some(f), Some(c)) = (self.floor, self.ceiling) {
            if f > c {
                return Err(CliError::Usage(format!("floor {f} exceeds ceiling {c}")));
            }
        }
        Ok(())
    }
}

/// Everything needed to turn a raw CSV row into a standardized design row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub transform: LogTransform,
    pub floor: Option<f64>,
    pub ceiling: Option<f64>,
    /// Retained column names, in design order.
    pub retained: Vec<String>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Preprocessing {
    /// Clamp then log-transform one raw value.
    pub fn transform_value(&self, v: f64) -> CliResult<f64> {
        transform_value(v, self.floor, self.ceiling, self.transform)
    }

    /// Standardized design (intercept first) for the retained columns of `table`.
    pub fn design(&self, table: &RawTable) -> CliResult<DMatrix<f64>> {
        let n = table.y.len();
        if n == 0 {
            return Err(CliError::Data("evaluation set is empty".into()));
        }
        let mut x = DMatrix::from_element(n, self.retained.len() + 1, 1.0);
        for (j, name) in self.retained.iter().enumerate() {
            let col = table
                .column(name)
                .ok_or_else(|| CliError::Data(format!("column `{name}` is missing")))?;
            for i in 0..n {
                x[(i, j + 1)] = (self.transform_value(col[i])? - self.means[j]) / self.scales[j];
            }
        }
        Ok(x)
    }
}

fn transform_value(v: f64, floor: Option<f64>, ceiling: Option<f64>, t: LogTransform) -> CliResult<f64> {
    let mut v = v;
    if let Some(f) = floor {
        v = v.max(f);
    }
    if let Some(c) = ceiling {
        v = v.min(c);
    }
    match t {
        LogTransform::None => Ok(v),
        _ if !(v > 0.0) => Err(CliError::Data(format!(
            "log transform of non-positive value {v}; set a positive floor"
        ))),
        LogTransform::Log2 => Ok(v.log2()),
        LogTransform::Log10 => Ok(v.log10()),
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub data: Dataset,
    pub preprocessing: Preprocessing,
    pub dropped_zero_variance: Vec<String>,
    pub dropped_low_correlation: Vec<String>,
}

/// Pearson correlation; `None` when either input is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

fn population_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n
}

pub fn ingest(table: &RawTable, filter: &Filter) -> CliResult<Ingested> {
    filter.validate()?;
    if table.y.is_empty() {
        return Err(CliError::Data("no observations".into()));
    }
    let mut kept: Vec<(String, Vec<f64>)> = Vec::new();
    let mut dropped_zero_variance = Vec::new();
    let mut dropped_low_correlation = Vec::new();
    for (name, raw) in table.names.iter().zip(&table.columns) {
        let col = raw
            .iter()
            .map(|v| transform_value(*v, filter.floor, filter.ceiling, filter.log_transform))
            .collect::<CliResult<Vec<f64>>>()?;
        if let Some(bad) = col.iter().find(|v| !v.is_finite()) {
            return Err(CliError::Data(format!("column `{name}` has non-finite value {bad}")));
        }
        if !(population_variance(&col).sqrt() > 0.0) {
            dropped_zero_variance.push(name.clone());
            continue;
        }
        if let Some(t) = filter.corr_threshold {
            let r = pearson(&col, &table.y)
                .ok_or_else(|| CliError::Data("y has a single class; correlation undefined".into()))?;
            if !(r.abs() > t) {
                dropped_low_correlation.push(name.clone());
                continue;
            }
        }
        kept.push((name.clone(), col));
    }
    if kept.is_empty() {
        return Err(CliError::Data("no covariate columns survive preprocessing".into()));
    }
    let n = table.y.len();
    let cov = DMatrix::from_fn(n, kept.len(), |i, j| kept[j].1[i]);
    let names: Vec<String> = kept.into_iter().map(|(n, _)| n).collect();
    let data = Dataset::with_names(table.y.clone(), cov, names.clone())?;
    let std = data.standardization();
    let preprocessing = Preprocessing {
        transform: filter.log_transform,
        floor: filter.floor,
        ceiling: filter.ceiling,
        retained: names,
        means: std.mean.clone(),
        scales: std.scale.clone(),
    };
    Ok(Ingested {
        data,
        preprocessing,
        dropped_zero_variance,
        dropped_low_correlation,
    })
}

pub fn read_table(path: &Path) -> CliResult<RawTable> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(RawTable::from_csv(file)?)
}

pub fn ingest_path(path: &Path, filter: &Filter) -> CliResult<Ingested> {
    ingest(&read_table(path)?, filter)
}
