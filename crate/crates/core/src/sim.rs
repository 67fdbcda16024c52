//! Monte-Carlo harness: Toeplitz-correlated designs, label and leverage contamination,
//! support-recovery and estimation-error metrics.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Coefficients, Dataset};
use crate::error::{Error, Result};
use crate::irls::{default_initial, fit_path, two_stage_fit, FitConfig};
use crate::loss::sigmoid;
use crate::report::fmt_f64;

/// Leading slopes of the default truth; the remaining slopes and the intercept are 0.
pub const DEFAULT_LEADING_SLOPES: [f64; 5] = [3.0, 1.5, 0.0, 0.0, 2.0];
pub const LEVERAGE_SHIFT: f64 = 5.0;
pub const LEVERAGE_SD: f64 = 0.1;
pub const LEVERAGE_ZERO_COLUMNS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Contamination {
    None,
    LabelFlip { eps: f64 },
    Leverage { eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub n: usize,
    pub k: usize,
    pub rho: f64,
    pub beta_true: Coefficients,
    pub contamination: Contamination,
    /// Probability that a leverage row gets the true-nonzero corruption.
    pub leverage_mix: f64,
    pub seed: u64,
}

pub fn default_truth(k: usize) -> Result<Coefficients> {
    if k < DEFAULT_LEADING_SLOPES.len() {
        return Err(Error::InvalidInput(format!(
            "default truth needs k >= {}, got {k}",
            DEFAULT_LEADING_SLOPES.len()
        )));
    }
    let mut b = vec![0.0; k + 1];
    b[1..=DEFAULT_LEADING_SLOPES.len()].copy_from_slice(&DEFAULT_LEADING_SLOPES);
    Ok(Coefficients::from_vec(b))
}

impl SimScenario {
    /// `ρ = 0.5`, default truth, no contamination, seed 0.
    pub fn new(n: usize, k: usize) -> Result<Self> {
        Ok(Self {
            n,
            k,
            rho: 0.5,
            beta_true: default_truth(k)?,
            contamination: Contamination::None,
            leverage_mix: 0.5,
            seed: 0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.k == 0 {
            return Err(Error::InvalidInput("scenario needs n >= 2 and k >= 1".into()));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::InvalidInput(format!(
                "Toeplitz base must satisfy |rho| < 1, got {}",
                self.rho
            )));
        }
        if self.beta_true.num_slopes() != self.k || !self.beta_true.is_finite() {
            return Err(Error::DimensionMismatch(format!(
                "truth has {} slopes, scenario has k = {}",
                self.beta_true.num_slopes(),
                self.k
            )));
        }
        if !(0.0..=1.0).contains(&self.leverage_mix) {
            return Err(Error::InvalidInput("leverage_mix must lie in [0, 1]".into()));
        }
        match self.contamination {
            Contamination::None => Ok(()),
            Contamination::LabelFlip { eps } | Contamination::Leverage { eps } => check_eps(eps),
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..0.5).contains(&eps) {
        return Err(Error::InvalidInput(format!("eps must lie in [0, 0.5), got {eps}")));
    }
    Ok(())
}

/// `Σ_ij = ρ^{|i-j|}`.
pub fn toeplitz(k: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |i, j| rho.powi(i.abs_diff(j) as i32))
}

/// Generator for replication `rep`: one stream per replication of one seed.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// `n` rows of `N(0, Σ)` through the Cholesky factor of `Σ`.
pub fn sample_covariates(n: usize, k: usize, rho: f64, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    let chol = toeplitz(k, rho).cholesky().ok_or_else(|| {
        Error::InvalidInput(format!("Toeplitz matrix with rho = {rho} is not positive definite"))
    })?;
    let z = DMatrix::<f64>::from_fn(n, k, |_, _| StandardNormal.sample(rng));
    Ok(z * chol.l().transpose())
}

fn raw_eta(x: &DMatrix<f64>, beta: &Coefficients) -> DVector<f64> {
    let slopes = DVector::from_column_slice(beta.slopes());
    (x * slopes).add_scalar(beta.intercept())
}

fn bernoulli(p: f64, rng: &mut impl Rng) -> f64 {
    if rng.random::<f64>() < p {
        1.0
    } else {
        0.0
    }
}

/// Labels after contamination and the indices that were redrawn.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelContamination {
    pub y: Vec<f64>,
    pub redrawn: Vec<usize>,
}

/// With probability `eps` each label is redrawn from `Bernoulli(1 - π(x_iᵀβ))`.
pub fn contaminate_labels(
    y: &[f64],
    x: &DMatrix<f64>,
    beta_true: &Coefficients,
    eps: f64,
    rng: &mut impl Rng,
) -> Result<LabelContamination> {
    check_eps(eps)?;
    contaminate_labels_unchecked(y, x, beta_true, eps, rng)
}

/// [`contaminate_labels`] without the `eps < 0.5` guard.
#[doc(hidden)]
pub fn contaminate_labels_unchecked(
    y: &[f64],
    x: &DMatrix<f64>,
    beta_true: &Coefficients,
    eps: f64,
    rng: &mut impl Rng,
) -> Result<LabelContamination> {
    if x.nrows() != y.len() || x.ncols() != beta_true.num_slopes() {
        return Err(Error::DimensionMismatch("labels, covariates and truth disagree".into()));
    }
    let eta = raw_eta(x, beta_true);
    let mut out = y.to_vec();
    let mut redrawn = Vec::new();
    for i in 0..y.len() {
        if rng.random::<f64>() < eps {
            out[i] = bernoulli(1.0 - sigmoid(eta[i]), rng);
            redrawn.push(i);
        }
    }
    Ok(LabelContamination { y: out, redrawn })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeverageKind {
    /// Negative shift on one true-nonzero covariate.
    Signal,
    /// Positive shifts on several true-zero covariates.
    Noise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeverageContamination {
    pub x: DMatrix<f64>,
    pub rows: Vec<(usize, LeverageKind)>,
    /// Requested rows that could not be corrupted for lack of `y = 1` observations.
    pub shortfall: usize,
}

/// Corrupts `⌈eps·n⌉` rows chosen among the `y = 1` observations.
pub fn contaminate_leverage(
    x: &DMatrix<f64>,
    y: &[f64],
    beta_true: &Coefficients,
    eps: f64,
    mix: f64,
    rng: &mut impl Rng,
) -> Result<LeverageContamination> {
    check_eps(eps)?;
    if x.nrows() != y.len() || x.ncols() != beta_true.num_slopes() {
        return Err(Error::DimensionMismatch("labels, covariates and truth disagree".into()));
    }
    let slopes = beta_true.slopes();
    let nonzero: Vec<usize> = (0..slopes.len()).filter(|&j| slopes[j] != 0.0).collect();
    let zero: Vec<usize> = (0..slopes.len()).filter(|&j| slopes[j] == 0.0).collect();
    let positives: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1.0).collect();
    let wanted = (eps * y.len() as f64 - 1e-9).ceil().max(0.0) as usize;
    let take = wanted.min(positives.len());

    let neg = Normal::new(-LEVERAGE_SHIFT, LEVERAGE_SD).expect("valid normal");
    let pos = Normal::new(LEVERAGE_SHIFT, LEVERAGE_SD).expect("valid normal");
    let mut out = x.clone();
    let mut rows = Vec::with_capacity(take);
    for idx in sample(rng, positives.len(), take).into_vec() {
        let i = positives[idx];
        let signal = !nonzero.is_empty() && (zero.is_empty() || rng.random::<f64>() < mix);
        if signal {
            let j = nonzero[rng.random_range(0..nonzero.len())];
            out[(i, j)] += neg.sample(rng);
            rows.push((i, LeverageKind::Signal));
        } else if !zero.is_empty() {
            let m = LEVERAGE_ZERO_COLUMNS.min(zero.len());
            for c in sample(rng, zero.len(), m).into_vec() {
                out[(i, zero[c])] += pos.sample(rng);
            }
            rows.push((i, LeverageKind::Noise));
        }
    }
    rows.sort_by_key(|r| r.0);
    Ok(LeverageContamination {
        x: out,
        rows,
        shortfall: wanted - take,
    })
}

/// Dataset and truth for replication `rep` of a scenario.
pub fn generate_rep(scn: &SimScenario, rep: u64) -> Result<(Dataset, Coefficients)> {
    scn.validate()?;
    let mut rng = replication_rng(scn.seed, rep);
    let x = sample_covariates(scn.n, scn.k, scn.rho, &mut rng)?;
    let eta = raw_eta(&x, &scn.beta_true);
    let mut y: Vec<f64> = eta.iter().map(|e| bernoulli(sigmoid(*e), &mut rng)).collect();
    let mut x_out = x;
    match scn.contamination {
        Contamination::None => {}
        Contamination::LabelFlip { eps } => {
            y = contaminate_labels(&y, &x_out, &scn.beta_true, eps, &mut rng)?.y;
        }
        Contamination::Leverage { eps } => {
            x_out = contaminate_leverage(&x_out, &y, &scn.beta_true, eps, scn.leverage_mix, &mut rng)?.x;
        }
    }
    Ok((Dataset::new(y, x_out)?, scn.beta_true.clone()))
}

/// Replication 0 of the scenario.
pub fn generate(scn: &SimScenario) -> Result<(Dataset, Coefficients)> {
    generate_rep(scn, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ms: f64,
    pub tp: f64,
    pub tn: f64,
    pub mses: f64,
    pub mae: f64,
}

impl MetricsReport {
    fn as_array(&self) -> [f64; 5] {
        [self.ms, self.tp, self.tn, self.mses, self.mae]
    }

    fn from_array(a: [f64; 5]) -> Self {
        Self {
            ms: a[0],
            tp: a[1],
            tn: a[2],
            mses: a[3],
            mae: a[4],
        }
    }
}

/// Support-recovery and error metrics; the intercept is excluded everywhere.
/// An empty true support (or complement) counts as fully recovered.
pub fn metrics(beta_hat: &Coefficients, beta_true: &Coefficients) -> Result<MetricsReport> {
    if beta_hat.len() != beta_true.len() {
        return Err(Error::DimensionMismatch(format!(
            "estimate has length {}, truth has {}",
            beta_hat.len(),
            beta_true.len()
        )));
    }
    let bh = beta_hat.slopes();
    let bt = beta_true.slopes();
    let k = bt.len();
    let (mut s, mut hits, mut zeros, mut zero_hits, mut ms) = (0usize, 0usize, 0usize, 0usize, 0usize);
    let mut sq = 0.0;
    let mut abs = 0.0;
    for j in 0..k {
        let est = bh[j] != 0.0;
        ms += est as usize;
        if bt[j] != 0.0 {
            s += 1;
            hits += est as usize;
            sq += (bh[j] - bt[j]).powi(2);
        } else {
            zeros += 1;
            zero_hits += (!est) as usize;
        }
        abs += (bh[j] - bt[j]).abs();
    }
    let ratio = |a: usize, b: usize| if b == 0 { 1.0 } else { a as f64 / b as f64 };
    Ok(MetricsReport {
        ms: ms as f64,
        tp: ratio(hits, s),
        tn: ratio(zero_hits, zeros),
        mses: if s == 0 { 0.0 } else { sq / s as f64 },
        mae: if k == 0 { 0.0 } else { abs / k as f64 },
    })
}

/// A named estimator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Method {
    pub name: String,
    pub config: FitConfig,
    /// Run the two-stage fit; otherwise a single path from the default start.
    #[serde(default = "yes")]
    pub two_stage: bool,
}

fn yes() -> bool {
    true
}

impl Method {
    pub fn new(name: impl Into<String>, config: FitConfig) -> Self {
        Self {
            name: name.into(),
            config,
            two_stage: true,
        }
    }

    /// Selected coefficients on the original covariate scale.
    pub fn estimate(&self, data: &Dataset) -> Result<Coefficients> {
        let fit = if self.two_stage {
            two_stage_fit(data, &self.config)?.selected().clone()
        } else {
            fit_path(data, &self.config, &default_initial(data))?.selected
        };
        Ok(data.standardization().to_original(&fit.beta_hat))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub mean: MetricsReport,
    /// Standard errors of the means (0 with fewer than two successes).
    pub se: MetricsReport,
    pub succeeded: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTable {
    pub rows: Vec<MethodSummary>,
    /// `per_rep[r][m]`: method `m` on replication `r`, `None` when the fit failed.
    pub per_rep: Vec<Vec<Option<MetricsReport>>>,
}

pub fn run_experiment(scn: &SimScenario, methods: &[Method], reps: usize) -> Result<ExperimentTable> {
    scn.validate()?;
    if reps == 0 || methods.is_empty() {
        return Err(Error::InvalidInput("need reps >= 1 and at least one method".into()));
    }
    for m in methods {
        m.config.validate()?;
    }
    let mut per_rep = Vec::with_capacity(reps);
    for rep in 0..reps {
        let (data, truth) = generate_rep(scn, rep as u64)?;
        let row = methods
            .iter()
            .map(|m| m.estimate(&data).ok().and_then(|b| metrics(&b, &truth).ok()))
            .collect();
        per_rep.push(row);
    }
    let rows = methods
        .iter()
        .enumerate()
        .map(|(mi, m)| {
            let ok: Vec<[f64; 5]> = per_rep
                .iter()
                .filter_map(|r: &Vec<Option<MetricsReport>>| r[mi].map(|x| x.as_array()))
                .collect();
            let (mean, se) = mean_and_se(&ok);
            MethodSummary {
                method: m.name.clone(),
                mean: MetricsReport::from_array(mean),
                se: MetricsReport::from_array(se),
                succeeded: ok.len(),
                failed: reps - ok.len(),
            }
        })
        .collect();
    Ok(ExperimentTable { rows, per_rep })
}

fn mean_and_se(values: &[[f64; 5]]) -> ([f64; 5], [f64; 5]) {
    let m = values.len();
    let mut mean = [f64::NAN; 5];
    let mut se = [0.0; 5];
    if m == 0 {
        return (mean, [f64::NAN; 5]);
    }
    for c in 0..5 {
        mean[c] = values.iter().map(|v| v[c]).sum::<f64>() / m as f64;
        if m > 1 {
            let var = values.iter().map(|v| (v[c] - mean[c]).powi(2)).sum::<f64>() / (m - 1) as f64;
            se[c] = (var / m as f64).sqrt();
        }
    }
    (mean, se)
}

/// CSV with columns `method, MS, TP, TN, MSES, MAE`, their standard errors and the
/// success/failure counts.
pub fn write_table_csv<W: Write>(table: &ExperimentTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method", "MS", "TP", "TN", "MSES", "MAE", "MS_se", "TP_se", "TN_se", "MSES_se", "MAE_se",
        "succeeded", "failed",
    ])?;
    for r in &table.rows {
        let mut rec = vec![r.method.clone()];
        rec.extend(r.mean.as_array().iter().map(|v| fmt_f64(*v)));
        rec.extend(r.se.as_array().iter().map(|v| fmt_f64(*v)));
        rec.push(r.succeeded.to_string());
        rec.push(r.failed.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
