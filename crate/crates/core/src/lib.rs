//! Robust sparse logistic regression: density power divergence loss with adaptively
//! weighted LASSO penalties, fitted by IRLS with coordinate descent.

pub mod data;
pub mod deriv;
pub mod error;
pub mod influence;
pub mod inner;
pub mod irls;
pub mod loss;
pub mod penalty;
pub mod report;
pub mod sim;

pub use data::{Coefficients, Dataset, RawTable, Standardization};
pub use deriv::{gradient, hessian_diag, psi, DerivBundle, HESSIAN_FLOOR};
pub use error::{Error, Result};
pub use influence::{if_norm_curve, influence_vector, j_alpha, IfInitial, IfRequest, Influence, LabelMode};
pub use inner::{solve_weighted_lasso, InnerConfig, InnerSolution, SurrogateProblem};
pub use irls::{
    default_initial, fit, fit_path, fit_path_with, hgic, lambda_max, two_stage_fit, FitConfig, FitResult,
    LambdaGrid, PathPoint, PathResult, TwoStageResult, WarmStart, WeightRefresh,
};
pub use loss::{dpd_loss, nll, sigmoid, DpdParams};
pub use penalty::{compute_weights, penalty_value, PenaltyWeights, WeightFunction, WeightScheme};
pub use sim::{generate, metrics, run_experiment, Contamination, Method, MetricsReport, SimScenario};
