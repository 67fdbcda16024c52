//! CSV ingestion with optional expression-style filtering, model files, and evaluation.

pub mod error;
pub mod evaluate;
pub mod ingest;
pub mod model;

pub use error::CliError;
pub use evaluate::{evaluate, Evaluation, CLASSIFICATION_THRESHOLD};
pub use ingest::{ingest, ingest_path, Filter, Ingested, LogTransform, Preprocessing};
pub use model::{ModelFile, INTERCEPT_NAME, MODEL_SCHEMA};
