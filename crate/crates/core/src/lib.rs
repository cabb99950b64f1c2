//! Throughput-time prediction under distributional shift, paired with
//! earliness/tardiness order scheduling.
//!
//! The crate is organized as a predict-then-optimize pipeline:
//!
//! * [`datagen`] builds semi-synthetic order data with a controllable
//!   covariate shift between a historical setting A and a forthcoming
//!   setting B.
//! * [`predictors`] fits throughput-time regressors on setting A:
//!   elastic net, a plain deep network, an adversarially aligned network
//!   (Wasserstein critic with gradient penalty), and the retraining /
//!   fine-tuning baselines.
//! * [`scheduler`] turns predictions into start-time decisions by solving
//!   the earliness/tardiness assignment problem exactly.
//! * [`diagnostics`] quantifies the shift itself (adversarial validation,
//!   Welch's t-test).
//! * [`harness`] wires everything into seeded, reproducible experiments
//!   with CSV/markdown reports.
//!
//! [`tensor_nn`] and [`trees`] are the in-house numeric kernels backing the
//! predictors and the data generator.

pub mod datagen;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod predictors;
pub mod rng;
pub mod scheduler;
pub mod tensor_nn;
pub mod trees;

pub use error::{Error, Result};
