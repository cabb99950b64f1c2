//! Throughput-time predictors.
//!
//! All models share the same discipline: standardization moments come from
//! setting-A data only (never from the deployment set), training consumes
//! setting-A labels only, and deployment predicts with dropout off.
//!
//! * [`fit_elastic_net`] — regularized linear baseline.
//! * [`fit_dnn`] — plain deep network trained on mean absolute error.
//! * [`fit_wdgrl`] — the adversarial learner: same architecture as the DNN
//!   plus a critic that estimates the Wasserstein distance between latent
//!   feature distributions of the two settings.
//! * [`fit_retrained`] / [`fit_finetuned`] — reveal-window baselines that
//!   additionally consume the labeled early slice of setting B.

mod checkpoint;
mod elastic;
mod train;
mod tuning;

pub use checkpoint::{load_model, save_model, AnyModel};
pub use elastic::{fit_elastic_net, ElasticNetFit, LinearModel};
pub use train::{
    critic_gap, estimate_wasserstein_critic, fit_dnn, fit_finetuned, fit_retrained, fit_wdgrl,
    reveal_window_subset, CriticEstimateOpts, RevealedSubset, WdgrlHyper,
};
pub use tuning::{
    cross_validate, desk_grid_dnn, table_grid_dnn, table_grid_elastic, BestHyper, CvOutcome,
    GridSpec,
};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::tensor_nn::Mlp;

/// Per-feature centering/scaling fitted on training data.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Standard deviations floored at 1e-8 so constant features map to 0.
    pub std: Vec<f64>,
}

pub const STD_FLOOR: f64 = 1e-8;

/// Column means and standard deviations (denominator n-1), floored.
pub fn fit_standardizer(x: &Array2<f64>) -> Result<Standardizer> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InsufficientData { need: 2, got: n });
    }
    let d = x.ncols();
    let mut mean = vec![0.0; d];
    let mut std = vec![0.0; d];
    for j in 0..d {
        let col = x.column(j);
        let m = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        mean[j] = m;
        std[j] = var.sqrt().max(STD_FLOOR);
    }
    Ok(Standardizer { mean, std })
}

/// Applies fitted moments; never recomputes them from `x`.
pub fn apply_standardizer(s: &Standardizer, x: &Array2<f64>) -> Result<Array2<f64>> {
    if x.ncols() != s.mean.len() {
        return Err(Error::DimensionMismatch {
            context: "standardizer features",
            expected: s.mean.len(),
            got: x.ncols(),
        });
    }
    Ok(Array2::from_shape_fn(x.raw_dim(), |(i, j)| {
        (x[(i, j)] - s.mean[j]) / s.std[j]
    }))
}

/// Network architecture and training knobs shared by the DNN and the
/// adversarial learner (one extractor layer, one hidden regressor layer).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NetHyper {
    /// Latent width of the feature extractor.
    pub extractor_width: usize,
    /// Hidden width of the regressor.
    pub regressor_hidden: usize,
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f64,
    /// Kernel (weight) regularization strength, all dense layers.
    pub l2: f64,
    pub dropout: f64,
}

impl Default for NetHyper {
    fn default() -> Self {
        NetHyper {
            extractor_width: 64,
            regressor_hidden: 8,
            epochs: 50,
            batch: 64,
            learning_rate: 5e-4,
            l2: 1e-5,
            dropout: 0.4,
        }
    }
}

/// Per-epoch training observability for the adversarial learner.
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct EpochRecord {
    /// Mean regression loss (MAE on setting A).
    pub l_reg: f64,
    /// Mean critic gap estimate, penalty excluded.
    pub w_estimate: f64,
    /// Mean gradient-penalty value.
    pub l_grad: f64,
}

/// Plain deep regressor: standardizer + extractor + regressor.
#[derive(Debug, Clone)]
pub struct DnnModel {
    pub standardizer: Standardizer,
    pub extractor: Mlp,
    pub regressor: Mlp,
    pub hyper: NetHyper,
}

/// Adversarially aligned regressor with its critic and loss weights.
#[derive(Debug, Clone)]
pub struct WdgrlModel {
    pub standardizer: Standardizer,
    pub extractor: Mlp,
    pub regressor: Mlp,
    pub critic: Mlp,
    pub alpha: f64,
    pub beta: f64,
    pub n_critic: usize,
    pub hyper: NetHyper,
    pub train_log: TrainLog,
}

/// Elastic net packaged with the standardizer it was fit under.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ElasticRegressor {
    pub standardizer: Standardizer,
    pub model: LinearModel,
}

/// Deployment prediction: ŷ = f_r(f_e(standardize(x))), dropout off.
pub trait Predictor {
    fn predict_batch(&self, x: &Array2<f64>) -> Result<Vec<f64>>;
}

fn net_predict(
    standardizer: &Standardizer,
    extractor: &Mlp,
    regressor: &Mlp,
    x: &Array2<f64>,
) -> Result<Vec<f64>> {
    let xs = apply_standardizer(standardizer, x)?;
    let latent = extractor.forward_eval(&xs)?;
    let out = regressor.forward_eval(latent.output())?;
    Ok(out.output().column(0).to_vec())
}

impl Predictor for DnnModel {
    fn predict_batch(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        net_predict(&self.standardizer, &self.extractor, &self.regressor, x)
    }
}

impl Predictor for WdgrlModel {
    fn predict_batch(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        net_predict(&self.standardizer, &self.extractor, &self.regressor, x)
    }
}

impl Predictor for ElasticRegressor {
    fn predict_batch(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        let xs = apply_standardizer(&self.standardizer, x)?;
        Ok(self.model.predict(&xs))
    }
}

/// Mean absolute error between predictions and targets.
pub fn mean_absolute_error(predictions: &[f64], targets: &[f64]) -> f64 {
    assert_eq!(predictions.len(), targets.len());
    predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / predictions.len() as f64
}
