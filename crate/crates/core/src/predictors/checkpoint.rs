//! Model checkpoints: self-describing JSON with layer dims, weights,
//! standardizer moments, and hyperparameters. Floats round-trip bit-exactly.

use serde::{Deserialize, Serialize};
use std::path::Path;

use super::{
    DnnModel, ElasticRegressor, NetHyper, Predictor, Standardizer, TrainLog, WdgrlModel,
};
use crate::error::{Error, Result};
use crate::tensor_nn::{Activation, DenseLayer, LayerSpec, Mlp};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerCheckpoint {
    input_dim: usize,
    output_dim: usize,
    activation: Activation,
    dropout_rate: f64,
    l2_strength: f64,
    /// Row-major, output_dim x input_dim.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpCheckpoint {
    layers: Vec<LayerCheckpoint>,
}

impl MlpCheckpoint {
    fn from_mlp(mlp: &Mlp) -> Self {
        MlpCheckpoint {
            layers: mlp
                .layers()
                .iter()
                .map(|l| LayerCheckpoint {
                    input_dim: l.spec.input_dim,
                    output_dim: l.spec.output_dim,
                    activation: l.spec.activation,
                    dropout_rate: l.spec.dropout_rate,
                    l2_strength: l.spec.l2_strength,
                    weights: l.weights.iter().copied().collect(),
                    biases: l.biases.to_vec(),
                })
                .collect(),
        }
    }

    fn into_mlp(self) -> Result<Mlp> {
        let layers: Result<Vec<DenseLayer>> = self
            .layers
            .into_iter()
            .map(|l| {
                let weights =
                    ndarray::Array2::from_shape_vec((l.output_dim, l.input_dim), l.weights)
                        .map_err(|_| Error::DimensionMismatch {
                            context: "checkpoint weights",
                            expected: l.output_dim * l.input_dim,
                            got: 0,
                        })?;
                Ok(DenseLayer {
                    spec: LayerSpec {
                        input_dim: l.input_dim,
                        output_dim: l.output_dim,
                        activation: l.activation,
                        dropout_rate: l.dropout_rate,
                        l2_strength: l.l2_strength,
                    },
                    weights,
                    biases: ndarray::Array1::from_vec(l.biases),
                })
            })
            .collect();
        Mlp::from_layers(layers?)
    }
}

/// Any fitted model, as stored in a checkpoint file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelCheckpoint {
    ElasticNet {
        regressor: ElasticRegressor,
    },
    Dnn {
        standardizer: Standardizer,
        extractor: MlpCheckpoint,
        regressor: MlpCheckpoint,
        hyper: NetHyper,
    },
    Wdgrl {
        standardizer: Standardizer,
        extractor: MlpCheckpoint,
        regressor: MlpCheckpoint,
        critic: MlpCheckpoint,
        alpha: f64,
        beta: f64,
        n_critic: usize,
        hyper: NetHyper,
        train_log: TrainLog,
    },
}

/// A loaded model ready to predict.
#[derive(Debug, Clone)]
pub enum AnyModel {
    ElasticNet(ElasticRegressor),
    Dnn(DnnModel),
    Wdgrl(WdgrlModel),
}

impl AnyModel {
    pub fn kind(&self) -> &'static str {
        match self {
            AnyModel::ElasticNet(_) => "elastic_net",
            AnyModel::Dnn(_) => "dnn",
            AnyModel::Wdgrl(_) => "wdgrl",
        }
    }
}

impl Predictor for AnyModel {
    fn predict_batch(&self, x: &ndarray::Array2<f64>) -> Result<Vec<f64>> {
        match self {
            AnyModel::ElasticNet(m) => m.predict_batch(x),
            AnyModel::Dnn(m) => m.predict_batch(x),
            AnyModel::Wdgrl(m) => m.predict_batch(x),
        }
    }
}

pub fn save_model(model: &AnyModel, path: &Path) -> Result<()> {
    let checkpoint = match model {
        AnyModel::ElasticNet(m) => ModelCheckpoint::ElasticNet {
            regressor: m.clone(),
        },
        AnyModel::Dnn(m) => ModelCheckpoint::Dnn {
            standardizer: m.standardizer.clone(),
            extractor: MlpCheckpoint::from_mlp(&m.extractor),
            regressor: MlpCheckpoint::from_mlp(&m.regressor),
            hyper: m.hyper,
        },
        AnyModel::Wdgrl(m) => ModelCheckpoint::Wdgrl {
            standardizer: m.standardizer.clone(),
            extractor: MlpCheckpoint::from_mlp(&m.extractor),
            regressor: MlpCheckpoint::from_mlp(&m.regressor),
            critic: MlpCheckpoint::from_mlp(&m.critic),
            alpha: m.alpha,
            beta: m.beta,
            n_critic: m.n_critic,
            hyper: m.hyper,
            train_log: m.train_log.clone(),
        },
    };
    let body = serde_json::to_string_pretty(&checkpoint)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    std::fs::write(path, body).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_model(path: &Path) -> Result<AnyModel> {
    let body =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let checkpoint: ModelCheckpoint = serde_json::from_str(&body)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    Ok(match checkpoint {
        ModelCheckpoint::ElasticNet { regressor } => AnyModel::ElasticNet(regressor),
        ModelCheckpoint::Dnn {
            standardizer,
            extractor,
            regressor,
            hyper,
        } => AnyModel::Dnn(DnnModel {
            standardizer,
            extractor: extractor.into_mlp()?,
            regressor: regressor.into_mlp()?,
            hyper,
        }),
        ModelCheckpoint::Wdgrl {
            standardizer,
            extractor,
            regressor,
            critic,
            alpha,
            beta,
            n_critic,
            hyper,
            train_log,
        } => AnyModel::Wdgrl(WdgrlModel {
            standardizer,
            extractor: extractor.into_mlp()?,
            regressor: regressor.into_mlp()?,
            critic: critic.into_mlp()?,
            alpha,
            beta,
            n_critic,
            hyper,
            train_log,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{Dataset, LabelColumn, Setting};
    use ndarray::Array2;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dnn_checkpoint_roundtrips_bit_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let features = Array2::from_shape_fn((64, 3), |_| rng.gen_range(-1.0..1.0));
        let labels: Vec<f64> = features.rows().into_iter().map(|r| r[0] * 7.0).collect();
        let data = Dataset {
            features: features.clone(),
            labels: LabelColumn::Open(labels),
            setting: Setting::A,
        };
        let hyper = NetHyper {
            extractor_width: 8,
            regressor_hidden: 4,
            epochs: 3,
            batch: 16,
            ..NetHyper::default()
        };
        let model = super::super::fit_dnn(&data, &hyper, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&AnyModel::Dnn(model.clone()), &path).unwrap();
        let back = load_model(&path).unwrap();
        let p1 = model.predict_batch(&features).unwrap();
        let p2 = back.predict_batch(&features).unwrap();
        assert_eq!(p1, p2);
        match back {
            AnyModel::Dnn(m) => {
                assert_eq!(m.extractor, model.extractor);
                assert_eq!(m.regressor, model.regressor);
                assert_eq!(m.standardizer, model.standardizer);
            }
            _ => panic!("wrong checkpoint kind"),
        }
    }

    #[test]
    fn wdgrl_checkpoint_roundtrips() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let features = Array2::from_shape_fn((48, 3), |_| rng.gen_range(-1.0..1.0));
        let labels: Vec<f64> = features.rows().into_iter().map(|r| r[1] + 20.0).collect();
        let data = Dataset {
            features: features.clone(),
            labels: LabelColumn::Open(labels),
            setting: Setting::A,
        };
        let fb = Array2::from_shape_fn((30, 3), |_| rng.gen_range(0.0..2.0));
        let hyper = super::super::WdgrlHyper {
            net: NetHyper {
                extractor_width: 8,
                regressor_hidden: 4,
                epochs: 2,
                batch: 16,
                ..NetHyper::default()
            },
            ..super::super::WdgrlHyper::default()
        };
        let model = super::super::fit_wdgrl(&data, &fb, &hyper, 7).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wdgrl.json");
        save_model(&AnyModel::Wdgrl(model.clone()), &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(
            model.predict_batch(&features).unwrap(),
            back.predict_batch(&features).unwrap()
        );
        match back {
            AnyModel::Wdgrl(m) => {
                assert_eq!(m.critic, model.critic);
                assert_eq!(m.alpha, model.alpha);
            }
            _ => panic!("wrong checkpoint kind"),
        }
    }
}
