//! Exhaustive grid search with k-fold cross-validation on setting A.
//!
//! Selection is by mean validation MAE; folds are deterministic per seed;
//! per-fold standardizers are fit on the training part only. The
//! adversarial learner reuses the architecture selected for the DNN, so
//! both methods get exactly the same tuning budget.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{
    apply_standardizer, fit_standardizer, mean_absolute_error, DnnModel, NetHyper, Predictor,
};
use crate::datagen::{Dataset, LabelColumn};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng, Stream};

/// A hyperparameter grid for one model family.
#[derive(Debug, Clone)]
pub enum GridSpec {
    ElasticNet {
        lambdas: Vec<f64>,
        ratios: Vec<f64>,
    },
    Dnn {
        widths: Vec<usize>,
        epochs: Vec<usize>,
        batches: Vec<usize>,
        l2s: Vec<f64>,
        dropouts: Vec<f64>,
        base: NetHyper,
    },
}

/// The published elastic-net grid: strength {0.01, 0.1, 1, 10, 100},
/// ratio {0, 0.25, 0.5, 0.75, 1}.
pub fn table_grid_elastic() -> GridSpec {
    GridSpec::ElasticNet {
        lambdas: vec![0.01, 0.1, 1.0, 10.0, 100.0],
        ratios: vec![0.0, 0.25, 0.5, 0.75, 1.0],
    }
}

/// The full network grid: widths {8, 16, 32, 64}, epochs {50, 100},
/// batches {32, 64}, kernel regularization {1e-5, 1e-3, 1e-2},
/// dropout {0.4, 0.5, 0.6}. 144 configurations.
pub fn table_grid_dnn() -> GridSpec {
    GridSpec::Dnn {
        widths: vec![8, 16, 32, 64],
        epochs: vec![50, 100],
        batches: vec![32, 64],
        l2s: vec![1e-5, 1e-3, 1e-2],
        dropouts: vec![0.4, 0.5, 0.6],
        base: NetHyper::default(),
    }
}

/// Reduced grid for desk-scale runs: 4 configurations spanning the width
/// and regularization extremes of the full grid.
pub fn desk_grid_dnn() -> GridSpec {
    GridSpec::Dnn {
        widths: vec![16, 64],
        epochs: vec![100],
        batches: vec![64],
        l2s: vec![1e-5, 1e-3],
        dropouts: vec![0.4],
        base: NetHyper::default(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BestHyper {
    ElasticNet { lambda: f64, ratio: f64 },
    Dnn(NetHyper),
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub best: BestHyper,
    /// Mean validation MAE of the winning configuration.
    pub best_score: f64,
    /// (configuration label, per-fold validation MAE), in grid order.
    pub fold_scores: Vec<(String, Vec<f64>)>,
}

/// Deterministic fold assignment: shuffled indices dealt round-robin, so
/// every sample lands in exactly one validation fold.
pub(crate) fn fold_assignments(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = stream_rng(seed, Stream::FoldSplit);
    order.shuffle(&mut rng);
    (0..k)
        .map(|f| order.iter().copied().skip(f).step_by(k).collect())
        .collect()
}

fn gather(x: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn((idx.len(), x.ncols()), |(r, c)| x[(idx[r], c)])
}

enum Candidate {
    ElasticNet { lambda: f64, ratio: f64 },
    Dnn(NetHyper),
}

impl Candidate {
    fn label(&self) -> String {
        match self {
            Candidate::ElasticNet { lambda, ratio } => format!("lambda={lambda},ratio={ratio}"),
            Candidate::Dnn(h) => format!(
                "width={},epochs={},batch={},l2={},dropout={}",
                h.extractor_width, h.epochs, h.batch, h.l2, h.dropout
            ),
        }
    }
}

fn enumerate_grid(grid: &GridSpec) -> Vec<Candidate> {
    match grid {
        GridSpec::ElasticNet { lambdas, ratios } => {
            let mut out = Vec::new();
            for &lambda in lambdas {
                for &ratio in ratios {
                    out.push(Candidate::ElasticNet { lambda, ratio });
                }
            }
            out
        }
        GridSpec::Dnn {
            widths,
            epochs,
            batches,
            l2s,
            dropouts,
            base,
        } => {
            let mut out = Vec::new();
            for &w in widths {
                for &e in epochs {
                    for &b in batches {
                        for &l2 in l2s {
                            for &p in dropouts {
                                out.push(Candidate::Dnn(NetHyper {
                                    extractor_width: w,
                                    epochs: e,
                                    batch: b,
                                    l2,
                                    dropout: p,
                                    ..*base
                                }));
                            }
                        }
                    }
                }
            }
            out
        }
    }
}

/// Exhaustive grid search with k-fold cross-validation. Ties go to the
/// earlier configuration in grid order.
pub fn cross_validate(grid: &GridSpec, data_a: &Dataset, k: usize, seed: u64) -> Result<CvOutcome> {
    if k < 2 {
        return Err(Error::InvalidConfig("need k >= 2 folds".into()));
    }
    let labels = data_a.open_labels()?;
    let n = data_a.n();
    if n < k {
        return Err(Error::InsufficientData { need: k, got: n });
    }
    let candidates = enumerate_grid(grid);
    if candidates.is_empty() {
        return Err(Error::EmptyData("hyperparameter grid is empty"));
    }
    let folds = fold_assignments(n, k, seed);

    let scores: Result<Vec<Vec<f64>>> = candidates
        .par_iter()
        .enumerate()
        .map(|(ci, cand)| {
            let mut fold_maes = Vec::with_capacity(k);
            for fold in &folds {
                let in_fold = {
                    let mut v = vec![false; n];
                    for &i in fold {
                        v[i] = true;
                    }
                    v
                };
                let train_idx: Vec<usize> = (0..n).filter(|&i| !in_fold[i]).collect();
                let x_train = gather(&data_a.features, &train_idx);
                let y_train: Vec<f64> = train_idx.iter().map(|&i| labels[i]).collect();
                let x_val = gather(&data_a.features, fold);
                let y_val: Vec<f64> = fold.iter().map(|&i| labels[i]).collect();
                let preds = match cand {
                    Candidate::ElasticNet { lambda, ratio } => {
                        let s = fit_standardizer(&x_train)?;
                        let xs = apply_standardizer(&s, &x_train)?;
                        let fit =
                            super::fit_elastic_net(&xs, &y_train, *lambda, *ratio, 1e-7, 10_000)?;
                        fit.model.predict(&apply_standardizer(&s, &x_val)?)
                    }
                    Candidate::Dnn(hyper) => {
                        let fold_data = Dataset {
                            features: x_train,
                            labels: LabelColumn::Open(y_train),
                            setting: data_a.setting,
                        };
                        let model: DnnModel =
                            super::fit_dnn(&fold_data, hyper, derive_seed(seed, ci as u64))?;
                        model.predict_batch(&x_val)?
                    }
                };
                fold_maes.push(mean_absolute_error(&preds, &y_val));
            }
            Ok(fold_maes)
        })
        .collect();
    let scores = scores?;

    let mut best_idx = 0;
    let mut best_score = f64::INFINITY;
    for (i, fold_maes) in scores.iter().enumerate() {
        let mean = fold_maes.iter().sum::<f64>() / fold_maes.len() as f64;
        if mean < best_score {
            best_score = mean;
            best_idx = i;
        }
    }
    let best = match &candidates[best_idx] {
        Candidate::ElasticNet { lambda, ratio } => BestHyper::ElasticNet {
            lambda: *lambda,
            ratio: *ratio,
        },
        Candidate::Dnn(h) => BestHyper::Dnn(*h),
    };
    Ok(CvOutcome {
        best,
        best_score,
        fold_scores: candidates
            .iter()
            .zip(scores)
            .map(|(c, s)| (c.label(), s))
            .collect(),
    })
}
