//! Elastic net by cyclic coordinate descent.
//!
//! Objective over standardized features:
//!
//! ```text
//! (1/(2n))·||y − b − Xβ||² + λ·(ratio·||β||₁ + (1−ratio)/2·||β||₂²)
//! ```

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    /// L1 fraction of the penalty, in [0, 1].
    pub ratio: f64,
}

impl LinearModel {
    pub fn predict(&self, x: &Array2<f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|row| {
                self.intercept
                    + row
                        .iter()
                        .zip(&self.coefficients)
                        .map(|(xi, ci)| xi * ci)
                        .sum::<f64>()
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ElasticNetFit {
    pub model: LinearModel,
    pub converged: bool,
    pub iterations: usize,
}

fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Cyclic coordinate descent; converged when the largest coefficient (or
/// intercept) change in a sweep drops below `tol`. Non-convergence is
/// reported through the flag, not as an error.
pub fn fit_elastic_net(
    x: &Array2<f64>,
    y: &[f64],
    lambda: f64,
    ratio: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ElasticNetFit> {
    let n = x.nrows();
    if n == 0 || y.is_empty() {
        return Err(Error::EmptyData("elastic net needs samples"));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            context: "elastic net targets",
            expected: n,
            got: y.len(),
        });
    }
    if !(0.0..=1.0).contains(&ratio) || lambda < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "need lambda >= 0 and ratio in [0,1], got {lambda}, {ratio}"
        )));
    }
    let d = x.ncols();
    let n_f = n as f64;
    // Per-coordinate curvature (1/n)·Σ x_ij².
    let z: Vec<f64> = (0..d)
        .map(|j| x.column(j).iter().map(|v| v * v).sum::<f64>() / n_f)
        .collect();
    let mut beta = vec![0.0; d];
    let mut intercept = y.iter().sum::<f64>() / n_f;
    let mut residual: Vec<f64> = y.iter().map(|v| v - intercept).collect();

    let l1 = lambda * ratio;
    let l2 = lambda * (1.0 - ratio);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut max_delta: f64 = 0.0;

        let shift = residual.iter().sum::<f64>() / n_f;
        intercept += shift;
        for r in residual.iter_mut() {
            *r -= shift;
        }
        max_delta = max_delta.max(shift.abs());

        for j in 0..d {
            if z[j] == 0.0 {
                continue; // constant-zero column, coefficient stays 0
            }
            let col = x.column(j);
            let rho = col
                .iter()
                .zip(residual.iter())
                .map(|(xi, ri)| xi * ri)
                .sum::<f64>()
                / n_f
                + z[j] * beta[j];
            let new = soft_threshold(rho, l1) / (z[j] + l2);
            let delta = new - beta[j];
            if delta != 0.0 {
                for (ri, xi) in residual.iter_mut().zip(col.iter()) {
                    *ri -= xi * delta;
                }
                beta[j] = new;
            }
            max_delta = max_delta.max(delta.abs());
        }
        if max_delta < tol {
            converged = true;
            break;
        }
    }
    Ok(ElasticNetFit {
        model: LinearModel {
            coefficients: beta,
            intercept,
            lambda,
            ratio,
        },
        converged,
        iterations,
    })
}
