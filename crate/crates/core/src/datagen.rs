//! Semi-synthetic order data with a controllable covariate shift.
//!
//! The pipeline mirrors how the experiments are seeded from real data:
//! estimate Gaussian moments of two seed feature sets, fit an outcome
//! generator φ on the pooled seed samples, then draw fresh features for
//! setting A from (μ_A, Σ_A) and for setting B from (μ_A + θ·v_diff, Σ_B),
//! and label both via y = max(0, φ(x) + η).
//!
//! Setting-B labels exist only for evaluation. They are wrapped in a
//! [`SealedLabels`] accessor that records every read, so tests can prove
//! that no training-path code touched them.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::path::Path;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::trees::{
    ensemble_predict, fit_gradient_boosting, fit_random_forest, BoostParams, ForestParams,
    TreeEnsemble,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting {
    A,
    B,
}

/// Why sealed labels were read; kept in the audit log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessPurpose {
    /// Scoring predictions / realized costs after the fact.
    Evaluation,
    /// Building the oracle scheduling instance.
    Oracle,
    /// The hypothetical reveal-window baselines (labels below a cutoff).
    RevealWindow,
}

/// Evaluation-only labels behind an access-recording accessor.
#[derive(Debug)]
pub struct SealedLabels {
    values: Vec<f64>,
    log: Mutex<Vec<AccessPurpose>>,
}

impl SealedLabels {
    pub fn new(values: Vec<f64>) -> Arc<Self> {
        Arc::new(SealedLabels {
            values,
            log: Mutex::new(Vec::new()),
        })
    }

    /// Grants access and records the stated purpose.
    pub fn reveal(&self, purpose: AccessPurpose) -> &[f64] {
        self.log.lock().unwrap().push(purpose);
        &self.values
    }

    pub fn audit(&self) -> Vec<AccessPurpose> {
        self.log.lock().unwrap().clone()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone)]
pub enum LabelColumn {
    None,
    Open(Vec<f64>),
    Sealed(Arc<SealedLabels>),
}

/// Feature matrix with optional throughput-time labels (days).
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: LabelColumn,
    pub setting: Setting,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Open (training-grade) labels, or an error for sealed/absent ones.
    pub fn open_labels(&self) -> Result<&[f64]> {
        match &self.labels {
            LabelColumn::Open(v) => Ok(v),
            _ => Err(Error::EmptyData("dataset has no open labels")),
        }
    }

    pub fn sealed_labels(&self) -> Result<&Arc<SealedLabels>> {
        match &self.labels {
            LabelColumn::Sealed(s) => Ok(s),
            _ => Err(Error::EmptyData("dataset has no sealed labels")),
        }
    }
}

/// Mean vector and covariance matrix of a feature distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpec {
    pub mean: Array1<f64>,
    pub cov: Array2<f64>,
}

/// Sample mean and sample covariance (denominator n-1).
pub fn estimate_moments(x: &Array2<f64>) -> Result<GaussianSpec> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InsufficientData { need: 2, got: n });
    }
    let d = x.ncols();
    let mean = x.sum_axis(ndarray::Axis(0)) / n as f64;
    let mut cov = Array2::<f64>::zeros((d, d));
    for row in x.rows() {
        let diff = &row.to_owned() - &mean;
        for i in 0..d {
            for j in i..d {
                cov[(i, j)] += diff[i] * diff[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in i..d {
            cov[(i, j)] /= denom;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    Ok(GaussianSpec { mean, cov })
}

const JITTERS: [f64; 4] = [0.0, 1e-10, 1e-8, 1e-6];

/// Lower-triangular L with L·Lᵀ = cov + jitter·I, escalating the jitter
/// through {0, 1e-10, 1e-8, 1e-6} until the factorization succeeds.
pub fn cholesky_psd(cov: &Array2<f64>) -> Result<Array2<f64>> {
    let d = cov.nrows();
    if cov.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "covariance matrix",
            expected: d,
            got: cov.ncols(),
        });
    }
    for i in 0..d {
        for j in 0..i {
            if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "covariance not symmetric at ({i},{j})"
                )));
            }
        }
    }
    'jitter: for &eps in &JITTERS {
        let mut l = Array2::<f64>::zeros((d, d));
        for i in 0..d {
            for j in 0..=i {
                let mut sum = cov[(i, j)] + if i == j { eps } else { 0.0 };
                for k in 0..j {
                    sum -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if sum <= 0.0 {
                        continue 'jitter;
                    }
                    l[(i, i)] = sum.sqrt();
                } else {
                    l[(i, j)] = sum / l[(j, j)];
                }
            }
        }
        return Ok(l);
    }
    Err(Error::NotFactorizable { max_jitter: 1e-6 })
}

/// Draws `n` rows of `mean + L·z` with standard-normal z.
pub fn sample_gaussian(spec: &GaussianSpec, n: usize, seed: u64) -> Result<Array2<f64>> {
    let mut rng = stream_rng(seed, Stream::SampleFeatures(0));
    sample_gaussian_with_rng(spec, n, &mut rng)
}

pub fn sample_gaussian_with_rng(
    spec: &GaussianSpec,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Array2<f64>> {
    let l = cholesky_psd(&spec.cov)?;
    let d = spec.mean.len();
    let mut out = Array2::<f64>::zeros((n, d));
    let normal = StandardNormal;
    let mut z = Array1::<f64>::zeros(d);
    for mut row in out.rows_mut() {
        for zi in z.iter_mut() {
            *zi = normal.sample(rng);
        }
        for i in 0..d {
            let mut v = spec.mean[i];
            for k in 0..=i {
                v += l[(i, k)] * z[k];
            }
            row[i] = v;
        }
    }
    Ok(out)
}

/// Mean-shift description: shifted mean = μ_A + θ·(μ_B − μ_A).
#[derive(Debug, Clone)]
pub struct ShiftConfig {
    pub theta: f64,
    pub v_diff: Array1<f64>,
}

/// Distribution for setting B at shift magnitude θ: mean μ_A + θ·v_diff,
/// covariance Σ_B.
pub fn shifted_spec(
    spec_a: &GaussianSpec,
    spec_b: &GaussianSpec,
    theta: f64,
) -> Result<GaussianSpec> {
    if spec_a.mean.len() != spec_b.mean.len() {
        return Err(Error::DimensionMismatch {
            context: "shifted spec dims",
            expected: spec_a.mean.len(),
            got: spec_b.mean.len(),
        });
    }
    let v_diff = &spec_b.mean - &spec_a.mean;
    Ok(GaussianSpec {
        mean: &spec_a.mean + &(v_diff * theta),
        cov: spec_b.cov.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    /// Uniform on [-√12·σ/2, √12·σ/2], so its standard deviation equals σ.
    Uniform,
}

#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub sigma_y: f64,
}

impl NoiseSpec {
    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self.kind {
            NoiseKind::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                z * self.sigma_y
            }
            NoiseKind::Uniform => {
                let half = 12f64.sqrt() * self.sigma_y / 2.0;
                rng.gen_range(-half..half)
            }
        }
    }
}

/// y_i = max(0, φ(x_i) + η_i); throughput times are clipped at zero.
pub fn generate_outcomes(
    phi: &TreeEnsemble,
    x: &Array2<f64>,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = stream_rng(seed, Stream::OutcomeNoise(0));
    generate_outcomes_with_rng(phi, x, noise, &mut rng)
}

fn generate_outcomes_with_rng(
    phi: &TreeEnsemble,
    x: &Array2<f64>,
    noise: &NoiseSpec,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let base = ensemble_predict(phi, x)?;
    Ok(base
        .into_iter()
        .map(|b| (b + noise.sample(rng)).max(0.0))
        .collect())
}

/// Due dates from planned durations: d_i = release_i + ceil(max(1, φ_i + ν_i))
/// with ν ~ N(0, slack_sigma²) and releases uniform on {1..horizon_spread}.
pub fn assign_due_dates(
    phi_values: &[f64],
    slack_sigma: f64,
    horizon_spread: u32,
    seed: u64,
) -> Vec<u32> {
    let mut rng = stream_rng(seed, Stream::DueDates);
    let spread = horizon_spread.max(1);
    phi_values
        .iter()
        .map(|&phi| {
            let release = rng.gen_range(1..=spread);
            let nu = if slack_sigma > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * slack_sigma
            } else {
                0.0
            };
            release + (phi + nu).max(1.0).ceil() as u32
        })
        .collect()
}

/// Which model family generates outcomes.
#[derive(Debug, Clone)]
pub enum PhiKind {
    Forest(ForestParams),
    Boosting(BoostParams),
}

impl Default for PhiKind {
    fn default() -> Self {
        PhiKind::Forest(ForestParams::default())
    }
}

#[derive(Debug, Clone)]
pub struct SemiSynthConfig {
    pub theta: f64,
    pub n: usize,
    pub m: usize,
    pub noise_kind: NoiseKind,
    /// Noise standard deviation; `None` uses the std of the pooled seed labels.
    pub sigma_y: Option<f64>,
    pub phi: PhiKind,
    pub due_slack_sigma: f64,
    pub due_horizon_spread: u32,
    pub seed: u64,
}

impl Default for SemiSynthConfig {
    fn default() -> Self {
        SemiSynthConfig {
            theta: 1.0,
            n: 5_830,
            m: 3_866,
            noise_kind: NoiseKind::Gaussian,
            sigma_y: None,
            phi: PhiKind::default(),
            due_slack_sigma: 5.0,
            due_horizon_spread: 60,
            seed: 0,
        }
    }
}

/// Everything one replicate of the simulation needs downstream.
#[derive(Debug, Clone)]
pub struct SemiSynth {
    pub data_a: Dataset,
    pub data_b: Dataset,
    pub due_dates: Vec<u32>,
    pub phi: TreeEnsemble,
    pub sigma_y: f64,
    pub shift: ShiftConfig,
}

/// Full semi-synthetic pipeline from two labeled seed datasets.
pub fn build_semisynthetic(
    cfg: &SemiSynthConfig,
    seed_a: &Dataset,
    seed_b: &Dataset,
) -> Result<SemiSynth> {
    if seed_a.dim() != seed_b.dim() {
        return Err(Error::DimensionMismatch {
            context: "seed dataset dims",
            expected: seed_a.dim(),
            got: seed_b.dim(),
        });
    }
    let spec_a = estimate_moments(&seed_a.features)?;
    let spec_b = estimate_moments(&seed_b.features)?;
    let spec_b_shifted = shifted_spec(&spec_a, &spec_b, cfg.theta)?;

    // φ is fit on the pooled seed samples so the conditional law is shared
    // across settings.
    let ya = seed_a.open_labels()?;
    let yb = seed_b.open_labels()?;
    let pooled_n = seed_a.n() + seed_b.n();
    let d = seed_a.dim();
    let mut pooled_x = Array2::<f64>::zeros((pooled_n, d));
    for (i, row) in seed_a.features.rows().into_iter().enumerate() {
        pooled_x.row_mut(i).assign(&row);
    }
    for (i, row) in seed_b.features.rows().into_iter().enumerate() {
        pooled_x.row_mut(seed_a.n() + i).assign(&row);
    }
    let mut pooled_y: Vec<f64> = Vec::with_capacity(pooled_n);
    pooled_y.extend_from_slice(ya);
    pooled_y.extend_from_slice(yb);

    let phi_seed = derive_seed(cfg.seed, 101);
    let phi = match &cfg.phi {
        PhiKind::Forest(p) => fit_random_forest(&pooled_x, &pooled_y, *p, phi_seed)?,
        PhiKind::Boosting(p) => fit_gradient_boosting(&pooled_x, &pooled_y, *p, phi_seed)?,
    };

    let sigma_y = cfg.sigma_y.unwrap_or_else(|| {
        let mean = pooled_y.iter().sum::<f64>() / pooled_n as f64;
        let var =
            pooled_y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (pooled_n - 1) as f64;
        var.sqrt()
    });
    let noise = NoiseSpec {
        kind: cfg.noise_kind,
        sigma_y,
    };

    let xa = sample_gaussian(&spec_a, cfg.n, derive_seed(cfg.seed, 102))?;
    let xb = sample_gaussian(&spec_b_shifted, cfg.m, derive_seed(cfg.seed, 103))?;
    let ya_new = generate_outcomes(&phi, &xa, &noise, derive_seed(cfg.seed, 104))?;
    let yb_new = generate_outcomes(&phi, &xb, &noise, derive_seed(cfg.seed, 105))?;
    let phi_b = ensemble_predict(&phi, &xb)?;
    let due_dates = assign_due_dates(
        &phi_b,
        cfg.due_slack_sigma,
        cfg.due_horizon_spread,
        derive_seed(cfg.seed, 106),
    );

    Ok(SemiSynth {
        data_a: Dataset {
            features: xa,
            labels: LabelColumn::Open(ya_new),
            setting: Setting::A,
        },
        data_b: Dataset {
            features: xb,
            labels: LabelColumn::Sealed(SealedLabels::new(yb_new)),
            setting: Setting::B,
        },
        due_dates,
        phi,
        sigma_y,
        shift: ShiftConfig {
            theta: cfg.theta,
            v_diff: &spec_b.mean - &spec_a.mean,
        },
    })
}

/// Built-in seed populations: two correlated 20-dimensional Gaussians that
/// differ by a mean offset concentrated on a handful of features, plus a
/// nonlinear outcome rule used to label the seed draws. The parameters are
/// fixed constants so seed data is reproducible everywhere.
pub mod seedgen {
    use super::*;

    pub const DIM: usize = 20;

    /// Per-feature mean offset of population B relative to A. Nonzero only
    /// for a handful of "specification" features, mirroring a shift that is
    /// concentrated rather than diffuse.
    pub const MEAN_OFFSET: [f64; DIM] = [
        0.9, 1.6, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.4, 1.2, 0.0, 1.0, 0.0, 0.0, 0.0,
        0.0, 0.0,
    ];

    fn feature_scale(j: usize) -> f64 {
        1.0 + 0.05 * j as f64
    }

    fn mean_a(j: usize) -> f64 {
        6.0 + 0.4 * j as f64
    }

    /// Shared covariance: AR(1)-style correlation 0.5^|i-j| scaled by the
    /// per-feature spreads.
    fn covariance() -> Array2<f64> {
        Array2::from_shape_fn((DIM, DIM), |(i, j)| {
            0.5f64.powi((i as i32 - j as i32).abs()) * feature_scale(i) * feature_scale(j)
        })
    }

    pub fn population_a() -> GaussianSpec {
        GaussianSpec {
            mean: Array1::from_shape_fn(DIM, mean_a),
            cov: covariance(),
        }
    }

    pub fn population_b() -> GaussianSpec {
        GaussianSpec {
            mean: Array1::from_shape_fn(DIM, |j| mean_a(j) + MEAN_OFFSET[j]),
            cov: covariance(),
        }
    }

    fn sigmoid(t: f64) -> f64 {
        1.0 / (1.0 + (-t).exp())
    }

    /// Ground-truth outcome rule for seed labels (days). The dominant term
    /// is a saturating ramp along the mean-offset direction; the remainder
    /// is signal on unshifted features (an interaction plus linear terms).
    pub fn true_outcome(row: ndarray::ArrayView1<'_, f64>) -> f64 {
        let norm: f64 = MEAN_OFFSET.iter().map(|d| d * d).sum::<f64>().sqrt();
        let z: f64 = (0..DIM)
            .map(|j| MEAN_OFFSET[j] / norm * (row[j] - mean_a(j)))
            .sum();
        let u = |j: usize| (row[j] - mean_a(j)) / feature_scale(j);
        14.0 + 34.0 * sigmoid(0.8 * (z - 0.8))
            + 5.0 * (0.7 * u(3) * u(5)).tanh()
            + 2.5 * u(7)
            + 1.2 * u(16)
    }

    /// Draws labeled seed datasets for both populations. Labels are the
    /// outcome rule plus N(0, 5²) noise, clipped at zero.
    pub fn generate(n_a: usize, n_b: usize, seed: u64) -> Result<(Dataset, Dataset)> {
        let spec_a = population_a();
        let spec_b = population_b();
        let mut rng_a = stream_rng(seed, Stream::SampleFeatures(900));
        let mut rng_b = stream_rng(seed, Stream::SampleFeatures(901));
        let xa = sample_gaussian_with_rng(&spec_a, n_a, &mut rng_a)?;
        let xb = sample_gaussian_with_rng(&spec_b, n_b, &mut rng_b)?;
        let mut noise_rng = stream_rng(seed, Stream::OutcomeNoise(900));
        let mut label = |x: &Array2<f64>| -> Vec<f64> {
            x.rows()
                .into_iter()
                .map(|r| {
                    let eps: f64 = StandardNormal.sample(&mut noise_rng);
                    (true_outcome(r) + 5.0 * eps).max(0.0)
                })
                .collect()
        };
        let ya = label(&xa);
        let yb = label(&xb);
        Ok((
            Dataset {
                features: xa,
                labels: LabelColumn::Open(ya),
                setting: Setting::A,
            },
            Dataset {
                features: xb,
                labels: LabelColumn::Open(yb),
                setting: Setting::B,
            },
        ))
    }
}

/// Header name of the optional label column in dataset CSV files.
pub const LABEL_COLUMN: &str = "throughput_days";

/// Loads a dataset from CSV: a header row of feature names, one optional
/// `throughput_days` column, UTF-8, decimal points.
pub fn load_dataset_csv(path: &Path, setting: Setting) -> Result<Dataset> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?
        .clone();
    let label_idx = headers.iter().position(|h| h == LABEL_COLUMN);
    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|i| Some(*i) != label_idx)
        .collect();
    let mut rows: Vec<f64> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    let mut n = 0;
    for record in reader.records() {
        let record =
            record.map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        for &i in &feature_idx {
            let v: f64 = record
                .get(i)
                .ok_or_else(|| Error::parse(path.display().to_string(), "short row"))?
                .trim()
                .parse()
                .map_err(|e| Error::parse(path.display().to_string(), format!("{e}")))?;
            rows.push(v);
        }
        if let Some(li) = label_idx {
            let v: f64 = record
                .get(li)
                .ok_or_else(|| Error::parse(path.display().to_string(), "short row"))?
                .trim()
                .parse()
                .map_err(|e| Error::parse(path.display().to_string(), format!("{e}")))?;
            labels.push(v);
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyData("csv has no data rows"));
    }
    let features = Array2::from_shape_vec((n, feature_idx.len()), rows)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    Ok(Dataset {
        features,
        labels: if label_idx.is_some() {
            LabelColumn::Open(labels)
        } else {
            LabelColumn::None
        },
        setting,
    })
}

/// Writes features (and optional labels) as CSV with generated `x1..xd`
/// feature names. Floats are written in shortest round-trip form.
pub fn save_dataset_csv(
    path: &Path,
    features: &Array2<f64>,
    labels: Option<&[f64]>,
) -> Result<()> {
    if let Some(l) = labels {
        if l.len() != features.nrows() {
            return Err(Error::DimensionMismatch {
                context: "csv labels",
                expected: features.nrows(),
                got: l.len(),
            });
        }
    }
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    let mut header: Vec<String> = (1..=features.ncols()).map(|j| format!("x{j}")).collect();
    if labels.is_some() {
        header.push(LABEL_COLUMN.to_string());
    }
    writer
        .write_record(&header)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    for (i, row) in features.rows().into_iter().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        if let Some(l) = labels {
            rec.push(format!("{}", l[i]));
        }
        writer
            .write_record(&rec)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}
