//! Experiment orchestration: θ grid × methods × seeded replicates.
//!
//! One replicate: build semi-synthetic data at shift θ → tune on setting A
//! only → fit each method → predict setting B → keep the 100 orders with
//! the earliest due dates → solve the start-time assignment per method and
//! for the oracle → record prediction MAE and realized scheduling cost.
//!
//! The whole pipeline is a pure function of (config, seeds): replicates run
//! concurrently, results are keyed and sorted, and all randomness flows
//! through derived seed streams.

mod report;

pub use report::{
    emit_report, format_markdown_table, parse_raw_csv, raw_records_csv, reaggregate,
    ReportFormat, ReportRow, ReportTable,
};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{
    self, assign_due_dates, estimate_moments, generate_outcomes, sample_gaussian, seedgen,
    shifted_spec, AccessPurpose, Dataset, GaussianSpec, LabelColumn, NoiseKind, NoiseSpec,
    PhiKind, SealedLabels, Setting, ShiftConfig,
};
use crate::error::{Error, Result};
use crate::predictors::{
    cross_validate, desk_grid_dnn, fit_dnn, fit_elastic_net, fit_finetuned, fit_retrained,
    fit_wdgrl, reveal_window_subset, table_grid_dnn, table_grid_elastic, apply_standardizer,
    fit_standardizer, BestHyper, ElasticRegressor, GridSpec, NetHyper, Predictor, WdgrlHyper,
};
use crate::rng::derive_seed;
use crate::scheduler::{
    oracle_schedule, realized_cost, solve_branch_and_bound, top_k_by_due_date, Order, Schedule,
    SchedulingInstance, SolveLimits,
};
use crate::trees::{ensemble_predict, BoostParams, ForestParams, TreeEnsemble};

pub const FULL_N: usize = 5_830;
pub const FULL_M: usize = 3_866;

/// Prediction methods the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ElasticNet,
    Dnn,
    Wdgrl,
    Retrain,
    Finetune,
    Oracle,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::ElasticNet => "elastic_net",
            Method::Dnn => "dnn",
            Method::Wdgrl => "wdgrl",
            Method::Retrain => "retrain",
            Method::Finetune => "finetune",
            Method::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "elastic_net" => Ok(Method::ElasticNet),
            "dnn" => Ok(Method::Dnn),
            "wdgrl" => Ok(Method::Wdgrl),
            "retrain" => Ok(Method::Retrain),
            "finetune" => Ok(Method::Finetune),
            "oracle" => Ok(Method::Oracle),
            other => Err(Error::UnknownMethod(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiChoice {
    Forest,
    Boosting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridChoice {
    /// Reduced grid for desk-scale runs.
    Desk,
    /// The full published tuning grid (144 network configurations).
    Full,
}

/// Optional loss-weight sensitivity sweep (one weight varied, other at 1).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub theta: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            alphas: vec![0.8, 0.9, 1.0, 1.1, 1.2],
            betas: vec![0.8, 0.9, 1.0, 1.1, 1.2],
            theta: 4.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub theta_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub capacity: u32,
    pub cost_early: f64,
    pub cost_tardy: f64,
    pub noise: NoiseKind,
    pub phi: PhiChoice,
    /// Scale factor on the full dataset sizes (n = 5,830, m = 3,866).
    pub scale: f64,
    /// Orders entering the optimization (earliest due dates).
    pub top_k: usize,
    pub grid: GridChoice,
    pub folds: usize,
    pub alpha: f64,
    pub beta: f64,
    pub n_critic: usize,
    pub reveal_window: f64,
    pub fine_tune_epochs: usize,
    pub due_slack_sigma: f64,
    pub due_horizon_spread: u32,
    pub node_cap: u64,
    /// Seed for the built-in seed data and the tuning folds.
    pub base_seed: u64,
    pub sweep: Option<SweepConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            theta_grid: vec![1.0, 2.0, 3.0, 4.0],
            seeds: (1..=10).collect(),
            methods: vec![Method::ElasticNet, Method::Dnn, Method::Wdgrl],
            capacity: 70,
            cost_early: 1.0,
            cost_tardy: 1.0,
            noise: NoiseKind::Gaussian,
            phi: PhiChoice::Forest,
            scale: 0.25,
            top_k: 100,
            grid: GridChoice::Desk,
            folds: 5,
            alpha: 1.0,
            beta: 1.0,
            n_critic: 5,
            reveal_window: 30.0,
            fine_tune_epochs: 20,
            due_slack_sigma: 5.0,
            due_horizon_spread: 60,
            node_cap: 300_000,
            base_seed: 7,
            sweep: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.theta_grid.is_empty() {
            return Err(Error::InvalidConfig("theta_grid must be nonempty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seeds must be nonempty".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::EmptyData("methods must be nonempty"));
        }
        if self.scale <= 0.0 {
            return Err(Error::InvalidConfig("scale must be positive".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        ((FULL_N as f64) * self.scale).round() as usize
    }

    pub fn m(&self) -> usize {
        ((FULL_M as f64) * self.scale).round() as usize
    }

    fn phi_kind(&self) -> PhiKind {
        match self.phi {
            PhiChoice::Forest => PhiKind::Forest(ForestParams::default()),
            PhiChoice::Boosting => PhiKind::Boosting(BoostParams::default()),
        }
    }

    fn dnn_grid(&self) -> GridSpec {
        match self.grid {
            GridChoice::Desk => desk_grid_dnn(),
            GridChoice::Full => table_grid_dnn(),
        }
    }
}

pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig> {
    let body =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let cfg: ExperimentConfig = toml::from_str(&body)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// One (θ, seed, method) measurement.
#[derive(Debug, Clone)]
pub struct ReplicateRecord {
    pub theta: f64,
    pub seed: u64,
    pub method: Method,
    pub mae_b: f64,
    pub realized_cost: f64,
    pub solver_optimal: bool,
    pub oracle_cost: f64,
    /// Realized cost >= oracle cost held for this record.
    pub dominance_ok: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub table: ReportTable,
    pub records: Vec<ReplicateRecord>,
}

/// Hyperparameters selected once per θ on the first seed's setting-A data
/// and reused across replicates.
#[derive(Debug, Clone)]
pub struct TunedHyper {
    pub elastic_lambda: f64,
    pub elastic_ratio: f64,
    pub net: NetHyper,
}

/// Seed populations plus the frozen outcome generator shared by every
/// replicate of an experiment (the generator is fit once, like a single
/// fit on real data).
pub struct ExperimentBase {
    pub spec_a: GaussianSpec,
    pub spec_b: GaussianSpec,
    pub phi: TreeEnsemble,
    pub sigma_y: f64,
}

pub fn build_experiment_base(cfg: &ExperimentConfig) -> Result<ExperimentBase> {
    let (seed_a, seed_b) = seedgen::generate(cfg.n(), cfg.m(), cfg.base_seed)?;
    let spec_a = estimate_moments(&seed_a.features)?;
    let spec_b = estimate_moments(&seed_b.features)?;
    let ya = seed_a.open_labels()?;
    let yb = seed_b.open_labels()?;
    let pooled_n = seed_a.n() + seed_b.n();
    let d = seed_a.dim();
    let mut pooled_x = Array2::<f64>::zeros((pooled_n, d));
    for (i, row) in seed_a
        .features
        .rows()
        .into_iter()
        .chain(seed_b.features.rows())
        .enumerate()
    {
        pooled_x.row_mut(i).assign(&row);
    }
    let mut pooled_y = ya.to_vec();
    pooled_y.extend_from_slice(yb);
    let phi_seed = derive_seed(cfg.base_seed, 101);
    let phi = match cfg.phi_kind() {
        PhiKind::Forest(p) => crate::trees::fit_random_forest(&pooled_x, &pooled_y, p, phi_seed)?,
        PhiKind::Boosting(p) => {
            crate::trees::fit_gradient_boosting(&pooled_x, &pooled_y, p, phi_seed)?
        }
    };
    let mean = pooled_y.iter().sum::<f64>() / pooled_n as f64;
    let sigma_y = (pooled_y.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        / (pooled_n - 1) as f64)
        .sqrt();
    Ok(ExperimentBase {
        spec_a,
        spec_b,
        phi,
        sigma_y,
    })
}

/// Fresh datasets for one replicate from the shared base: features sampled
/// at shift θ, outcomes y = max(0, φ(x) + η), due dates from planned
/// durations. Setting-B labels come back sealed.
pub struct ReplicateData {
    pub data_a: Dataset,
    pub data_b: Dataset,
    pub due_dates: Vec<u32>,
    pub shift: ShiftConfig,
}

pub fn build_replicate(
    cfg: &ExperimentConfig,
    base: &ExperimentBase,
    theta: f64,
    seed: u64,
) -> Result<ReplicateData> {
    let spec_shifted = shifted_spec(&base.spec_a, &base.spec_b, theta)?;
    let noise = NoiseSpec {
        kind: cfg.noise,
        sigma_y: base.sigma_y,
    };
    let xa = sample_gaussian(&base.spec_a, cfg.n(), derive_seed(seed, 102))?;
    let xb = sample_gaussian(&spec_shifted, cfg.m(), derive_seed(seed, 103))?;
    let ya = generate_outcomes(&base.phi, &xa, &noise, derive_seed(seed, 104))?;
    let yb = generate_outcomes(&base.phi, &xb, &noise, derive_seed(seed, 105))?;
    let phi_b = ensemble_predict(&base.phi, &xb)?;
    let due_dates = assign_due_dates(
        &phi_b,
        cfg.due_slack_sigma,
        cfg.due_horizon_spread,
        derive_seed(seed, 106),
    );
    Ok(ReplicateData {
        data_a: Dataset {
            features: xa,
            labels: LabelColumn::Open(ya),
            setting: Setting::A,
        },
        data_b: Dataset {
            features: xb,
            labels: LabelColumn::Sealed(SealedLabels::new(yb)),
            setting: Setting::B,
        },
        due_dates,
        shift: ShiftConfig {
            theta,
            v_diff: &base.spec_b.mean - &base.spec_a.mean,
        },
    })
}

/// Grid search on the first seed's setting-A data; the adversarial learner
/// reuses the DNN-selected architecture verbatim.
pub fn tune_for_theta(
    cfg: &ExperimentConfig,
    base: &ExperimentBase,
    theta: f64,
) -> Result<TunedHyper> {
    let first = build_replicate(cfg, base, theta, derive_seed(cfg.base_seed, cfg.seeds[0]))?;
    let elastic = cross_validate(
        &table_grid_elastic(),
        &first.data_a,
        cfg.folds,
        cfg.base_seed,
    )?;
    let (elastic_lambda, elastic_ratio) = match elastic.best {
        BestHyper::ElasticNet { lambda, ratio } => (lambda, ratio),
        _ => unreachable!("elastic grid yields elastic hyper"),
    };
    let dnn = cross_validate(&cfg.dnn_grid(), &first.data_a, cfg.folds, cfg.base_seed)?;
    let net = match dnn.best {
        BestHyper::Dnn(h) => h,
        _ => unreachable!("dnn grid yields net hyper"),
    };
    Ok(TunedHyper {
        elastic_lambda,
        elastic_ratio,
        net,
    })
}

fn fit_and_predict(
    cfg: &ExperimentConfig,
    method: Method,
    tuned: &TunedHyper,
    alpha: f64,
    beta: f64,
    data: &ReplicateData,
    seed: u64,
) -> Result<Vec<f64>> {
    match method {
        Method::ElasticNet => {
            let standardizer = fit_standardizer(&data.data_a.features)?;
            let xs = apply_standardizer(&standardizer, &data.data_a.features)?;
            let fit = fit_elastic_net(
                &xs,
                data.data_a.open_labels()?,
                tuned.elastic_lambda,
                tuned.elastic_ratio,
                1e-7,
                10_000,
            )?;
            let model = ElasticRegressor {
                standardizer,
                model: fit.model,
            };
            model.predict_batch(&data.data_b.features)
        }
        Method::Dnn => {
            let model = fit_dnn(&data.data_a, &tuned.net, seed)?;
            model.predict_batch(&data.data_b.features)
        }
        Method::Wdgrl => {
            let hyper = WdgrlHyper {
                net: tuned.net,
                alpha,
                beta,
                n_critic: cfg.n_critic,
                critic_hidden: 8,
            };
            let model = fit_wdgrl(&data.data_a, &data.data_b.features, &hyper, seed)?;
            model.predict_batch(&data.data_b.features)
        }
        Method::Retrain => {
            let revealed = reveal_window_subset(&data.data_b, cfg.reveal_window)?;
            let model = fit_retrained(&data.data_a, &revealed, &tuned.net, seed)?;
            model.predict_batch(&data.data_b.features)
        }
        Method::Finetune => {
            let revealed = reveal_window_subset(&data.data_b, cfg.reveal_window)?;
            let model = fit_finetuned(
                &data.data_a,
                &revealed,
                &tuned.net,
                cfg.fine_tune_epochs,
                seed,
            )?;
            model.predict_batch(&data.data_b.features)
        }
        Method::Oracle => Ok(data
            .data_b
            .sealed_labels()?
            .reveal(AccessPurpose::Oracle)
            .to_vec()),
    }
}

struct ScheduledOutcome {
    realized: f64,
    optimal: bool,
}

/// Builds the top-k instance for one prediction vector and evaluates its
/// schedule against the realized throughput times.
fn schedule_and_score(
    cfg: &ExperimentConfig,
    due_dates: &[u32],
    predictions: &[f64],
    realized: &[f64],
    oracle: bool,
) -> Result<(ScheduledOutcome, Vec<usize>)> {
    let all_orders: Vec<Order> = (0..due_dates.len())
        .map(|j| Order {
            id: j,
            due: due_dates[j],
            predicted: predictions[j].max(0.0),
            realized: Some(realized[j]),
        })
        .collect();
    let subset = top_k_by_due_date(&all_orders, cfg.top_k);
    let ids: Vec<usize> = subset.iter().map(|o| o.id).collect();
    let dues: Vec<u32> = subset.iter().map(|o| o.due).collect();
    let preds: Vec<f64> = subset.iter().map(|o| o.predicted).collect();
    let horizon = SchedulingInstance::default_horizon(&dues, &preds);
    let inst = SchedulingInstance::with_uniform_capacity(
        subset,
        horizon,
        cfg.capacity,
        cfg.cost_early,
        cfg.cost_tardy,
    );
    let limits = SolveLimits {
        node_cap: cfg.node_cap,
        time_cap: None,
    };
    let outcome = if oracle {
        oracle_schedule(&inst, limits)?
    } else {
        solve_branch_and_bound(&inst, limits)?
    };
    let subset_realized: Vec<f64> = inst.orders.iter().map(|o| o.realized.unwrap()).collect();
    let subset_dues: Vec<u32> = inst.orders.iter().map(|o| o.due).collect();
    let realized = realized_cost(
        &outcome.schedule,
        &subset_realized,
        &subset_dues,
        cfg.cost_early,
        cfg.cost_tardy,
    );
    let _ = Schedule {
        start_slot: outcome.schedule.start_slot.clone(),
    };
    Ok((
        ScheduledOutcome {
            realized,
            optimal: outcome.optimal,
        },
        ids,
    ))
}

/// Runs every requested method on one replicate. The oracle is always
/// solved (it anchors the dominance check) but reported only if requested.
pub fn run_replicate(
    cfg: &ExperimentConfig,
    base: &ExperimentBase,
    tuned: &TunedHyper,
    theta: f64,
    seed: u64,
) -> Result<Vec<ReplicateRecord>> {
    let replicate_seed = derive_seed(cfg.base_seed, seed);
    let data = build_replicate(cfg, base, theta, replicate_seed)?;

    // Fit everything before any sealed-label access, then check the audit
    // log: training must not have touched setting-B labels (the reveal
    // window is the one sanctioned exception).
    let mut predictions: Vec<(Method, Vec<f64>)> = Vec::new();
    for &method in &cfg.methods {
        if method == Method::Oracle {
            continue;
        }
        let preds = fit_and_predict(cfg, method, tuned, cfg.alpha, cfg.beta, &data, replicate_seed)?;
        predictions.push((method, preds));
    }
    let audit = data.data_b.sealed_labels()?.audit();
    if audit
        .iter()
        .any(|p| !matches!(p, AccessPurpose::RevealWindow))
    {
        return Err(Error::InvalidConfig(
            "training-phase access to sealed deployment labels detected".into(),
        ));
    }

    let realized = data
        .data_b
        .sealed_labels()?
        .reveal(AccessPurpose::Evaluation)
        .to_vec();

    // Oracle reference for this replicate.
    let oracle_preds = realized.clone();
    let (oracle_outcome, _) =
        schedule_and_score(cfg, &data.due_dates, &oracle_preds, &realized, true)?;

    let mut records = Vec::new();
    for (method, preds) in &predictions {
        let mae_b = crate::predictors::mean_absolute_error(preds, &realized);
        let (outcome, _) = schedule_and_score(cfg, &data.due_dates, preds, &realized, false)?;
        let dominance_ok = outcome.realized >= oracle_outcome.realized - 1e-6;
        records.push(ReplicateRecord {
            theta,
            seed,
            method: *method,
            mae_b,
            realized_cost: outcome.realized,
            solver_optimal: outcome.optimal,
            oracle_cost: oracle_outcome.realized,
            dominance_ok,
        });
    }
    if cfg.methods.contains(&Method::Oracle) {
        records.push(ReplicateRecord {
            theta,
            seed,
            method: Method::Oracle,
            mae_b: 0.0,
            realized_cost: oracle_outcome.realized,
            solver_optimal: oracle_outcome.optimal,
            oracle_cost: oracle_outcome.realized,
            dominance_ok: true,
        });
    }
    Ok(records)
}

/// Full experiment: tune once per θ, run all (θ, seed) replicates
/// concurrently, aggregate into the report table.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let base = build_experiment_base(cfg)?;

    let tuned_per_theta: Result<Vec<(f64, TunedHyper)>> = cfg
        .theta_grid
        .iter()
        .map(|&theta| Ok((theta, tune_for_theta(cfg, &base, theta)?)))
        .collect();
    let tuned_per_theta = tuned_per_theta?;

    let jobs: Vec<(f64, u64, &TunedHyper)> = tuned_per_theta
        .iter()
        .flat_map(|(theta, tuned)| cfg.seeds.iter().map(move |&s| (*theta, s, tuned)))
        .collect();
    let results: Result<Vec<Vec<ReplicateRecord>>> = jobs
        .par_iter()
        .map(|(theta, seed, tuned)| run_replicate(cfg, &base, tuned, *theta, *seed))
        .collect();
    let mut records: Vec<ReplicateRecord> = results?.into_iter().flatten().collect();
    records.sort_by(|a, b| {
        a.theta
            .total_cmp(&b.theta)
            .then(a.seed.cmp(&b.seed))
            .then(a.method.cmp(&b.method))
    });

    let table = report::aggregate(cfg, &records)?;
    Ok(ExperimentResult { table, records })
}

/// One α/β sensitivity cell: adversarial learner vs the plain DNN at the
/// sweep's θ, mean over the config's seeds.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub wdgrl_cost: f64,
    pub wdgrl_mae: f64,
    pub dnn_cost: f64,
    pub dnn_mae: f64,
}

/// Loss-weight sensitivity: every grid point varies one weight with the
/// other fixed at 1. The DNN reference is fit once per seed and shared.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let sweep = cfg.sweep.clone().unwrap_or_default();
    let base = build_experiment_base(cfg)?;
    let tuned = tune_for_theta(cfg, &base, sweep.theta)?;

    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for &a in &sweep.alphas {
        pairs.push((a, 1.0));
    }
    for &b in &sweep.betas {
        if !pairs.contains(&(1.0, b)) {
            pairs.push((1.0, b));
        }
    }

    let jobs: Vec<(f64, f64, u64)> = pairs
        .iter()
        .flat_map(|&(a, b)| cfg.seeds.iter().map(move |&s| (a, b, s)))
        .collect();
    let results: Result<Vec<SweepRecord>> = jobs
        .par_iter()
        .map(|&(alpha, beta, seed)| {
            let replicate_seed = derive_seed(cfg.base_seed, seed);
            let data = build_replicate(cfg, &base, sweep.theta, replicate_seed)?;
            let realized = data
                .data_b
                .sealed_labels()?
                .reveal(AccessPurpose::Evaluation)
                .to_vec();
            let dnn_preds =
                fit_and_predict(cfg, Method::Dnn, &tuned, alpha, beta, &data, replicate_seed)?;
            let wdgrl_preds =
                fit_and_predict(cfg, Method::Wdgrl, &tuned, alpha, beta, &data, replicate_seed)?;
            let (dnn_outcome, _) =
                schedule_and_score(cfg, &data.due_dates, &dnn_preds, &realized, false)?;
            let (wdgrl_outcome, _) =
                schedule_and_score(cfg, &data.due_dates, &wdgrl_preds, &realized, false)?;
            Ok(SweepRecord {
                alpha,
                beta,
                seed,
                wdgrl_cost: wdgrl_outcome.realized,
                wdgrl_mae: crate::predictors::mean_absolute_error(&wdgrl_preds, &realized),
                dnn_cost: dnn_outcome.realized,
                dnn_mae: crate::predictors::mean_absolute_error(&dnn_preds, &realized),
            })
        })
        .collect();
    let mut records = results?;
    records.sort_by(|a, b| {
        a.alpha
            .total_cmp(&b.alpha)
            .then(a.beta.total_cmp(&b.beta))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(records)
}

/// Convenience wrapper used by the CLI `simulate` subcommand.
pub fn simulate_datasets(cfg: &ExperimentConfig, theta: f64, seed: u64) -> Result<datagen::SemiSynth> {
    let (seed_a, seed_b) = seedgen::generate(cfg.n(), cfg.m(), cfg.base_seed)?;
    let sem_cfg = datagen::SemiSynthConfig {
        theta,
        n: cfg.n(),
        m: cfg.m(),
        noise_kind: cfg.noise,
        sigma_y: None,
        phi: cfg.phi_kind(),
        due_slack_sigma: cfg.due_slack_sigma,
        due_horizon_spread: cfg.due_horizon_spread,
        seed: derive_seed(cfg.base_seed, seed),
    };
    datagen::build_semisynthetic(&sem_cfg, &seed_a, &seed_b)
}
