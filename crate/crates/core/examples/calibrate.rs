use shiftsched::harness::*;
use shiftsched::datagen::AccessPurpose;
use shiftsched::predictors::*;
use std::time::Instant;

fn main() {
    let cfg = ExperimentConfig {
        theta_grid: vec![0.0, 1.0, 2.0, 4.0],
        seeds: vec![1],
        ..ExperimentConfig::default()
    };
    let t0 = Instant::now();
    let base = build_experiment_base(&cfg).unwrap();
    println!("base built in {:?}; sigma_y = {:.3}", t0.elapsed(), base.sigma_y);

    let net = NetHyper { extractor_width: 64, epochs: 100, batch: 64, l2: 1e-5, dropout: 0.4, ..NetHyper::default() };
    let tuned = TunedHyper { elastic_lambda: 0.1, elastic_ratio: 0.5, net };

    for &theta in &cfg.theta_grid {
        let t1 = Instant::now();
        let data = build_replicate(&cfg, &base, theta, 42).unwrap();
        let realized = data.data_b.sealed_labels().unwrap().reveal(AccessPurpose::Evaluation).to_vec();
        let ymean = realized.iter().sum::<f64>() / realized.len() as f64;

        // elastic
        let s = fit_standardizer(&data.data_a.features).unwrap();
        let xs = apply_standardizer(&s, &data.data_a.features).unwrap();
        let en = fit_elastic_net(&xs, data.data_a.open_labels().unwrap(), 0.1, 0.5, 1e-7, 10_000).unwrap();
        let en_model = ElasticRegressor { standardizer: s, model: en.model };
        let en_preds = en_model.predict_batch(&data.data_b.features).unwrap();
        let en_mae = mean_absolute_error(&en_preds, &realized);

        let t_dnn = Instant::now();
        let dnn = fit_dnn(&data.data_a, &net, 42).unwrap();
        let dnn_preds = dnn.predict_batch(&data.data_b.features).unwrap();
        let dnn_mae = mean_absolute_error(&dnn_preds, &realized);
        let dnn_time = t_dnn.elapsed();

        let t_w = Instant::now();
        let hyper = WdgrlHyper { net, alpha: 1.0, beta: 1.0, n_critic: 5, critic_hidden: 8 };
        let w = fit_wdgrl(&data.data_a, &data.data_b.features, &hyper, 42).unwrap();
        let w_preds = w.predict_batch(&data.data_b.features).unwrap();
        let w_mae = mean_absolute_error(&w_preds, &realized);
        let w_time = t_w.elapsed();
        let log = w.train_log.epochs.last().unwrap();

        println!(
            "theta {theta}: yB_mean {ymean:.1} | MAE en {en_mae:.2} dnn {dnn_mae:.2} wdgrl {w_mae:.2} | terminal W {:.3} gp {:.3} | dnn {dnn_time:?} wdgrl {w_time:?} | total {:?}",
            log.w_estimate, log.l_grad, t1.elapsed()
        );
    }
}
