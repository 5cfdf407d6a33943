//! Sweeps one training configuration on the scalar stochastic benchmark and
//! prints per-seed one-step test MSE for IRNN vs vanilla RNN, next to the
//! Kalman-oracle floor.
//!
//! Run: cargo run -p irnn-core --example lti_sweep -- <hidden> <lr> <epochs> <t_f> [t_p]

use irnn_core::bptt::Trajectory;
use irnn_core::cells::{init_weights, CellKind, InnovationMask};
use irnn_core::data::{apply_normalize, segment, trajectories, NormalizationStats};
use irnn_core::numerics::{Activation, Vector};
use irnn_core::predictor::evaluate;
use irnn_core::synthetic::{riccati_gain, simulate, LtiSystem};
use irnn_core::trainer::{fit, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let hidden: usize = args[1].parse().unwrap();
    let lr: f64 = args[2].parse().unwrap();
    let epochs: usize = args[3].parse().unwrap();
    let t_f: usize = args[4].parse().unwrap();
    let t_p: usize = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(24);

    let sys = LtiSystem::scalar(0.9, 1.0, 1.0).unwrap();
    let train_len = 50_000;
    let test_len = 10_000;
    let train_raw = simulate(&sys, &vec![Vector::zeros(1); train_len], 42).unwrap();
    let test_raw = simulate(&sys, &vec![Vector::zeros(1); test_len], 43).unwrap();
    let ys: Vec<f64> = train_raw.y.iter().map(|v| v.data()[0]).collect();
    let y_mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let y_var = ys.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / ys.len() as f64;
    let stats = NormalizationStats {
        u_mean: vec![0.0],
        u_std: vec![1.0],
        y_mean: vec![y_mean],
        y_std: vec![y_var.sqrt()],
    };
    let y_std_sq = y_var;
    let train_norm = apply_normalize(&train_raw, &stats).unwrap();
    let test_norm = apply_normalize(&test_raw, &stats).unwrap();
    let train_set = segment(train_len, t_p, t_f, None).unwrap();
    let test_set = segment(test_len, t_p, t_f, None).unwrap();
    let n = train_set.len();
    let n_val = n / 10;
    let train: Vec<Trajectory> =
        trajectories(&train_norm, &train_set, &(0..n - n_val).collect::<Vec<_>>()).unwrap();
    let val: Vec<Trajectory> =
        trajectories(&train_norm, &train_set, &(n - n_val..n).collect::<Vec<_>>()).unwrap();
    let test: Vec<Trajectory> =
        trajectories(&test_norm, &test_set, &(0..test_set.len()).collect::<Vec<_>>()).unwrap();

    let oracle = riccati_gain(&sys).unwrap();
    let s = oracle.s.get(0, 0);
    println!("S = {s:.5}, 1.25*S = {:.5}", 1.25 * s);

    // Empirical KF one-step squared error at exactly the window target
    // positions used by evaluate(), for a realization-matched floor.
    let (_, innovations) = irnn_core::synthetic::kf_predict(&oracle, &sys, &test_raw).unwrap();
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut start = 0usize;
    while start + t_p + t_f <= test_len {
        let e = innovations[start + t_p].data()[0];
        sum += e * e;
        count += 1;
        start += t_p + t_f;
    }
    println!("KF empirical one-step MSE at target positions: {:.5} over {count} windows", sum / count as f64);

    let mut cfg = TrainConfig::rnn_defaults();
    cfg.learning_rate = lr;
    cfg.t_p = t_p;
    cfg.t_f = t_f;
    cfg.epochs = epochs;
    cfg.early_stop_tolerance = 5;

    for kind in [CellKind::Irnn, CellKind::Rnn] {
        let mask = if kind.has_innovation() {
            InnovationMask::full(kind)
        } else {
            InnovationMask::empty(kind)
        };
        let mut mses = Vec::new();
        for seed in 0..5u64 {
            cfg.seed = seed;
            let w0 =
                init_weights(kind, hidden, 1, 1, mask.clone(), Activation::Tanh, 100 + seed)
                    .unwrap();
            let mut tr = train.clone();
            let mut va = val.clone();
            let report = fit(&w0, &mut tr, &mut va, &cfg).unwrap();
            let mse = evaluate(&report.best_weights, &test).unwrap().per_step[0] * y_std_sq;
            mses.push((mse * 1e4).round() / 1e4);
        }
        println!("{kind:?}: {mses:?}");
    }
}
