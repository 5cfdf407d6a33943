//! Reports final training loss and mean per-epoch wall time for a range of
//! innovation-refresh intervals N on the scalar benchmark.
//!
//! Run: cargo run -p irnn-core --example interval_sweep -- <hidden> <lr> <epochs> <seed> [t_f] [train_len]

use irnn_core::bptt::Trajectory;
use irnn_core::cells::{init_weights, CellKind, InnovationMask};
use irnn_core::data::{apply_normalize, segment, trajectories, NormalizationStats};
use irnn_core::numerics::{Activation, Vector};
use irnn_core::synthetic::{simulate, LtiSystem};
use irnn_core::trainer::{fit, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let hidden: usize = args[1].parse().unwrap();
    let lr: f64 = args[2].parse().unwrap();
    let epochs: usize = args[3].parse().unwrap();
    let seed: u64 = args[4].parse().unwrap();
    let t_f: usize = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(1);
    let train_len: usize = args.get(6).map(|s| s.parse().unwrap()).unwrap_or(20_000);
    let t_p = 24usize;

    let sys = LtiSystem::scalar(0.9, 1.0, 1.0).unwrap();
    let train_raw = simulate(&sys, &vec![Vector::zeros(1); train_len], 42).unwrap();
    let ys: Vec<f64> = train_raw.y.iter().map(|v| v.data()[0]).collect();
    let y_mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let y_var = ys.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / ys.len() as f64;
    let stats = NormalizationStats {
        u_mean: vec![0.0],
        u_std: vec![1.0],
        y_mean: vec![y_mean],
        y_std: vec![y_var.sqrt()],
    };
    let train_norm = apply_normalize(&train_raw, &stats).unwrap();
    let train_set = segment(train_len, t_p, t_f, None).unwrap();
    let n = train_set.len();
    let n_val = n / 10;
    let train: Vec<Trajectory> =
        trajectories(&train_norm, &train_set, &(0..n - n_val).collect::<Vec<_>>()).unwrap();
    let val: Vec<Trajectory> =
        trajectories(&train_norm, &train_set, &(n - n_val..n).collect::<Vec<_>>()).unwrap();

    let mut cfg = TrainConfig::rnn_defaults();
    cfg.learning_rate = lr;
    cfg.t_p = t_p;
    cfg.t_f = t_f;
    cfg.epochs = epochs;
    cfg.early_stop_tolerance = epochs + 1;
    cfg.seed = seed;

    for n_int in [1usize, 5, 10, 15] {
        cfg.innovation_interval = n_int;
        let w0 = init_weights(
            CellKind::Irnn,
            hidden,
            1,
            1,
            InnovationMask::full(CellKind::Irnn),
            Activation::Tanh,
            300,
        )
        .unwrap();
        let mut tr = train.clone();
        let mut va = val.clone();
        let report = fit(&w0, &mut tr, &mut va, &cfg).unwrap();
        let final_loss = report.records.last().unwrap().train_mse;
        let mean_t = report.records.iter().map(|r| r.wall_time_s).sum::<f64>()
            / report.records.len() as f64;
        println!("N={n_int:>2}: final_train={final_loss:.5} mean_epoch_s={mean_t:.4}");
    }
}
