//! Compares each innovation cell against its vanilla twin (shared paired
//! initialization) on the surrogate dataset for a given stride / epoch
//! budget / seed count. Set VAL_CURVES=1 to also print per-epoch validation
//! curves for all six kinds at seed 0.
//!
//! Run: cargo run -p irnn-cli --example surrogate_sweep -- <stride|0> <epochs> <n_seeds> [surrogate_seed]

use irnn_cli::commands::{cmd_prepare, cmd_synth_surrogate, PrepareArgs};
use irnn_core::cells::{init_weights, CellKind, InnovationMask};
use irnn_core::numerics::Activation;
use irnn_core::predictor::{evaluate, naive_baseline};
use irnn_core::trainer::{fit, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let stride: usize = args[1].parse().unwrap();
    let epochs: usize = args[2].parse().unwrap();
    let n_seeds: u64 = args[3].parse().unwrap();
    let surrogate_seed: u64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(1);

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    cmd_synth_surrogate(17_420, surrogate_seed, &csv).unwrap();
    let manifest = dir.path().join("m.json");
    cmd_prepare(&PrepareArgs {
        csv: csv.clone(),
        timestamp_column: Some("date".into()),
        input_columns: (1..=6).map(|j| format!("load{j}")).collect(),
        target_columns: vec!["oil_temp".into()],
        t_p: 24,
        t_f: 5,
        stride: if stride == 0 { None } else { Some(stride) },
        ratios: [0.6, 0.2, 0.2],
        seed: 7,
        out: manifest.clone(),
    })
    .unwrap();
    let prepared = irnn_cli::commands::load_prepared(&manifest, &csv).unwrap();
    println!(
        "windows: train {} val {} test {}",
        prepared.train.len(),
        prepared.val.len(),
        prepared.test.len()
    );
    let naive = naive_baseline(&prepared.test).unwrap();
    println!(
        "naive: per_step {:?} avg {:.4}",
        naive.per_step.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
        naive.average
    );

    for ikind in [CellKind::Irnn, CellKind::Igru, CellKind::Ilstm] {
        let mut cfg = match ikind.vanilla() {
            CellKind::Rnn => TrainConfig::rnn_defaults(),
            _ => TrainConfig::gated_defaults(),
        };
        cfg.t_p = 24;
        cfg.t_f = 5;
        cfg.epochs = epochs;
        let mut acc_i = vec![0.0f64; 5];
        let mut acc_v = vec![0.0f64; 5];
        let mut seed_avgs = Vec::new();
        for seed in 0..n_seeds {
            cfg.seed = seed;
            let w0_i = init_weights(
                ikind,
                32,
                6,
                1,
                InnovationMask::full(ikind),
                Activation::Tanh,
                200 + seed,
            )
            .unwrap();
            let w0_v = w0_i.to_vanilla();
            let mut seed_pair = Vec::new();
            for (w0, acc) in [(w0_i, &mut acc_i), (w0_v, &mut acc_v)] {
                let mut tr = prepared.train.clone();
                let mut va = prepared.val.clone();
                let report = fit(&w0, &mut tr, &mut va, &cfg).unwrap();
                let table = evaluate(&report.best_weights, &prepared.test).unwrap();
                for (a, v) in acc.iter_mut().zip(&table.per_step) {
                    *a += v / n_seeds as f64;
                }
                seed_pair.push((table.average * 1e4).round() / 1e4);
            }
            seed_avgs.push(seed_pair);
        }
        let avg = |acc: &[f64]| acc.iter().sum::<f64>() / acc.len() as f64;
        println!(
            "{ikind:?} {:.4} vs {:?} {:.4}  per-seed (i,v): {seed_avgs:?}",
            avg(&acc_i),
            ikind.vanilla(),
            avg(&acc_v)
        );
        println!(
            "  per_step i {:?} v {:?}",
            acc_i.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
            acc_v.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>()
        );
    }

    if std::env::var("VAL_CURVES").is_ok() {
        for kind in [
            CellKind::Rnn,
            CellKind::Irnn,
            CellKind::Gru,
            CellKind::Igru,
            CellKind::Lstm,
            CellKind::Ilstm,
        ] {
            let mut cfg = match kind.vanilla() {
                CellKind::Rnn => TrainConfig::rnn_defaults(),
                _ => TrainConfig::gated_defaults(),
            };
            cfg.t_p = 24;
            cfg.t_f = 5;
            cfg.epochs = epochs;
            cfg.early_stop_tolerance = epochs + 1;
            cfg.seed = 0;
            let mask = if kind.has_innovation() {
                InnovationMask::full(kind)
            } else {
                InnovationMask::empty(kind)
            };
            let w0 =
                init_weights(kind, 32, 6, 1, mask, Activation::Tanh, 200).unwrap();
            let mut tr = prepared.train.clone();
            let mut va = prepared.val.clone();
            let report = fit(&w0, &mut tr, &mut va, &cfg).unwrap();
            let curve: Vec<f64> = report
                .records
                .iter()
                .map(|r| (r.val_mse * 1e3).round() / 1e3)
                .collect();
            println!("{kind:?} val curve: {curve:?}");
        }
    }
}
