//! Alternating training loop: Adam updates over mini-batches of trajectories,
//! with the stored innovations refreshed under the current weights every
//! `innovation_interval` epochs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::bptt::{
    backward, forward, loss, self_consistent_innovations, Gradients, InnovationSource, Trajectory,
};
use crate::cells::WeightSet;
use crate::error::{Error, Result};

/// Training hyperparameters. Defaults follow the hourly-benchmark settings:
/// warmup 24, horizon 5, batch 64, up to 100 epochs, early-stop patience 5,
/// refresh every epoch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Refresh stored innovations every N epochs (N >= 1).
    pub innovation_interval: usize,
    pub batch_size: usize,
    /// Stop after this many consecutive epochs without validation improvement.
    pub early_stop_tolerance: usize,
    pub t_p: usize,
    pub t_f: usize,
    pub seed: u64,
    pub innovation_source: InnovationSource,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
}

impl TrainConfig {
    /// Defaults for the RNN/IRNN family (learning rate 6e-4).
    pub fn rnn_defaults() -> Self {
        Self::with_learning_rate(6e-4)
    }

    /// Defaults for the gated families (learning rate 3e-4).
    pub fn gated_defaults() -> Self {
        Self::with_learning_rate(3e-4)
    }

    fn with_learning_rate(lr: f64) -> Self {
        TrainConfig {
            learning_rate: lr,
            epochs: 100,
            innovation_interval: 1,
            batch_size: 64,
            early_stop_tolerance: 5,
            t_p: 24,
            t_f: 5,
            seed: 0,
            innovation_source: InnovationSource::Stored,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rate < 0.0 {
            return Err(Error::InvalidArgument("learning rate must be >= 0".into()));
        }
        if self.innovation_interval == 0 {
            return Err(Error::InvalidArgument(
                "innovation interval must be >= 1".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Adam moment accumulators over the flattened parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        AdamState {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update applied in place.
pub fn adam_step(
    w: &mut WeightSet,
    g: &Gradients,
    st: &mut AdamState,
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
) -> Result<()> {
    let mut flat = w.flatten();
    if g.len() != flat.len() || st.m.len() != flat.len() {
        return Err(Error::InvalidArgument(format!(
            "adam shape mismatch: params={}, grads={}, state={}",
            flat.len(),
            g.len(),
            st.m.len()
        )));
    }
    if let Some(i) = g.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: format!("gradient entry {i} in adam_step"),
            at_step: None,
        });
    }
    st.step += 1;
    let t = st.step as f64;
    let bc1 = 1.0 - beta1.powf(t);
    let bc2 = 1.0 - beta2.powf(t);
    for i in 0..flat.len() {
        st.m[i] = beta1 * st.m[i] + (1.0 - beta1) * g[i];
        st.v[i] = beta2 * st.v[i] + (1.0 - beta2) * g[i] * g[i];
        let m_hat = st.m[i] / bc1;
        let v_hat = st.v[i] / bc2;
        flat[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
    }
    w.assign_flat(&flat)
}

/// One pass over the dataset: shuffled mini-batches, mean gradient per batch,
/// one Adam step per batch. The shuffle order is fixed by (seed, epoch index).
/// Returns the epoch-mean training loss.
pub fn train_epoch(
    w: &mut WeightSet,
    dataset: &[Trajectory],
    adam: &mut AdamState,
    cfg: &TrainConfig,
    epoch_index: usize,
) -> Result<f64> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut rng =
        ChaCha20Rng::seed_from_u64(cfg.seed ^ (epoch_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    order.shuffle(&mut rng);

    let mut loss_sum = 0.0;
    for batch in order.chunks(cfg.batch_size) {
        let mut batch_grad: Option<Gradients> = None;
        for &idx in batch {
            let traj = &dataset[idx];
            let (y_hats, tape) = forward(w, traj, cfg.innovation_source)?;
            loss_sum += loss(&y_hats, traj)?;
            let g = backward(&tape, traj, w)?;
            match &mut batch_grad {
                None => batch_grad = Some(g),
                Some(acc) => {
                    for (a, b) in acc.iter_mut().zip(&g) {
                        *a += b;
                    }
                }
            }
        }
        let mut g = batch_grad.expect("non-empty batch");
        let scale = 1.0 / batch.len() as f64;
        for v in &mut g {
            *v *= scale;
        }
        adam_step(
            w,
            &g,
            adam,
            cfg.learning_rate,
            cfg.adam_beta1,
            cfg.adam_beta2,
            cfg.adam_epsilon,
        )?;
    }
    Ok(loss_sum / dataset.len() as f64)
}

/// Refresh every trajectory's stored innovations under the current weights
/// (self-consistent sequential recomputation over the warmup). Inputs and
/// targets are untouched. No-op for vanilla cell kinds.
pub fn update_innovations(w: &WeightSet, dataset: &mut [Trajectory]) -> Result<()> {
    if !w.kind.has_innovation() {
        return Ok(());
    }
    for traj in dataset.iter_mut() {
        traj.e_stored = self_consistent_innovations(w, traj)?;
    }
    Ok(())
}

/// Mean horizon loss over a dataset without touching weights.
pub fn evaluate_loss(
    w: &WeightSet,
    dataset: &[Trajectory],
    source: InnovationSource,
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("empty evaluation set".into()));
    }
    let mut acc = 0.0;
    for traj in dataset {
        let (y_hats, _) = forward(w, traj, source)?;
        acc += loss(&y_hats, traj)?;
    }
    Ok(acc / dataset.len() as f64)
}

/// One row of the training report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    /// Whether the training-set innovations were refreshed after this epoch.
    pub refreshed: bool,
    /// Wall time of the epoch in seconds. Excluded from metrics files that
    /// must reproduce byte-identically.
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// Outcome of a full training run.
#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub records: Vec<EpochRecord>,
    pub stopping_epoch: usize,
    pub best_epoch: usize,
    pub best_val_mse: f64,
    /// Snapshot of the best-validation parameters.
    #[serde(skip_serializing)]
    pub best_weights: WeightSet,
}

/// Full training loop: per-epoch Adam updates, innovation refresh every
/// `innovation_interval` epochs on the training set, validation-set
/// innovations refreshed under the current weights before each evaluation,
/// early stopping on validation loss, best-parameters snapshot returned.
pub fn fit(
    w0: &WeightSet,
    train_set: &mut [Trajectory],
    val_set: &mut [Trajectory],
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::InvalidArgument(
            "training and validation sets must be non-empty".into(),
        ));
    }
    let mut w = w0.clone();
    let mut adam = AdamState::new(w.param_count());
    let mut records = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut best_weights = w.clone();
    let mut stale_epochs = 0usize;
    let mut stopping_epoch = 0;

    for epoch in 1..=cfg.epochs {
        let start = std::time::Instant::now();
        let train_mse = train_epoch(&mut w, train_set, &mut adam, cfg, epoch)?;

        let refreshed = w.kind.has_innovation()
            && cfg.innovation_source == InnovationSource::Stored
            && epoch % cfg.innovation_interval == 0;
        if refreshed {
            update_innovations(&w, train_set)?;
        }

        if w.kind.has_innovation() && cfg.innovation_source == InnovationSource::Stored {
            update_innovations(&w, val_set)?;
        }
        let val_mse = evaluate_loss(&w, val_set, cfg.innovation_source)?;
        let wall_time_s = start.elapsed().as_secs_f64();

        records.push(EpochRecord {
            epoch,
            train_mse,
            val_mse,
            refreshed,
            wall_time_s,
        });
        stopping_epoch = epoch;

        if val_mse < best_val {
            best_val = val_mse;
            best_epoch = epoch;
            best_weights = w.clone();
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= cfg.early_stop_tolerance {
                break;
            }
        }
    }

    Ok(TrainReport {
        records,
        stopping_epoch,
        best_epoch,
        best_val_mse: best_val,
        best_weights,
    })
}
