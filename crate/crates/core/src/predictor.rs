//! Inference-time prediction: teacher-forced warmup over observed history,
//! then closed-loop rollout over the horizon, plus per-horizon-step error
//! accounting and the hold-last-value baseline.
//!
//! At test time there are no stored innovations: the warmup recomputes
//! `e_t = y_t - ŷ_t` on the fly under the current weights. The rollout sets
//! all future innovations to zero and feeds each prediction back as the next
//! step's output input; its first step still consumes the last *observed*
//! output, which is available at prediction time.

use serde::Serialize;

use crate::bptt::Trajectory;
use crate::cells::{CellState, WeightSet};
use crate::error::{Error, Result};
use crate::numerics::Vector;

/// Outcome of the warmup recursion over the observed history.
#[derive(Debug, Clone)]
pub struct WarmupResult {
    /// Hidden state after consuming step `T_p`.
    pub state: CellState,
    /// One-step predictions `ŷ_1 .. ŷ_{T_p}` made along the way.
    pub predictions: Vec<Vector>,
    /// On-the-fly innovations `e_1 .. e_{T_p}` (`e_t = y_t - ŷ_t`).
    pub innovations: Vec<Vector>,
}

/// Outcome of a closed-loop rollout over the horizon.
#[derive(Debug, Clone)]
pub struct RolloutResult {
    /// Predictions `ŷ_{t+k|t}` for `k = 1 .. T_f`.
    pub predictions: Vec<Vector>,
    /// Hidden state after the last horizon step; together with the last
    /// prediction it is all that is needed to resume the rollout.
    pub state: CellState,
}

impl RolloutResult {
    /// Squared error `||y_{t+k} - ŷ_{t+k|t}||²` per horizon step.
    pub fn squared_errors(&self, targets: &[Vector]) -> Result<Vec<f64>> {
        if targets.len() != self.predictions.len() {
            return Err(Error::InvalidArgument(format!(
                "got {} targets for {} predictions",
                targets.len(),
                self.predictions.len()
            )));
        }
        self.predictions
            .iter()
            .zip(targets)
            .map(|(p, y)| Ok(y.sub(p)?.norm_sq()))
            .collect()
    }
}

/// Per-horizon-step mean squared error, `k = 1 .. T_f`, plus their mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepMseTable {
    pub per_step: Vec<f64>,
    pub average: f64,
}

impl StepMseTable {
    fn from_sums(sums: Vec<f64>, count: usize) -> Self {
        let per_step: Vec<f64> = sums.iter().map(|s| s / count as f64).collect();
        let average = per_step.iter().sum::<f64>() / per_step.len() as f64;
        StepMseTable { per_step, average }
    }

    pub fn horizon(&self) -> usize {
        self.per_step.len()
    }
}

/// Teacher-forced recursion over the observed history `(u_1..u_{T_p},
/// y_1..y_{T_p})` from zero initial state, computing innovations on the fly.
pub fn warmup(w: &WeightSet, u: &[Vector], y: &[Vector]) -> Result<WarmupResult> {
    if u.is_empty() || u.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "warmup needs equal, non-zero input/output lengths, got |u|={}, |y|={}",
            u.len(),
            y.len()
        )));
    }
    let t_p = u.len();
    let zero_y = Vector::zeros(w.n_y);
    let mut state = CellState::zeros(w.kind, w.n_x);
    let mut predictions = Vec::with_capacity(t_p);
    let mut innovations = Vec::with_capacity(t_p);
    let mut e_prev = zero_y.clone();
    for t in 1..=t_p {
        let y_prev = if t == 1 { &zero_y } else { &y[t - 2] };
        let (next, y_hat) = w.step(&state, &u[t - 1], y_prev, &e_prev)?;
        if !y_hat.is_finite() || !next.x.is_finite() {
            return Err(Error::NonFinite {
                context: "warmup".to_string(),
                at_step: Some(t),
            });
        }
        e_prev = y[t - 1].sub(&y_hat)?;
        state = next;
        predictions.push(y_hat);
        innovations.push(e_prev.clone());
    }
    Ok(WarmupResult {
        state,
        predictions,
        innovations,
    })
}

/// Closed-loop rollout: from `state`, iterate the cell with innovations
/// forced to zero, feeding `last_output` into the first step and each
/// prediction into the next. At the warmup boundary `last_output` is the last
/// observed output `y_{T_p}`; when resuming a split rollout it is the last
/// prediction (the recursion is memoryless beyond state, last output, and the
/// zero innovation).
pub fn rollout(
    w: &WeightSet,
    state: &CellState,
    last_output: &Vector,
    u_future: &[Vector],
) -> Result<RolloutResult> {
    if u_future.is_empty() {
        return Err(Error::InvalidArgument(
            "rollout needs a horizon of at least one step".into(),
        ));
    }
    let zero_e = Vector::zeros(w.n_y);
    let mut state = state.clone();
    let mut y_prev = last_output.clone();
    let mut predictions = Vec::with_capacity(u_future.len());
    for (k, u) in u_future.iter().enumerate() {
        let (next, y_hat) = w.step(&state, u, &y_prev, &zero_e)?;
        if !y_hat.is_finite() || !next.x.is_finite() {
            return Err(Error::NonFinite {
                context: "rollout".to_string(),
                at_step: Some(k + 1),
            });
        }
        state = next;
        y_prev = y_hat.clone();
        predictions.push(y_hat);
    }
    Ok(RolloutResult { predictions, state })
}

fn check_set(test_set: &[Trajectory]) -> Result<(usize, usize)> {
    let first = test_set
        .first()
        .ok_or_else(|| Error::InvalidArgument("evaluation set is empty".into()))?;
    if first.t_f == 0 {
        return Err(Error::InvalidArgument(
            "evaluation needs a horizon T_f >= 1".into(),
        ));
    }
    for traj in test_set {
        if traj.t_p != first.t_p || traj.t_f != first.t_f {
            return Err(Error::InvalidArgument(format!(
                "mixed trajectory shapes: (T_p={}, T_f={}) vs (T_p={}, T_f={})",
                traj.t_p, traj.t_f, first.t_p, first.t_f
            )));
        }
    }
    Ok((first.t_p, first.t_f))
}

/// Warmup-then-rollout on every trajectory, aggregated into a per-step MSE
/// table. Step `k`'s entry is the mean of `||y_{t+k} - ŷ_{t+k|t}||²` over the
/// set, summed in trajectory order.
pub fn evaluate(w: &WeightSet, test_set: &[Trajectory]) -> Result<StepMseTable> {
    let (t_p, t_f) = check_set(test_set)?;
    let mut sums = vec![0.0; t_f];
    for traj in test_set {
        let wu = warmup(w, &traj.u[..t_p], &traj.y[..t_p])?;
        let ro = rollout(w, &wu.state, &traj.y[t_p - 1], &traj.u[t_p..])?;
        for (k, err) in ro.squared_errors(&traj.y[t_p..])?.into_iter().enumerate() {
            sums[k] += err;
        }
    }
    Ok(StepMseTable::from_sums(sums, test_set.len()))
}

/// Hold-last-value baseline: `ŷ_{t+k|t} = y_t` for every horizon step.
pub fn naive_baseline(test_set: &[Trajectory]) -> Result<StepMseTable> {
    let (t_p, t_f) = check_set(test_set)?;
    let mut sums = vec![0.0; t_f];
    for traj in test_set {
        let held = &traj.y[t_p - 1];
        for k in 0..t_f {
            sums[k] += traj.y[t_p + k].sub(held)?.norm_sq();
        }
    }
    Ok(StepMseTable::from_sums(sums, test_set.len()))
}
