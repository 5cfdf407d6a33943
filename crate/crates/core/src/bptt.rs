//! Full-trajectory forward pass, loss, and exact reverse-mode gradients.
//!
//! A trajectory is processed in two phases: a teacher-forced warmup of length
//! `T_p` that consumes measured outputs and stored innovations, and a
//! closed-loop prediction phase of length `T_f` where the cell consumes its
//! own predictions with innovations forced to zero (only the first horizon
//! step still sees the last observed output, which is available at prediction
//! time). Stored innovations are
//! treated as constants during differentiation; gradients do flow through the
//! prediction-phase feedback of `ŷ` and through the state recurrence across
//! all `T_p + T_f` steps.

use serde::{Deserialize, Serialize};

use crate::cells::{CellFamily, CellState, StepTrace, WeightSet};
use crate::error::{Error, Result};
use crate::numerics::{Activation, Vector};

/// Where the warmup phase takes its innovation inputs from during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InnovationSource {
    /// Consume `e_stored`, refreshed only by the trainer's innovation-updating
    /// step.
    Stored,
    /// Recompute `e_{t-1} = y_{t-1} - ŷ_{t-1}` within the same forward pass,
    /// still treated as a constant by backward.
    InPassDetached,
}

impl Default for InnovationSource {
    fn default() -> Self {
        InnovationSource::Stored
    }
}

/// A segmented training window: inputs, targets, and stored innovations.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub u: Vec<Vector>,
    pub y: Vec<Vector>,
    /// Stored innovations for the warmup phase; slot `t` holds `e_t` for
    /// `t = 0..T_p-1`. Slot 0 is pinned to zero (`e_0 = 0`). All slots start
    /// at zero when the dataset is constructed.
    pub e_stored: Vec<Vector>,
    pub t_p: usize,
    pub t_f: usize,
}

impl Trajectory {
    pub fn new(u: Vec<Vector>, y: Vec<Vector>, t_p: usize, t_f: usize) -> Result<Self> {
        if t_p == 0 {
            return Err(Error::InvalidArgument("warmup length T_p must be >= 1".into()));
        }
        let t = t_p + t_f;
        if u.len() != t || y.len() != t {
            return Err(Error::InvalidArgument(format!(
                "trajectory needs {} steps of u and y, got |u|={}, |y|={}",
                t,
                u.len(),
                y.len()
            )));
        }
        let n_y = y[0].dim();
        let e_stored = vec![Vector::zeros(n_y); t_p];
        Ok(Trajectory {
            u,
            y,
            e_stored,
            t_p,
            t_f,
        })
    }

    pub fn len(&self) -> usize {
        self.t_p + self.t_f
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_u(&self) -> usize {
        self.u[0].dim()
    }

    pub fn n_y(&self) -> usize {
        self.y[0].dim()
    }
}

/// Recorded forward intermediates for one trajectory.
#[derive(Debug, Clone)]
pub struct Tape {
    pub steps: Vec<StepTrace>,
    pub t_p: usize,
    pub t_f: usize,
}

/// Gradient of the loss with respect to the flattened parameter vector,
/// in [`WeightSet::flatten`] order.
pub type Gradients = Vec<f64>;

/// Forward pass over a trajectory. Returns the predictions `ŷ_1..ŷ_T` and
/// the tape needed by [`backward`].
pub fn forward(
    w: &WeightSet,
    traj: &Trajectory,
    source: InnovationSource,
) -> Result<(Vec<Vector>, Tape)> {
    if traj.n_u() != w.n_u || traj.n_y() != w.n_y {
        return Err(Error::shape(
            "forward",
            "trajectory",
            format!("n_u={}, n_y={}", traj.n_u(), traj.n_y()),
            "weights",
            format!("n_u={}, n_y={}", w.n_u, w.n_y),
        ));
    }
    let t_total = traj.len();
    let zero_y = Vector::zeros(w.n_y);
    let mut state = CellState::zeros(w.kind, w.n_x);
    let mut y_hats: Vec<Vector> = Vec::with_capacity(t_total);
    let mut steps = Vec::with_capacity(t_total);

    for t in 1..=t_total {
        let warmup = t <= traj.t_p;
        // The first closed-loop step still consumes the last *observed*
        // output (it is available at prediction time); later steps feed back
        // the model's own predictions.
        let y_prev = if t == 1 {
            &zero_y
        } else if t <= traj.t_p + 1 {
            &traj.y[t - 2]
        } else {
            &y_hats[t - 2]
        };
        let e_prev_inpass;
        let e_prev: &Vector = if !warmup {
            &zero_y
        } else {
            match source {
                InnovationSource::Stored => &traj.e_stored[t - 1],
                InnovationSource::InPassDetached => {
                    if t == 1 {
                        &zero_y
                    } else {
                        e_prev_inpass = traj.y[t - 2].sub(&y_hats[t - 2])?;
                        &e_prev_inpass
                    }
                }
            }
        };
        let trace = w
            .step_traced(&state, &traj.u[t - 1], y_prev, e_prev)
            .map_err(|e| match e {
                Error::NonFinite { context, .. } => Error::NonFinite {
                    context,
                    at_step: Some(t),
                },
                other => other,
            })?;
        if !trace.y_hat.is_finite() || !trace.x.is_finite() {
            return Err(Error::NonFinite {
                context: "forward output".to_string(),
                at_step: Some(t),
            });
        }
        state = CellState {
            x: trace.x.clone(),
            c: trace.c.clone(),
        };
        y_hats.push(trace.y_hat.clone());
        steps.push(trace);
    }

    Ok((
        y_hats,
        Tape {
            steps,
            t_p: traj.t_p,
            t_f: traj.t_f,
        },
    ))
}

/// Mean squared error over the prediction horizon:
/// `(1/T_f) * Σ ||y_t - ŷ_t||²` for `t = T_p+1 .. T_p+T_f`.
/// Warmup steps contribute nothing.
pub fn loss(y_hats: &[Vector], traj: &Trajectory) -> Result<f64> {
    if traj.t_f == 0 {
        return Err(Error::InvalidArgument(
            "loss requires a prediction horizon T_f >= 1".into(),
        ));
    }
    if y_hats.len() != traj.len() {
        return Err(Error::InvalidArgument(format!(
            "got {} predictions for a trajectory of length {}",
            y_hats.len(),
            traj.len()
        )));
    }
    let mut acc = 0.0;
    for t in traj.t_p + 1..=traj.len() {
        acc += traj.y[t - 1].sub(&y_hats[t - 1])?.norm_sq();
    }
    Ok(acc / traj.t_f as f64)
}

/// Exact reverse-mode gradient of [`loss`] with respect to every parameter.
/// Stored innovations are constants; the `ŷ` feedback chain over the horizon
/// and the state recurrence over all steps are differentiated exactly.
pub fn backward(tape: &Tape, traj: &Trajectory, w: &WeightSet) -> Result<Gradients> {
    if tape.steps.len() != traj.len() || tape.t_p != traj.t_p || tape.t_f != traj.t_f {
        return Err(Error::InvalidArgument(
            "tape does not match trajectory".into(),
        ));
    }
    if traj.t_f == 0 {
        return Err(Error::InvalidArgument(
            "backward requires a prediction horizon T_f >= 1".into(),
        ));
    }
    let mut acc = WeightSet::zeros(
        w.kind,
        w.n_x,
        w.n_u,
        w.n_y,
        w.mask.clone(),
        w.hidden_activation,
    )?;
    let horizon_scale = 2.0 / traj.t_f as f64;

    let mut g_x_next = Vector::zeros(w.n_x);
    let mut g_c_next = Vector::zeros(w.n_x);
    // Gradient flowing into ŷ_{t-1} from step t's y_prev input, present when
    // step t is in the prediction phase.
    let mut pending_yhat: Option<Vector> = None;

    for t in (1..=traj.len()).rev() {
        let trace = &tape.steps[t - 1];
        let mut g_yhat = if t > traj.t_p {
            trace.y_hat.sub(&traj.y[t - 1])?.scale(horizon_scale)
        } else {
            Vector::zeros(w.n_y)
        };
        if let Some(fb) = pending_yhat.take() {
            g_yhat.add_assign(&fb)?;
        }

        // Output layer: ŷ_t = W_yx x_t + b_y.
        acc.w_yx.add_outer(&g_yhat, &trace.x)?;
        acc.b_y.add_assign(&g_yhat)?;
        let mut g_x = w.w_yx.matvec_transpose(&g_yhat)?;
        g_x.add_assign(&g_x_next)?;

        let (g_x_prev, g_c_prev, g_yprev) = backward_step(w, trace, &g_x, &g_c_next, &mut acc)?;
        g_x_next = g_x_prev;
        g_c_next = g_c_prev.unwrap_or_else(|| Vector::zeros(w.n_x));
        // Step t consumed ŷ_{t-1} as y_prev iff t is a prediction-phase step
        // past the boundary (the first one consumed the observed y_{T_p}).
        if t > traj.t_p + 1 {
            pending_yhat = Some(g_yprev);
        }
    }

    Ok(acc.flatten())
}

/// Reverse of one [`WeightSet::step_traced`] call. `g_x`/`g_c` are the loss
/// gradients with respect to this step's outputs; returns gradients with
/// respect to the incoming state and the `y_prev` input, accumulating weight
/// gradients into `acc`.
fn backward_step(
    w: &WeightSet,
    trace: &StepTrace,
    g_x: &Vector,
    g_c: &Vector,
    acc: &mut WeightSet,
) -> Result<(Vector, Option<Vector>, Vector)> {
    match w.kind.family() {
        CellFamily::Rnn => {
            let x_t = &trace.block_outputs[0];
            let d_pre = g_x.hadamard(&w.hidden_activation.derivative(x_t))?;
            accumulate_block(&mut acc.blocks[0], &d_pre, &trace.x_prev, trace)?;
            let g_x_prev = w.blocks[0].w_x.matvec_transpose(&d_pre)?;
            let g_yprev = w.blocks[0].w_y.matvec_transpose(&d_pre)?;
            Ok((g_x_prev, None, g_yprev))
        }
        CellFamily::Gru => {
            let g_r = &trace.block_outputs[0];
            let g_u = &trace.block_outputs[1];
            let cand = &trace.block_outputs[2];

            // x_t = x_prev ⊙ (1 - g_u) + cand ⊙ g_u
            let d_cand = g_x.hadamard(g_u)?;
            let d_gu = g_x.hadamard(&cand.sub(&trace.x_prev)?)?;
            let mut g_x_prev = g_x.hadamard(&g_u.map(|g| 1.0 - g))?;

            let d_pre_c = d_cand.hadamard(&Activation::Tanh.derivative(cand))?;
            let x_reset = trace.x_prev.hadamard(g_r)?;
            accumulate_block(&mut acc.blocks[2], &d_pre_c, &x_reset, trace)?;
            let back_c = w.blocks[2].w_x.matvec_transpose(&d_pre_c)?;
            g_x_prev.add_assign(&back_c.hadamard(g_r)?)?;
            let d_gr = back_c.hadamard(&trace.x_prev)?;

            let d_pre_u = d_gu.hadamard(&Activation::Sigmoid.derivative(g_u))?;
            let d_pre_r = d_gr.hadamard(&Activation::Sigmoid.derivative(g_r))?;
            accumulate_block(&mut acc.blocks[0], &d_pre_r, &trace.x_prev, trace)?;
            accumulate_block(&mut acc.blocks[1], &d_pre_u, &trace.x_prev, trace)?;
            g_x_prev.add_assign(&w.blocks[0].w_x.matvec_transpose(&d_pre_r)?)?;
            g_x_prev.add_assign(&w.blocks[1].w_x.matvec_transpose(&d_pre_u)?)?;

            let mut g_yprev = w.blocks[0].w_y.matvec_transpose(&d_pre_r)?;
            g_yprev.add_assign(&w.blocks[1].w_y.matvec_transpose(&d_pre_u)?)?;
            g_yprev.add_assign(&w.blocks[2].w_y.matvec_transpose(&d_pre_c)?)?;
            Ok((g_x_prev, None, g_yprev))
        }
        CellFamily::Lstm => {
            let g_f = &trace.block_outputs[0];
            let g_i = &trace.block_outputs[1];
            let g_o = &trace.block_outputs[2];
            let z = &trace.block_outputs[3];
            let c_prev = trace.c_prev.as_ref().expect("lstm trace has c_prev");
            let tanh_c = trace.tanh_c.as_ref().expect("lstm trace has tanh_c");

            // x_t = tanh(c_t) ⊙ g_o
            let d_go = g_x.hadamard(tanh_c)?;
            let mut d_c = g_x
                .hadamard(g_o)?
                .hadamard(&Activation::Tanh.derivative(tanh_c))?;
            d_c.add_assign(g_c)?;

            // c_t = z ⊙ g_i + c_prev ⊙ g_f
            let d_z = d_c.hadamard(g_i)?;
            let d_gi = d_c.hadamard(z)?;
            let d_gf = d_c.hadamard(c_prev)?;
            let g_c_prev = d_c.hadamard(g_f)?;

            let d_pre_f = d_gf.hadamard(&Activation::Sigmoid.derivative(g_f))?;
            let d_pre_i = d_gi.hadamard(&Activation::Sigmoid.derivative(g_i))?;
            let d_pre_o = d_go.hadamard(&Activation::Sigmoid.derivative(g_o))?;
            let d_pre_z = d_z.hadamard(&Activation::Tanh.derivative(z))?;

            let pres = [&d_pre_f, &d_pre_i, &d_pre_o, &d_pre_z];
            let mut g_x_prev = Vector::zeros(w.n_x);
            let mut g_yprev = Vector::zeros(w.n_y);
            for (idx, d_pre) in pres.iter().enumerate() {
                accumulate_block(&mut acc.blocks[idx], d_pre, &trace.x_prev, trace)?;
                g_x_prev.add_assign(&w.blocks[idx].w_x.matvec_transpose(d_pre)?)?;
                g_yprev.add_assign(&w.blocks[idx].w_y.matvec_transpose(d_pre)?)?;
            }
            Ok((g_x_prev, Some(g_c_prev), g_yprev))
        }
    }
}

fn accumulate_block(
    block: &mut crate::cells::GateBlock,
    d_pre: &Vector,
    x_in: &Vector,
    trace: &StepTrace,
) -> Result<()> {
    block.w_x.add_outer(d_pre, x_in)?;
    block.w_u.add_outer(d_pre, &trace.u)?;
    block.w_y.add_outer(d_pre, &trace.y_prev)?;
    if let Some(w_e) = &mut block.w_e {
        w_e.add_outer(d_pre, &trace.e_prev)?;
    }
    block.b.add_assign(d_pre)?;
    Ok(())
}

/// Self-consistent innovations of the warmup phase under fixed weights:
/// starting from zero state, each step consumes the innovation computed just
/// before it in the same pass, then `e_t = y_t - ŷ_t`. Returns
/// `[e_0, .., e_{T_p-1}]` with `e_0 = 0`, the refreshed contents of
/// `Trajectory::e_stored`.
pub fn self_consistent_innovations(w: &WeightSet, traj: &Trajectory) -> Result<Vec<Vector>> {
    let mut state = CellState::zeros(w.kind, w.n_x);
    let zero_y = Vector::zeros(w.n_y);
    let mut e_prev = zero_y.clone();
    let mut out = Vec::with_capacity(traj.t_p);
    for t in 1..=traj.t_p {
        out.push(e_prev.clone());
        let y_prev = if t == 1 { &zero_y } else { &traj.y[t - 2] };
        let (next, y_hat) = w.step(&state, &traj.u[t - 1], y_prev, &e_prev)?;
        state = next;
        e_prev = traj.y[t - 1].sub(&y_hat)?;
    }
    Ok(out)
}

/// Builds a reproducible random instance for gradient checking: initialized
/// weights plus a trajectory with uniform inputs/outputs in `[-1, 1)` and
/// non-trivial stored innovations (slot 0 stays pinned at zero).
pub fn gradcheck_instance(
    kind: crate::cells::CellKind,
    mask: crate::cells::InnovationMask,
    n_x: usize,
    n_u: usize,
    n_y: usize,
    t_p: usize,
    t_f: usize,
    seed: u64,
) -> Result<(WeightSet, Trajectory)> {
    use rand::Rng;
    use rand::SeedableRng;
    let w = crate::cells::init_weights(kind, n_x, n_u, n_y, mask, Activation::Tanh, seed)?;
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed ^ 0x5DEECE66D);
    let mut draw = |dim: usize| {
        Vector::from(
            (0..dim)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect::<Vec<f64>>(),
        )
    };
    let t = t_p + t_f;
    let u = (0..t).map(|_| draw(n_u)).collect();
    let y = (0..t).map(|_| draw(n_y)).collect();
    let mut traj = Trajectory::new(u, y, t_p, t_f)?;
    for e in traj.e_stored.iter_mut().skip(1) {
        *e = draw(n_y).scale(0.3);
    }
    Ok((w, traj))
}

/// One entry of a gradient-check report.
#[derive(Debug, Clone, Serialize)]
pub struct GradCheckEntry {
    pub index: usize,
    pub label: String,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
    /// True when both gradients are numerically zero; such loss-invariant
    /// directions are excluded from the max/mean statistics.
    pub both_zero: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    pub checked: usize,
    pub skipped: usize,
}

impl GradCheckReport {
    pub fn worst(&self) -> Option<&GradCheckEntry> {
        self.entries
            .iter()
            .filter(|e| !e.both_zero)
            .max_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
    }
}

/// Compares [`backward`] against central finite differences
/// `(ℓ(θ+h) - ℓ(θ-h)) / 2h` per parameter. The relative error denominator is
/// `max(|analytic|, |numeric|, 1e-8)`.
pub fn grad_check(
    w: &WeightSet,
    traj: &Trajectory,
    source: InnovationSource,
    h: f64,
) -> Result<GradCheckReport> {
    if !(1e-7..=1e-3).contains(&h) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step {h:e} outside [1e-7, 1e-3]"
        )));
    }
    // Under the in-pass reading the innovations still count as constants, so
    // the finite-difference oracle must hold them at their base-parameter
    // values: materialize them once and check in stored mode.
    let mut pinned;
    let traj = match source {
        InnovationSource::Stored => traj,
        InnovationSource::InPassDetached => {
            pinned = traj.clone();
            pinned.e_stored = self_consistent_innovations(w, traj)?;
            &pinned
        }
    };
    let source = InnovationSource::Stored;
    let (y_hats, tape) = forward(w, traj, source)?;
    let _ = loss(&y_hats, traj)?;
    let analytic = backward(&tape, traj, w)?;
    let labels = w.param_labels();

    let mut flat = w.flatten();
    let mut entries = Vec::with_capacity(flat.len());
    let mut max_rel = 0.0f64;
    let mut sum_rel = 0.0f64;
    let mut checked = 0usize;
    let mut skipped = 0usize;

    let mut scratch = w.clone();
    for i in 0..flat.len() {
        let orig = flat[i];
        flat[i] = orig + h;
        scratch.assign_flat(&flat)?;
        let (yp, _) = forward(&scratch, traj, source)?;
        let lp = loss(&yp, traj)?;
        flat[i] = orig - h;
        scratch.assign_flat(&flat)?;
        let (ym, _) = forward(&scratch, traj, source)?;
        let lm = loss(&ym, traj)?;
        flat[i] = orig;

        let numeric = (lp - lm) / (2.0 * h);
        let a = analytic[i];
        let both_zero = a.abs() < 1e-12 && numeric.abs() < 1e-12;
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        if both_zero {
            skipped += 1;
        } else {
            checked += 1;
            max_rel = max_rel.max(rel);
            sum_rel += rel;
        }
        entries.push(GradCheckEntry {
            index: i,
            label: labels[i].clone(),
            analytic: a,
            numeric,
            rel_error: rel,
            both_zero,
        });
    }
    scratch.assign_flat(&flat)?;

    Ok(GradCheckReport {
        entries,
        max_rel_error: max_rel,
        mean_rel_error: if checked > 0 { sum_rel / checked as f64 } else { 0.0 },
        checked,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::{init_weights, CellKind, InnovationMask, WeightSet};
    use crate::numerics::Activation;

    fn random_inputs(n_u: usize, n_y: usize, t: usize, seed: u64) -> (Vec<Vector>, Vec<Vector>) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let u = (0..t)
            .map(|_| Vector::from((0..n_u).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>()))
            .collect();
        let y = (0..t)
            .map(|_| Vector::from((0..n_y).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>()))
            .collect();
        (u, y)
    }

    #[test]
    fn zero_weights_forward_is_zero_both_phases() {
        let w = WeightSet::zeros(
            CellKind::Irnn,
            3,
            2,
            1,
            InnovationMask::full(CellKind::Irnn),
            Activation::Tanh,
        )
        .unwrap();
        let (u, y) = random_inputs(2, 1, 6, 1);
        let traj = Trajectory::new(u, y, 4, 2).unwrap();
        let (y_hats, _) = forward(&w, &traj, InnovationSource::Stored).unwrap();
        for y_hat in &y_hats {
            assert_eq!(y_hat.data(), &[0.0]);
        }
    }

    #[test]
    fn zero_horizon_forward_is_teacher_forced_only() {
        let w = init_weights(
            CellKind::Irnn,
            3,
            2,
            1,
            InnovationMask::full(CellKind::Irnn),
            Activation::Tanh,
            3,
        )
        .unwrap();
        let (u, y) = random_inputs(2, 1, 4, 2);
        let traj = Trajectory::new(u, y, 4, 0).unwrap();
        let (y_hats, _) = forward(&w, &traj, InnovationSource::Stored).unwrap();
        assert_eq!(y_hats.len(), 4);
        assert!(loss(&y_hats, &traj).is_err());
    }

    /// Straight-line scalar-loop re-implementation of the IRNN recurrence,
    /// independent of the cell/step machinery.
    fn irnn_reference(w: &WeightSet, traj: &Trajectory) -> Vec<Vec<f64>> {
        let (n_x, n_y) = (w.n_x, w.n_y);
        let b = &w.blocks[0];
        let mut x = vec![0.0; n_x];
        let mut y_hats: Vec<Vec<f64>> = Vec::new();
        for t in 1..=traj.len() {
            let warmup = t <= traj.t_p;
            let y_prev: Vec<f64> = if t == 1 {
                vec![0.0; n_y]
            } else if t <= traj.t_p + 1 {
                traj.y[t - 2].data().to_vec()
            } else {
                y_hats[t - 2].clone()
            };
            let e_prev: Vec<f64> = if warmup {
                traj.e_stored[t - 1].data().to_vec()
            } else {
                vec![0.0; n_y]
            };
            let mut x_new = vec![0.0; n_x];
            for i in 0..n_x {
                let mut pre = 0.0;
                for j in 0..n_x {
                    pre += b.w_x.get(i, j) * x[j];
                }
                for j in 0..w.n_u {
                    pre += b.w_u.get(i, j) * traj.u[t - 1].get(j);
                }
                for j in 0..n_y {
                    pre += b.w_y.get(i, j) * y_prev[j];
                }
                if let Some(w_e) = &b.w_e {
                    for j in 0..n_y {
                        pre += w_e.get(i, j) * e_prev[j];
                    }
                }
                pre += b.b.get(i);
                x_new[i] = pre.tanh();
            }
            x = x_new;
            let mut y_hat = vec![0.0; n_y];
            for i in 0..n_y {
                let mut acc = 0.0;
                for j in 0..n_x {
                    acc += w.w_yx.get(i, j) * x[j];
                }
                y_hat[i] = acc + w.b_y.get(i);
            }
            y_hats.push(y_hat);
        }
        y_hats
    }

    #[test]
    fn forward_matches_scalar_reference() {
        let w = init_weights(
            CellKind::Irnn,
            3,
            2,
            1,
            InnovationMask::full(CellKind::Irnn),
            Activation::Tanh,
            17,
        )
        .unwrap();
        let (u, y) = random_inputs(2, 1, 6, 23);
        let mut traj = Trajectory::new(u, y, 4, 2).unwrap();
        // non-trivial stored innovations, except the pinned e_0 slot
        for (i, e) in traj.e_stored.iter_mut().enumerate().skip(1) {
            *e = Vector::from_slice(&[0.1 * i as f64]);
        }
        let (y_hats, _) = forward(&w, &traj, InnovationSource::Stored).unwrap();
        let reference = irnn_reference(&w, &traj);
        for (got, want) in y_hats.iter().zip(&reference) {
            for (a, b) in got.data().iter().zip(want) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn loss_examples() {
        let y = vec![Vector::from_slice(&[1.0]), Vector::from_slice(&[2.0]), Vector::from_slice(&[3.0])];
        let u = vec![Vector::zeros(1); 3];
        let traj = Trajectory::new(u, y, 1, 2).unwrap();
        // perfect horizon
        let y_hats = vec![
            Vector::from_slice(&[0.0]),
            Vector::from_slice(&[2.0]),
            Vector::from_slice(&[3.0]),
        ];
        assert_eq!(loss(&y_hats, &traj).unwrap(), 0.0);
        // horizon errors (1, 0) => 0.5
        let y_hats = vec![
            Vector::from_slice(&[9.0]),
            Vector::from_slice(&[1.0]),
            Vector::from_slice(&[3.0]),
        ];
        assert!((loss(&y_hats, &traj).unwrap() - 0.5).abs() < 1e-15);

        // n_y = 2, T_f = 1, error (3,4) => 25
        let y = vec![Vector::zeros(2), Vector::from_slice(&[3.0, 4.0])];
        let u = vec![Vector::zeros(1); 2];
        let traj = Trajectory::new(u, y, 1, 1).unwrap();
        let y_hats = vec![Vector::zeros(2), Vector::zeros(2)];
        assert!((loss(&y_hats, &traj).unwrap() - 25.0).abs() < 1e-15);
    }

    #[test]
    fn zero_error_trajectory_has_zero_gradient() {
        // All-zero weights predict 0; make the horizon targets 0 too.
        let w = WeightSet::zeros(
            CellKind::Igru,
            3,
            2,
            1,
            InnovationMask::full(CellKind::Igru),
            Activation::Tanh,
        )
        .unwrap();
        let (u, mut y) = random_inputs(2, 1, 6, 5);
        for t in 4..6 {
            y[t] = Vector::zeros(1);
        }
        let traj = Trajectory::new(u, y, 4, 2).unwrap();
        let (y_hats, tape) = forward(&w, &traj, InnovationSource::Stored).unwrap();
        assert!((loss(&y_hats, &traj).unwrap()).abs() < 1e-30);
        let g = backward(&tape, &traj, &w).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn grad_check_passes_for_random_tiny_irnn() {
        let w = init_weights(
            CellKind::Irnn,
            4,
            2,
            1,
            InnovationMask::full(CellKind::Irnn),
            Activation::Tanh,
            99,
        )
        .unwrap();
        let (u, y) = random_inputs(2, 1, 7, 100);
        let mut traj = Trajectory::new(u, y, 4, 3).unwrap();
        for (i, e) in traj.e_stored.iter_mut().enumerate().skip(1) {
            *e = Vector::from_slice(&[0.05 * i as f64]);
        }
        let report = grad_check(&w, &traj, InnovationSource::Stored, 1e-5).unwrap();
        assert!(
            report.max_rel_error < 1e-4,
            "max rel error {} at {:?}",
            report.max_rel_error,
            report.worst().map(|e| &e.label)
        );
    }

    #[test]
    fn grad_check_passes_for_random_tiny_ilstm() {
        let w = init_weights(
            CellKind::Ilstm,
            4,
            2,
            1,
            InnovationMask::full(CellKind::Ilstm),
            Activation::Tanh,
            7,
        )
        .unwrap();
        let (u, y) = random_inputs(2, 1, 7, 8);
        let traj = Trajectory::new(u, y, 4, 3).unwrap();
        let report = grad_check(&w, &traj, InnovationSource::Stored, 1e-5).unwrap();
        assert!(report.max_rel_error < 1e-4, "{}", report.max_rel_error);
    }

    #[test]
    fn grad_check_flags_all_zero_directions() {
        let w = WeightSet::zeros(
            CellKind::Irnn,
            2,
            1,
            1,
            InnovationMask::full(CellKind::Irnn),
            Activation::Tanh,
        )
        .unwrap();
        let (u, mut y) = random_inputs(1, 1, 4, 12);
        for t in 2..4 {
            y[t] = Vector::zeros(1);
        }
        let traj = Trajectory::new(u, y, 2, 2).unwrap();
        let report = grad_check(&w, &traj, InnovationSource::Stored, 1e-5).unwrap();
        assert!(report.skipped > 0);
        assert!(report.entries.iter().all(|e| e.both_zero || e.rel_error < 1e-4));
    }

    #[test]
    fn corrupted_gradient_is_detected_and_named() {
        let w = init_weights(
            CellKind::Irnn,
            3,
            2,
            1,
            InnovationMask::full(CellKind::Irnn),
            Activation::Tanh,
            31,
        )
        .unwrap();
        let (u, y) = random_inputs(2, 1, 6, 32);
        let traj = Trajectory::new(u, y, 4, 2).unwrap();
        let report = grad_check(&w, &traj, InnovationSource::Stored, 1e-5).unwrap();

        // Corrupt one analytic entry by negation and recompute its rel error
        // the way the report does.
        let victim = report
            .entries
            .iter()
            .find(|e| e.analytic.abs() > 1e-3)
            .expect("some entry with a solid gradient");
        let corrupted = -victim.analytic;
        let rel = (corrupted - victim.numeric).abs()
            / corrupted.abs().max(victim.numeric.abs()).max(1e-8);
        assert!((rel - 2.0).abs() < 0.01, "rel={rel} for {}", victim.label);
        assert!(!victim.label.is_empty());
    }

    #[test]
    fn in_pass_detached_source_also_grad_checks() {
        let w = init_weights(
            CellKind::Igru,
            3,
            2,
            1,
            InnovationMask::full(CellKind::Igru),
            Activation::Tanh,
            41,
        )
        .unwrap();
        let (u, y) = random_inputs(2, 1, 6, 42);
        let traj = Trajectory::new(u, y, 4, 2).unwrap();
        let report = grad_check(&w, &traj, InnovationSource::InPassDetached, 1e-5).unwrap();
        assert!(report.max_rel_error < 1e-4, "{}", report.max_rel_error);
    }
}
