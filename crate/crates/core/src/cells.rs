//! Single-step forward recurrences for the six cell kinds.
//!
//! Innovation-bearing kinds (IRNN, IGRU, ILSTM) consume the previous
//! prediction error `e_{t-1}` as an extra input to selected sub-modules;
//! vanilla kinds (RNN, GRU, LSTM) are the same recurrences without it.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Activation, Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Rnn,
    Irnn,
    Gru,
    Igru,
    Lstm,
    Ilstm,
}

/// Structural family shared by a vanilla cell and its innovation-driven twin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellFamily {
    Rnn,
    Gru,
    Lstm,
}

impl CellKind {
    pub fn family(self) -> CellFamily {
        match self {
            CellKind::Rnn | CellKind::Irnn => CellFamily::Rnn,
            CellKind::Gru | CellKind::Igru => CellFamily::Gru,
            CellKind::Lstm | CellKind::Ilstm => CellFamily::Lstm,
        }
    }

    pub fn has_innovation(self) -> bool {
        matches!(self, CellKind::Irnn | CellKind::Igru | CellKind::Ilstm)
    }

    /// The vanilla counterpart (identity for vanilla kinds).
    pub fn vanilla(self) -> CellKind {
        match self.family() {
            CellFamily::Rnn => CellKind::Rnn,
            CellFamily::Gru => CellKind::Gru,
            CellFamily::Lstm => CellKind::Lstm,
        }
    }

    /// Names of the sub-modules that can receive innovations, in block order.
    pub fn module_names(self) -> &'static [&'static str] {
        match self.family() {
            CellFamily::Rnn => &["hidden"],
            CellFamily::Gru => &["reset", "update", "candidate"],
            CellFamily::Lstm => &["forget", "input", "output", "cell"],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CellKind::Rnn => "rnn",
            CellKind::Irnn => "irnn",
            CellKind::Gru => "gru",
            CellKind::Igru => "igru",
            CellKind::Lstm => "lstm",
            CellKind::Ilstm => "ilstm",
        }
    }

    pub fn parse(s: &str) -> Result<CellKind> {
        match s.to_ascii_lowercase().as_str() {
            "rnn" => Ok(CellKind::Rnn),
            "irnn" => Ok(CellKind::Irnn),
            "gru" => Ok(CellKind::Gru),
            "igru" => Ok(CellKind::Igru),
            "lstm" => Ok(CellKind::Lstm),
            "ilstm" => Ok(CellKind::Ilstm),
            other => Err(Error::InvalidArgument(format!("unknown cell kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for CellKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-sub-module switches controlling which blocks receive the innovation
/// input. All-true reproduces the full innovation-driven cells; all-false
/// makes the forward map identical to the vanilla counterpart.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct InnovationMask {
    flags: Vec<bool>,
}

impl InnovationMask {
    pub fn full(kind: CellKind) -> Self {
        InnovationMask {
            flags: vec![true; kind.module_names().len()],
        }
    }

    pub fn empty(kind: CellKind) -> Self {
        InnovationMask {
            flags: vec![false; kind.module_names().len()],
        }
    }

    /// Full mask with one named module switched off.
    pub fn without(kind: CellKind, module: &str) -> Result<Self> {
        let mut mask = Self::full(kind);
        mask.set(kind, module, false)?;
        Ok(mask)
    }

    /// Empty mask with one named module switched on.
    pub fn only(kind: CellKind, module: &str) -> Result<Self> {
        let mut mask = Self::empty(kind);
        mask.set(kind, module, true)?;
        Ok(mask)
    }

    pub fn set(&mut self, kind: CellKind, module: &str, value: bool) -> Result<()> {
        let names = kind.module_names();
        match names.iter().position(|n| *n == module) {
            Some(i) => {
                self.flags[i] = value;
                Ok(())
            }
            None => Err(Error::InvalidArgument(format!(
                "cell kind '{}' has no module '{}' (available: {})",
                kind,
                module,
                names.join(", ")
            ))),
        }
    }

    /// Rebuilds a mask from raw flags, validating the arity for the kind.
    pub fn from_flags(kind: CellKind, flags: Vec<bool>) -> Result<Self> {
        let expected = kind.module_names().len();
        if flags.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "cell kind '{}' needs {} mask flags, got {}",
                kind,
                expected,
                flags.len()
            )));
        }
        Ok(InnovationMask { flags })
    }

    pub fn enabled(&self, block: usize) -> bool {
        self.flags.get(block).copied().unwrap_or(false)
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn describe(&self, kind: CellKind) -> String {
        kind.module_names()
            .iter()
            .zip(&self.flags)
            .map(|(n, f)| format!("{n}={}", if *f { "on" } else { "off" }))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// One fully-connected sub-module: `pre = W_x*x + W_u*u + W_y*y_prev
/// [+ W_e*e_prev] + b`. Reused for the IRNN hidden update, the GRU
/// reset/update gates and candidate, and the LSTM gates and cell candidate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateBlock {
    pub w_x: Matrix,
    pub w_u: Matrix,
    pub w_y: Matrix,
    pub w_e: Option<Matrix>,
    pub b: Vector,
}

impl GateBlock {
    fn zeros(n_x: usize, n_u: usize, n_y: usize, with_innovation: bool) -> Self {
        GateBlock {
            w_x: Matrix::zeros(n_x, n_x),
            w_u: Matrix::zeros(n_x, n_u),
            w_y: Matrix::zeros(n_x, n_y),
            w_e: with_innovation.then(|| Matrix::zeros(n_x, n_y)),
            b: Vector::zeros(n_x),
        }
    }

    /// Pre-activation sum; `x_in` is the recurrent input after any gating
    /// (for the GRU candidate this is `x_{t-1} ⊙ g_r`).
    fn pre_activation(&self, x_in: &Vector, u: &Vector, y_prev: &Vector, e_prev: &Vector) -> Result<Vector> {
        let mut pre = self.w_x.matvec(x_in)?;
        pre.add_assign(&self.w_u.matvec(u)?)?;
        pre.add_assign(&self.w_y.matvec(y_prev)?)?;
        if let Some(w_e) = &self.w_e {
            pre.add_assign(&w_e.matvec(e_prev)?)?;
        }
        pre.add_assign(&self.b)?;
        Ok(pre)
    }

    fn param_count(&self) -> usize {
        let mut n = self.w_x.rows() * self.w_x.cols()
            + self.w_u.rows() * self.w_u.cols()
            + self.w_y.rows() * self.w_y.cols()
            + self.b.dim();
        if let Some(w_e) = &self.w_e {
            n += w_e.rows() * w_e.cols();
        }
        n
    }
}

/// All weight matrices and biases of one cell, plus the structural metadata
/// needed to interpret them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightSet {
    pub kind: CellKind,
    pub n_x: usize,
    pub n_u: usize,
    pub n_y: usize,
    pub mask: InnovationMask,
    /// Activation of the RNN/IRNN hidden update (gated kinds fix their
    /// activations to sigmoid gates and tanh candidates).
    pub hidden_activation: Activation,
    /// Sub-module blocks in fixed order: RNN `[hidden]`,
    /// GRU `[reset, update, candidate]`, LSTM `[forget, input, output, cell]`.
    pub blocks: Vec<GateBlock>,
    pub w_yx: Matrix,
    pub b_y: Vector,
}

/// Recurrent state carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub x: Vector,
    /// LSTM cell state; `None` for other families.
    pub c: Option<Vector>,
}

impl CellState {
    pub fn zeros(kind: CellKind, n_x: usize) -> Self {
        CellState {
            x: Vector::zeros(n_x),
            c: matches!(kind.family(), CellFamily::Lstm).then(|| Vector::zeros(n_x)),
        }
    }
}

/// Everything recorded during one forward step that backward needs.
#[derive(Debug, Clone)]
pub struct StepTrace {
    pub x_prev: Vector,
    pub c_prev: Option<Vector>,
    pub u: Vector,
    pub y_prev: Vector,
    pub e_prev: Vector,
    /// Activated block outputs in block order: RNN `[x_t]`,
    /// GRU `[g_r, g_u, x']`, LSTM `[g_f, g_i, g_o, z]`.
    pub block_outputs: Vec<Vector>,
    pub c: Option<Vector>,
    pub tanh_c: Option<Vector>,
    pub x: Vector,
    pub y_hat: Vector,
}

impl WeightSet {
    /// All-zero weights with the layout implied by (kind, mask).
    /// Vanilla kinds never carry innovation matrices regardless of the mask.
    pub fn zeros(
        kind: CellKind,
        n_x: usize,
        n_u: usize,
        n_y: usize,
        mask: InnovationMask,
        hidden_activation: Activation,
    ) -> Result<Self> {
        if n_x == 0 || n_u == 0 || n_y == 0 {
            return Err(Error::InvalidArgument(format!(
                "dimensions must be positive, got n_x={n_x}, n_u={n_u}, n_y={n_y}"
            )));
        }
        if mask.flags().len() != kind.module_names().len() {
            return Err(Error::InvalidArgument(format!(
                "mask has {} flags but cell kind '{}' has {} modules",
                mask.flags().len(),
                kind,
                kind.module_names().len()
            )));
        }
        let effective = if kind.has_innovation() {
            mask
        } else {
            InnovationMask::empty(kind)
        };
        let blocks = (0..kind.module_names().len())
            .map(|i| GateBlock::zeros(n_x, n_u, n_y, kind.has_innovation() && effective.enabled(i)))
            .collect();
        Ok(WeightSet {
            kind,
            n_x,
            n_u,
            n_y,
            mask: effective,
            hidden_activation,
            blocks,
            w_yx: Matrix::zeros(n_y, n_x),
            b_y: Vector::zeros(n_y),
        })
    }

    /// Number of scalar parameters (for the parameter-count comparison
    /// between vanilla and innovation-driven cells).
    pub fn param_count(&self) -> usize {
        self.blocks.iter().map(|b| b.param_count()).sum::<usize>()
            + self.w_yx.rows() * self.w_yx.cols()
            + self.b_y.dim()
    }

    /// Vanilla twin sharing every non-innovation weight.
    pub fn to_vanilla(&self) -> WeightSet {
        let mut w = self.clone();
        w.kind = self.kind.vanilla();
        w.mask = InnovationMask::empty(w.kind);
        for block in &mut w.blocks {
            block.w_e = None;
        }
        w
    }

    fn check_inputs(&self, u: &Vector, y_prev: &Vector, e_prev: &Vector, s: &CellState) -> Result<()> {
        if u.dim() != self.n_u {
            return Err(Error::shape("step", "input u", format!("{}", u.dim()), "expected", format!("{}", self.n_u)));
        }
        if y_prev.dim() != self.n_y {
            return Err(Error::shape("step", "y_prev", format!("{}", y_prev.dim()), "expected", format!("{}", self.n_y)));
        }
        if e_prev.dim() != self.n_y {
            return Err(Error::shape("step", "e_prev", format!("{}", e_prev.dim()), "expected", format!("{}", self.n_y)));
        }
        if s.x.dim() != self.n_x {
            return Err(Error::shape("step", "state x", format!("{}", s.x.dim()), "expected", format!("{}", self.n_x)));
        }
        for (name, v) in [("u", u), ("y_prev", y_prev), ("e_prev", e_prev), ("x", &s.x)] {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("step input {name}"),
                    at_step: None,
                });
            }
        }
        if let Some(c) = &s.c {
            if !c.is_finite() {
                return Err(Error::NonFinite {
                    context: "step input c".to_string(),
                    at_step: None,
                });
            }
        }
        Ok(())
    }

    /// One forward step. Vanilla kinds ignore `e_prev` (their blocks carry no
    /// innovation matrix). Returns the new state and the prediction `ŷ_t`.
    pub fn step(
        &self,
        s: &CellState,
        u_t: &Vector,
        y_prev: &Vector,
        e_prev: &Vector,
    ) -> Result<(CellState, Vector)> {
        let trace = self.step_traced(s, u_t, y_prev, e_prev)?;
        Ok((
            CellState {
                x: trace.x,
                c: trace.c,
            },
            trace.y_hat,
        ))
    }

    /// Forward step that records every intermediate for reverse mode.
    pub fn step_traced(
        &self,
        s: &CellState,
        u_t: &Vector,
        y_prev: &Vector,
        e_prev: &Vector,
    ) -> Result<StepTrace> {
        self.check_inputs(u_t, y_prev, e_prev, s)?;
        match self.kind.family() {
            CellFamily::Rnn => {
                let pre = self.blocks[0].pre_activation(&s.x, u_t, y_prev, e_prev)?;
                let x = self.hidden_activation.eval(&pre);
                let y_hat = self.w_yx.matvec(&x)?.add(&self.b_y)?;
                Ok(StepTrace {
                    x_prev: s.x.clone(),
                    c_prev: None,
                    u: u_t.clone(),
                    y_prev: y_prev.clone(),
                    e_prev: e_prev.clone(),
                    block_outputs: vec![x.clone()],
                    c: None,
                    tanh_c: None,
                    x,
                    y_hat,
                })
            }
            CellFamily::Gru => {
                let g_r = Activation::Sigmoid
                    .eval(&self.blocks[0].pre_activation(&s.x, u_t, y_prev, e_prev)?);
                let g_u = Activation::Sigmoid
                    .eval(&self.blocks[1].pre_activation(&s.x, u_t, y_prev, e_prev)?);
                let x_reset = s.x.hadamard(&g_r)?;
                let cand = Activation::Tanh
                    .eval(&self.blocks[2].pre_activation(&x_reset, u_t, y_prev, e_prev)?);
                // x_t = x_{t-1} ⊙ (1 - g_u) + x' ⊙ g_u
                let keep = s.x.hadamard(&g_u.map(|g| 1.0 - g))?;
                let x = keep.add(&cand.hadamard(&g_u)?)?;
                let y_hat = self.w_yx.matvec(&x)?.add(&self.b_y)?;
                Ok(StepTrace {
                    x_prev: s.x.clone(),
                    c_prev: None,
                    u: u_t.clone(),
                    y_prev: y_prev.clone(),
                    e_prev: e_prev.clone(),
                    block_outputs: vec![g_r, g_u, cand],
                    c: None,
                    tanh_c: None,
                    x,
                    y_hat,
                })
            }
            CellFamily::Lstm => {
                let c_prev = s
                    .c
                    .as_ref()
                    .ok_or_else(|| Error::InvalidArgument("LSTM state missing cell vector".into()))?;
                let g_f = Activation::Sigmoid
                    .eval(&self.blocks[0].pre_activation(&s.x, u_t, y_prev, e_prev)?);
                let g_i = Activation::Sigmoid
                    .eval(&self.blocks[1].pre_activation(&s.x, u_t, y_prev, e_prev)?);
                let g_o = Activation::Sigmoid
                    .eval(&self.blocks[2].pre_activation(&s.x, u_t, y_prev, e_prev)?);
                let z = Activation::Tanh
                    .eval(&self.blocks[3].pre_activation(&s.x, u_t, y_prev, e_prev)?);
                let c = z.hadamard(&g_i)?.add(&c_prev.hadamard(&g_f)?)?;
                let tanh_c = Activation::Tanh.eval(&c);
                let x = tanh_c.hadamard(&g_o)?;
                let y_hat = self.w_yx.matvec(&x)?.add(&self.b_y)?;
                Ok(StepTrace {
                    x_prev: s.x.clone(),
                    c_prev: Some(c_prev.clone()),
                    u: u_t.clone(),
                    y_prev: y_prev.clone(),
                    e_prev: e_prev.clone(),
                    block_outputs: vec![g_f, g_i, g_o, z],
                    c: Some(c.clone()),
                    tanh_c: Some(tanh_c),
                    x,
                    y_hat,
                })
            }
        }
    }

    /// Flattened parameter view with a fixed, documented ordering:
    /// for each block in block order `[w_x, w_u, w_y, w_e?, b]` row-major,
    /// then `w_yx` row-major, then `b_y`. Ordering version "flat-v1".
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for block in &self.blocks {
            out.extend_from_slice(block.w_x.data());
            out.extend_from_slice(block.w_u.data());
            out.extend_from_slice(block.w_y.data());
            if let Some(w_e) = &block.w_e {
                out.extend_from_slice(w_e.data());
            }
            out.extend_from_slice(block.b.data());
        }
        out.extend_from_slice(self.w_yx.data());
        out.extend_from_slice(self.b_y.data());
        out
    }

    /// Inverse of [`flatten`](Self::flatten); the round trip is exact.
    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::InvalidArgument(format!(
                "flat parameter vector has length {}, expected {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut pos = 0;
        let mut take = |dst: &mut [f64]| {
            dst.copy_from_slice(&flat[pos..pos + dst.len()]);
            pos += dst.len();
        };
        for block in &mut self.blocks {
            take(block.w_x.data_mut());
            take(block.w_u.data_mut());
            take(block.w_y.data_mut());
            if let Some(w_e) = &mut block.w_e {
                take(w_e.data_mut());
            }
            take(block.b.data_mut());
        }
        take(self.w_yx.data_mut());
        take(self.b_y.data_mut());
        Ok(())
    }

    /// Human-readable labels aligned with the flattened ordering; used by the
    /// gradient-check report to name offending entries.
    pub fn param_labels(&self) -> Vec<String> {
        let mut labels = Vec::with_capacity(self.param_count());
        let names = self.kind.module_names();
        let push_matrix = |labels: &mut Vec<String>, name: String, m: &Matrix| {
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    labels.push(format!("{name}[{i},{j}]"));
                }
            }
        };
        for (block, name) in self.blocks.iter().zip(names) {
            push_matrix(&mut labels, format!("{name}.w_x"), &block.w_x);
            push_matrix(&mut labels, format!("{name}.w_u"), &block.w_u);
            push_matrix(&mut labels, format!("{name}.w_y"), &block.w_y);
            if let Some(w_e) = &block.w_e {
                push_matrix(&mut labels, format!("{name}.w_e"), w_e);
            }
            for i in 0..block.b.dim() {
                labels.push(format!("{name}.b[{i}]"));
            }
        }
        push_matrix(&mut labels, "w_yx".to_string(), &self.w_yx);
        for i in 0..self.b_y.dim() {
            labels.push(format!("b_y[{i}]"));
        }
        labels
    }
}

/// Innovation `e_t = y_t - ŷ_t`.
pub fn compute_innovation(y_t: &Vector, y_hat_t: &Vector) -> Result<Vector> {
    y_t.sub(y_hat_t)
}

/// Scaled-uniform initialization: each matrix entry drawn from
/// `U[-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))]`, biases zero.
/// Deterministic given the seed; matrices are filled in flatten order.
pub fn init_weights(
    kind: CellKind,
    n_x: usize,
    n_u: usize,
    n_y: usize,
    mask: InnovationMask,
    hidden_activation: Activation,
    seed: u64,
) -> Result<WeightSet> {
    let mut w = WeightSet::zeros(kind, n_x, n_u, n_y, mask, hidden_activation)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let fill = |m: &mut Matrix, rng: &mut ChaCha20Rng| {
        let limit = (6.0 / (m.rows() + m.cols()) as f64).sqrt();
        for v in m.data_mut() {
            *v = rng.gen_range(-limit..=limit);
        }
    };
    for block in &mut w.blocks {
        fill(&mut block.w_x, &mut rng);
        fill(&mut block.w_u, &mut rng);
        fill(&mut block.w_y, &mut rng);
        if let Some(w_e) = &mut block.w_e {
            fill(w_e, &mut rng);
        }
        // biases stay zero
    }
    fill(&mut w.w_yx, &mut rng);
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_weights(kind: CellKind) -> WeightSet {
        WeightSet::zeros(kind, 1, 1, 1, InnovationMask::full(kind), Activation::Tanh).unwrap()
    }

    #[test]
    fn irnn_zero_weight_fixed_point() {
        let w = zero_weights(CellKind::Irnn);
        let s = CellState::zeros(CellKind::Irnn, 1);
        let (s2, y_hat) = w
            .step(
                &s,
                &Vector::from_slice(&[0.7]),
                &Vector::from_slice(&[0.3]),
                &Vector::from_slice(&[-0.2]),
            )
            .unwrap();
        assert_eq!(s2.x.data(), &[0.0]);
        assert_eq!(y_hat.data(), &[0.0]);
    }

    #[test]
    fn igru_zero_weights_halves_state() {
        // Sigmoid(0) = 0.5, Tanh(0) = 0, so x_t = 0.8 * (1 - 0.5) = 0.4.
        let w = zero_weights(CellKind::Igru);
        let s = CellState {
            x: Vector::from_slice(&[0.8]),
            c: None,
        };
        let (s2, _) = w
            .step(&s, &Vector::zeros(1), &Vector::zeros(1), &Vector::zeros(1))
            .unwrap();
        assert!((s2.x.get(0) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn ilstm_zero_weights_from_unit_cell() {
        // All gates 0.5, candidate 0 => c_t = 0.5, x_t = tanh(0.5) * 0.5.
        let w = zero_weights(CellKind::Ilstm);
        let s = CellState {
            x: Vector::zeros(1),
            c: Some(Vector::from_slice(&[1.0])),
        };
        let (s2, _) = w
            .step(&s, &Vector::zeros(1), &Vector::zeros(1), &Vector::zeros(1))
            .unwrap();
        assert!((s2.c.as_ref().unwrap().get(0) - 0.5).abs() < 1e-15);
        // Independent high-precision value of tanh(0.5) * 0.5.
        let expected = 0.46211715726000974_f64 * 0.5;
        assert!((s2.x.get(0) - expected).abs() < 1e-14);
        assert!((s2.x.get(0) - 0.23106).abs() < 1e-5);
    }

    #[test]
    fn innovation_subtraction() {
        let e = compute_innovation(&Vector::from_slice(&[2.0]), &Vector::from_slice(&[2.0])).unwrap();
        assert_eq!(e.data(), &[0.0]);
        let e = compute_innovation(&Vector::from_slice(&[1.0]), &Vector::from_slice(&[0.3])).unwrap();
        assert!((e.get(0) - 0.7).abs() < 1e-15);
        let e = compute_innovation(
            &Vector::from_slice(&[0.0, 1.0]),
            &Vector::from_slice(&[1.0, 0.0]),
        )
        .unwrap();
        assert_eq!(e.data(), &[-1.0, 1.0]);
    }

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let a = init_weights(
            CellKind::Ilstm,
            5,
            3,
            2,
            InnovationMask::full(CellKind::Ilstm),
            Activation::Tanh,
            42,
        )
        .unwrap();
        let b = init_weights(
            CellKind::Ilstm,
            5,
            3,
            2,
            InnovationMask::full(CellKind::Ilstm),
            Activation::Tanh,
            42,
        )
        .unwrap();
        assert_eq!(a.flatten(), b.flatten());
        for block in &a.blocks {
            assert!(block.b.data().iter().all(|v| *v == 0.0));
        }
        assert!(a.b_y.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn init_respects_fan_bound() {
        let w = init_weights(
            CellKind::Irnn,
            128,
            6,
            1,
            InnovationMask::full(CellKind::Irnn),
            Activation::Tanh,
            7,
        )
        .unwrap();
        let bound = (6.0 / 256.0_f64).sqrt();
        assert!((bound - 0.15309).abs() < 1e-5);
        for v in w.blocks[0].w_x.data() {
            assert!(v.abs() <= bound);
        }
    }

    #[test]
    fn init_rejects_zero_dims() {
        assert!(init_weights(
            CellKind::Rnn,
            0,
            1,
            1,
            InnovationMask::empty(CellKind::Rnn),
            Activation::Tanh,
            0
        )
        .is_err());
    }

    #[test]
    fn flatten_roundtrip_exact() {
        let w = init_weights(
            CellKind::Igru,
            4,
            2,
            3,
            InnovationMask::without(CellKind::Igru, "update").unwrap(),
            Activation::Tanh,
            11,
        )
        .unwrap();
        let flat = w.flatten();
        assert_eq!(flat.len(), w.param_count());
        let mut w2 = WeightSet::zeros(
            CellKind::Igru,
            4,
            2,
            3,
            InnovationMask::without(CellKind::Igru, "update").unwrap(),
            Activation::Tanh,
        )
        .unwrap();
        w2.assign_flat(&flat).unwrap();
        assert_eq!(w2.flatten(), flat);
        assert_eq!(w.param_labels().len(), flat.len());
    }

    #[test]
    fn masked_matrices_are_omitted() {
        let full = WeightSet::zeros(
            CellKind::Ilstm,
            8,
            2,
            1,
            InnovationMask::full(CellKind::Ilstm),
            Activation::Tanh,
        )
        .unwrap();
        let masked = WeightSet::zeros(
            CellKind::Ilstm,
            8,
            2,
            1,
            InnovationMask::without(CellKind::Ilstm, "cell").unwrap(),
            Activation::Tanh,
        )
        .unwrap();
        assert_eq!(full.param_count() - masked.param_count(), 8);
        let vanilla = full.to_vanilla();
        assert_eq!(vanilla.kind, CellKind::Lstm);
        assert_eq!(full.param_count() - vanilla.param_count(), 4 * 8);
    }

    #[test]
    fn nan_input_rejected() {
        let w = zero_weights(CellKind::Irnn);
        let s = CellState::zeros(CellKind::Irnn, 1);
        let err = w
            .step(
                &s,
                &Vector::from_slice(&[f64::NAN]),
                &Vector::zeros(1),
                &Vector::zeros(1),
            )
            .unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn mask_rejects_unknown_module() {
        assert!(InnovationMask::without(CellKind::Igru, "forget").is_err());
    }
}
