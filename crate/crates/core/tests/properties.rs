//! Randomized property tests for structural invariants that must hold for
//! arbitrary inputs, not just hand-picked fixtures.

use proptest::prelude::*;

use irnn_core::bptt::{forward, gradcheck_instance, loss, InnovationSource};
use irnn_core::cells::{CellKind, InnovationMask};
use irnn_core::numerics::{Matrix, Vector};

fn finite_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3f64..1e3, len)
}

proptest! {
    /// matvec is linear: A(a·x + b·y) = a·Ax + b·Ay.
    #[test]
    fn matvec_linearity(
        data in finite_vec(12),
        x in finite_vec(4),
        y in finite_vec(4),
        a in -10.0f64..10.0,
        b in -10.0f64..10.0,
    ) {
        let m = Matrix::from_vec(3, 4, data);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| a * xi + b * yi).collect();
        let lhs = m.matvec(&Vector::from_slice(&combo)).unwrap();
        let mx = m.matvec(&Vector::from_slice(&x)).unwrap();
        let my = m.matvec(&Vector::from_slice(&y)).unwrap();
        for i in 0..3 {
            let rhs = a * mx.get(i) + b * my.get(i);
            let scale = 1.0 + lhs.get(i).abs().max(rhs.abs());
            prop_assert!((lhs.get(i) - rhs).abs() / scale < 1e-9);
        }
    }

    /// With all stored innovations zeroed, every innovation cell's forward
    /// pass is bit-identical to its vanilla twin sharing the other weights.
    #[test]
    fn zero_innovation_reduces_to_vanilla(
        kind_idx in 0usize..3,
        seed in 0u64..1_000_000,
        t_p in 1usize..6,
        t_f in 1usize..4,
    ) {
        let kind = [CellKind::Irnn, CellKind::Igru, CellKind::Ilstm][kind_idx];
        let (w, traj) =
            gradcheck_instance(kind, InnovationMask::full(kind), 3, 2, 1, t_p, t_f, seed)
                .unwrap();
        let mut traj = traj;
        for e in &mut traj.e_stored {
            *e = Vector::zeros(1);
        }
        let (ys_i, _) = forward(&w, &traj, InnovationSource::Stored).unwrap();
        let (ys_v, _) = forward(&w.to_vanilla(), &traj, InnovationSource::Stored).unwrap();
        for (a, b) in ys_i.iter().zip(&ys_v) {
            for (va, vb) in a.data().iter().zip(b.data()) {
                prop_assert_eq!(va.to_bits(), vb.to_bits());
            }
        }
    }

    /// The horizon loss is non-negative, zero iff predictions match targets
    /// on the horizon, and invariant to warmup predictions.
    #[test]
    fn loss_is_horizon_only(
        seed in 0u64..1_000_000,
        t_p in 1usize..6,
        t_f in 1usize..4,
    ) {
        let (w, traj) =
            gradcheck_instance(CellKind::Irnn, InnovationMask::full(CellKind::Irnn),
                               3, 2, 1, t_p, t_f, seed).unwrap();
        let (y_hats, _) = forward(&w, &traj, InnovationSource::Stored).unwrap();
        let l = loss(&y_hats, &traj).unwrap();
        prop_assert!(l >= 0.0);

        // Matching the horizon exactly zeroes the loss regardless of warmup.
        let mut perfect = y_hats.clone();
        for t in t_p..t_p + t_f {
            perfect[t] = traj.y[t].clone();
        }
        prop_assert_eq!(loss(&perfect, &traj).unwrap(), 0.0);

        // Corrupting only warmup predictions leaves the loss unchanged.
        let mut corrupted = y_hats.clone();
        for t in 0..t_p {
            corrupted[t] = Vector::from_slice(&[1e6]);
        }
        prop_assert_eq!(loss(&corrupted, &traj).unwrap().to_bits(), l.to_bits());
    }
}
