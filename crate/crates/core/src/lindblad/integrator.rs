//! Adaptive Dormand–Prince 5(4) propagation of the master equation.

use nalgebra::DMatrix;

use crate::error::LindbladError;
use crate::C64;

use super::joint::JointDensityMatrix;
use super::liouvillian::Liouvillian;

// Dormand–Prince tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Propagates ϱ for a duration `t ≥ 0` under the Liouvillian, with the
/// model's per-element mixed absolute/relative tolerance. Hermiticity is
/// restored by symmetrization after every accepted step.
pub fn propagate(
    liouv: &Liouvillian,
    rho: &JointDensityMatrix,
    t: f64,
    tolerance: f64,
) -> Result<JointDensityMatrix, LindbladError> {
    let mut state = rho.clone();
    propagate_sampled(liouv, &mut state, &[t], tolerance, |_, _| {})?;
    Ok(state)
}

/// Propagates ϱ in place through the sorted sample times, invoking
/// `on_sample(t, ϱ)` exactly at each one.
pub fn propagate_sampled(
    liouv: &Liouvillian,
    state: &mut JointDensityMatrix,
    times: &[f64],
    tolerance: f64,
    mut on_sample: impl FnMut(f64, &JointDensityMatrix),
) -> Result<(), LindbladError> {
    let dim = state.dim();
    assert_eq!(dim, liouv.dim(), "state and Liouvillian dimensions differ");
    for pair in times.windows(2) {
        assert!(pair[1] >= pair[0], "sample times must be sorted");
    }
    if let Some(&first) = times.first() {
        assert!(first >= 0.0, "sample times must be nonnegative");
    }

    let total: f64 = times.last().copied().unwrap_or(0.0);
    let min_step = (total * 1e-14).max(1e-18);
    let mut k: Vec<DMatrix<C64>> = (0..7).map(|_| DMatrix::zeros(dim, dim)).collect();
    let mut stage = DMatrix::zeros(dim, dim);
    let mut err = DMatrix::zeros(dim, dim);

    let mut t_now = 0.0f64;
    // initial step: small against both the total span and the fastest scale
    // the error controller will find; refined immediately by rejection
    let mut h = (total / 1e4).max(min_step);

    for &t_target in times {
        while t_now < t_target {
            let h_try = h.min(t_target - t_now);
            if h_try < min_step {
                return Err(LindbladError::StepUnderflow { reached: t_now });
            }

            liouv.apply(state.matrix(), &mut k[0]);
            for (s, row) in A.iter().enumerate() {
                stage.copy_from(state.matrix());
                for (kj, &a) in k.iter().zip(row).take(s + 1) {
                    if a != 0.0 {
                        stage.zip_apply(kj, |y, kv| *y += C64::new(h_try * a, 0.0) * kv);
                    }
                }
                let (head, tail) = k.split_at_mut(s + 1);
                liouv.apply(&stage, &mut tail[0]);
                let _ = head;
            }

            // 5th-order solution into `stage`, embedded error into `err`
            stage.copy_from(state.matrix());
            err.fill(C64::new(0.0, 0.0));
            for (j, kj) in k.iter().enumerate() {
                if B5[j] != 0.0 {
                    stage.zip_apply(kj, |y, kv| *y += C64::new(h_try * B5[j], 0.0) * kv);
                }
                let diff = B5[j] - B4[j];
                if diff != 0.0 {
                    err.zip_apply(kj, |e, kv| *e += C64::new(h_try * diff, 0.0) * kv);
                }
            }

            let mut err_norm = 0.0f64;
            for (e, (y0, y1)) in err.iter().zip(state.matrix().iter().zip(stage.iter())) {
                let scale = tolerance + tolerance * y0.norm().max(y1.norm());
                err_norm = err_norm.max(e.norm() / scale);
            }

            if err_norm <= 1.0 {
                t_now += h_try;
                // accept, restoring Hermiticity
                let sym = (stage.adjoint() + &stage) * C64::new(0.5, 0.0);
                state.matrix_mut().copy_from(&sym);
                let grow = if err_norm > 0.0 {
                    (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
                } else {
                    5.0
                };
                h = h_try * grow;
            } else {
                h = h_try * (0.9 * err_norm.powf(-0.2)).clamp(0.2, 0.9);
            }
        }
        on_sample(t_target, state);
    }
    Ok(())
}
