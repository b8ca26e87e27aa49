//! Box-constrained Levenberg–Marquardt least squares.
//!
//! Parameters are mapped to unit-box coordinates, the Jacobian is built by
//! forward differences (columns evaluated independently, collected in
//! order), and trial steps from the damped normal equations are clamped to
//! the box. Accepted steps never increase the objective.

use nalgebra::{DMatrix, DVector};

use crate::error::FitError;
use crate::exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmStatus {
    /// Relative objective decrease fell below `ftol`.
    ObjectiveConverged,
    /// Scaled gradient norm fell below `gtol`.
    GradientConverged,
    /// Damping could not find a descent direction.
    Stalled,
    /// Iteration limit reached; parameters are best-so-far.
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    /// Solution in physical coordinates.
    pub x: Vec<f64>,
    /// Sum of squared residuals at the solution.
    pub objective: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub status: LmStatus,
    /// Objective after every accepted step (starts with the initial value).
    pub objective_history: Vec<f64>,
    /// Residuals at the solution.
    pub residuals: Vec<f64>,
    /// Jacobian at the solution in physical coordinates (m × k).
    pub jacobian: DMatrix<f64>,
    /// Per-coordinate flag: solution sits at a bound with the gradient
    /// pushing outward.
    pub at_bound: Vec<bool>,
}

#[derive(Debug, Clone, Copy)]
pub struct LmSettings {
    pub max_iterations: usize,
    pub ftol: f64,
    pub gtol: f64,
}

/// Residual evaluation callback: physical parameters in, residuals out.
pub type ResidualFn<'a> = dyn Fn(&[f64]) -> Result<Vec<f64>, FitError> + Sync + 'a;

/// Minimizes `‖f(x)‖²` subject to `lo ≤ x ≤ hi`.
pub fn least_squares(
    f: &ResidualFn<'_>,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    settings: LmSettings,
) -> Result<LmOutcome, FitError> {
    let k = x0.len();
    assert_eq!(lo.len(), k);
    assert_eq!(hi.len(), k);
    for j in 0..k {
        if lo[j] >= hi[j] || lo[j].is_nan() || hi[j].is_nan() {
            return Err(FitError::BadBounds { name: format!("coordinate {j}") });
        }
        if x0[j] < lo[j] || x0[j] > hi[j] {
            return Err(FitError::GuessOutOfBounds { name: format!("coordinate {j}") });
        }
    }
    let width: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| h - l).collect();
    let to_physical = |u: &[f64]| -> Vec<f64> {
        u.iter().zip(lo).zip(&width).map(|((v, l), w)| l + v * w).collect()
    };
    let eval = |u: &[f64]| -> Result<Vec<f64>, FitError> { f(&to_physical(u)) };

    let mut u: Vec<f64> =
        x0.iter().zip(lo).zip(&width).map(|((x, l), w)| ((x - l) / w).clamp(0.0, 1.0)).collect();
    let mut residuals = eval(&u)?;
    let m = residuals.len();
    if m == 0 {
        return Err(FitError::InvalidSetup("no residuals to fit".into()));
    }
    let mut objective = sum_sq(&residuals);
    let mut history = vec![objective];
    let mut lambda = 1e-3;
    let mut status = LmStatus::MaxIterations;
    let mut gradient_norm = f64::INFINITY;
    let mut iterations = 0;
    let mut jac = jacobian(&eval, &u, &residuals)?;

    for iter in 0..settings.max_iterations {
        iterations = iter + 1;
        let j_mat = DMatrix::from_fn(m, k, |r, c| jac[c][r]);
        let r_vec = DVector::from_column_slice(&residuals);
        let grad = j_mat.transpose() * &r_vec;
        gradient_norm = grad.amax();
        if gradient_norm < settings.gtol {
            status = LmStatus::GradientConverged;
            break;
        }
        let jtj = j_mat.transpose() * &j_mat;

        let mut accepted = false;
        let mut lambda_grew = false;
        for _ in 0..40 {
            let mut damped = jtj.clone();
            for d in 0..k {
                let diag = jtj[(d, d)].max(1e-30);
                damped[(d, d)] = jtj[(d, d)] + lambda * diag;
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                lambda_grew = true;
                continue;
            };
            let step = chol.solve(&(-&grad));
            let trial: Vec<f64> =
                u.iter().zip(step.iter()).map(|(v, s)| (v + s).clamp(0.0, 1.0)).collect();
            let trial_residuals = eval(&trial)?;
            let trial_objective = sum_sq(&trial_residuals);
            if trial_objective < objective {
                let decrease = (objective - trial_objective) / objective.max(f64::MIN_POSITIVE);
                u = trial;
                residuals = trial_residuals;
                objective = trial_objective;
                history.push(objective);
                lambda = (lambda / 3.0).max(1e-14);
                accepted = true;
                jac = jacobian(&eval, &u, &residuals)?;
                // a tiny decrease only signals convergence when the full
                // Gauss-Newton step was usable; a damped crawl is not there yet
                if decrease < settings.ftol && !lambda_grew {
                    status = LmStatus::ObjectiveConverged;
                }
                break;
            }
            lambda *= 10.0;
            lambda_grew = true;
            if lambda > 1e14 {
                break;
            }
        }
        if !accepted {
            status = LmStatus::Stalled;
            break;
        }
        if status == LmStatus::ObjectiveConverged {
            break;
        }
    }

    // physical-space Jacobian and bound flags
    let j_phys = DMatrix::from_fn(m, k, |r, c| jac[c][r] / width[c]);
    let j_mat = DMatrix::from_fn(m, k, |r, c| jac[c][r]);
    let grad = j_mat.transpose() * DVector::from_column_slice(&residuals);
    let at_bound: Vec<bool> = (0..k)
        .map(|j| {
            let eps = 1e-9;
            (u[j] <= eps && grad[j] > 0.0) || (u[j] >= 1.0 - eps && grad[j] < 0.0)
        })
        .collect();

    Ok(LmOutcome {
        x: to_physical(&u),
        objective,
        iterations,
        gradient_norm,
        status,
        objective_history: history,
        residuals,
        jacobian: j_phys,
        at_bound,
    })
}

/// Forward-difference Jacobian in unit-box coordinates; one column per
/// parameter, evaluated independently and collected in order.
fn jacobian(
    eval: &(impl Fn(&[f64]) -> Result<Vec<f64>, FitError> + Sync),
    u: &[f64],
    base: &[f64],
) -> Result<Vec<Vec<f64>>, FitError> {
    const H: f64 = 1e-6;
    let k = u.len();
    let columns = exec::map_indexed(k, |j| -> Result<Vec<f64>, FitError> {
        let mut probe = u.to_vec();
        let h = if probe[j] + H <= 1.0 { H } else { -H };
        probe[j] += h;
        let shifted = eval(&probe)?;
        Ok(shifted.iter().zip(base).map(|(s, b)| (s - b) / h).collect())
    });
    columns.into_iter().collect()
}

fn sum_sq(values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for v in values {
        acc += v * v;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> LmSettings {
        LmSettings { max_iterations: 200, ftol: 1e-12, gtol: 1e-10 }
    }

    #[test]
    fn recovers_linear_model_exactly() {
        // residuals for y = a t + b against noiseless data
        let truth = [2.5, -1.0];
        let ts: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let data: Vec<f64> = ts.iter().map(|t| truth[0] * t + truth[1]).collect();
        let ts2 = ts.clone();
        let f = move |x: &[f64]| -> Result<Vec<f64>, FitError> {
            Ok(ts2.iter().zip(&data).map(|(t, d)| d - (x[0] * t + x[1])).collect())
        };
        let out = least_squares(&f, &[0.3, 0.3], &[-10.0, -10.0], &[10.0, 10.0], settings()).unwrap();
        assert!((out.x[0] - truth[0]).abs() < 1e-8);
        assert!((out.x[1] - truth[1]).abs() < 1e-8);
        assert!(out.objective < 1e-15);
    }

    #[test]
    fn rosenbrock_style_valley_converges() {
        let f = |x: &[f64]| -> Result<Vec<f64>, FitError> {
            Ok(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]])
        };
        let out = least_squares(&f, &[-1.2, 1.0], &[-5.0, -5.0], &[5.0, 5.0], settings()).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-6, "x = {:?}", out.x);
        assert!((out.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn objective_never_increases_across_accepted_steps() {
        let f = |x: &[f64]| -> Result<Vec<f64>, FitError> {
            Ok(vec![(x[0] - 0.3) * (x[0] + 2.0), x[1] * x[0] - 1.0, (x[1] - 3.0) * 0.5])
        };
        let out = least_squares(&f, &[2.0, -2.0], &[-4.0, -4.0], &[4.0, 4.0], settings()).unwrap();
        for w in out.objective_history.windows(2) {
            assert!(w[1] <= w[0], "objective increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn solution_pinned_at_bound_is_flagged() {
        // unconstrained minimum at x = -2, box starts at 0
        let f = |x: &[f64]| -> Result<Vec<f64>, FitError> { Ok(vec![x[0] + 2.0]) };
        let out = least_squares(&f, &[1.0], &[0.0], &[5.0], settings()).unwrap();
        assert!(out.x[0].abs() < 1e-9);
        assert!(out.at_bound[0]);
    }

    #[test]
    fn guess_outside_bounds_is_rejected() {
        let f = |x: &[f64]| -> Result<Vec<f64>, FitError> { Ok(vec![x[0]]) };
        assert!(matches!(
            least_squares(&f, &[2.0], &[0.0], &[1.0], settings()),
            Err(FitError::GuessOutOfBounds { .. })
        ));
    }
}
