//! Spin-echo signals under heating and the coherence decay curve.

use nalgebra::Matrix2;

use crate::error::{LindbladError, SpinError};
use crate::exec;
use crate::spin::{pulse_operator, PulseMode, PulseSpec};
use crate::trap::boltzmann_weights;
use crate::C64;

use super::integrator::propagate_sampled;
use super::joint::JointDensityMatrix;
use super::liouvillian::{build_liouvillian, HeatingModel};

/// How the fringe amplitude is read off the sampled echo signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FringeEstimator {
    /// Half the peak-to-trough excursion over the measurement window.
    #[default]
    PeakToTrough,
    /// Amplitude of a fixed-frequency sinusoid fitted by linear least
    /// squares over the window.
    SinusoidFit,
}

/// Settings for the coherence-decay extraction.
#[derive(Debug, Clone, Copy)]
pub struct EchoOptions {
    /// Half-width of the `t_d` window around each echo time, seconds.
    pub window: f64,
    /// Number of `t_d` samples across the window.
    pub samples: usize,
    pub pulse_mode: PulseMode,
    pub estimator: FringeEstimator,
}

impl Default for EchoOptions {
    fn default() -> Self {
        EchoOptions {
            window: 0.5e-3,
            samples: 121,
            pulse_mode: PulseMode::Ideal,
            estimator: FringeEstimator::PeakToTrough,
        }
    }
}

/// Coherence decay against echo time, with the irreversible dephasing time
/// read off as the half width at half maximum.
#[derive(Debug, Clone)]
pub struct CoherenceDecayCurve {
    /// `(t_echo, C_heat)` samples in grid order.
    pub samples: Vec<(f64, f64)>,
    /// HWHM of the interpolated curve; `None` when the grid never crosses
    /// one half.
    pub t2: Option<f64>,
    /// Whether the sampled curve was nonincreasing; when false, `t2` refers
    /// to the first crossing and should be treated with care.
    pub monotone: bool,
}

/// Spin-echo transfer probability under heating for each requested `t_d`
/// (ascending), at fixed `t_echo`.
///
/// The sequence is π/2 — evolve(t_echo/2) — π — evolve(t_d - t_echo/2) — π/2
/// with pulses applied as instantaneous spin unitaries (identity on the
/// phonons) in ideal mode, or as per-phonon-number detuned unitaries in
/// detuned mode.
pub fn echo_under_heating(
    model: &HeatingModel,
    omega0: f64,
    delta_mw: f64,
    initial_temperature: f64,
    t_echo: f64,
    t_ds: &[f64],
    pulse_mode: PulseMode,
) -> Result<Vec<f64>, LindbladError> {
    model.validate()?;
    if t_echo < 0.0 || !t_echo.is_finite() {
        return Err(SpinError::InvalidTiming(format!("negative echo time {t_echo} s")).into());
    }
    let tau1 = 0.5 * t_echo;
    for pair in t_ds.windows(2) {
        if pair[1] < pair[0] {
            return Err(SpinError::InvalidTiming("t_d samples must be ascending".into()).into());
        }
    }
    if let Some(&first) = t_ds.first() {
        if first < tau1 {
            return Err(SpinError::InvalidTiming(format!(
                "t_d = {first} s is shorter than the first echo arm {tau1} s"
            ))
            .into());
        }
    }

    let liouv = build_liouvillian(model, delta_mw)?;
    let mut rho =
        JointDensityMatrix::thermal_ground(&model.spectrum, model.n_max, initial_temperature)?;

    let half_pi = pulse_matrices(
        &PulseSpec { nominal_angle: std::f64::consts::FRAC_PI_2, rabi_frequency: omega0, phase: 0.0, mode: pulse_mode },
        model,
        delta_mw,
    )?;
    let pi_pulse = pulse_matrices(
        &PulseSpec { nominal_angle: std::f64::consts::PI, rabi_frequency: omega0, phase: 0.0, mode: pulse_mode },
        model,
        delta_mw,
    )?;

    apply_pulse(&mut rho, &half_pi);
    let mut state = propagate_prefix(&liouv, rho, tau1, model.tolerance)?;
    apply_pulse(&mut state, &pi_pulse);

    let tau2s: Vec<f64> = t_ds.iter().map(|t| t - tau1).collect();
    let mut out = Vec::with_capacity(t_ds.len());
    propagate_sampled(&liouv, &mut state, &tau2s, model.tolerance, |_, snapshot| {
        let mut probe = snapshot.clone();
        apply_pulse(&mut probe, &half_pi);
        out.push(probe.excited_population());
    })?;
    Ok(out)
}

enum PulseMatrices {
    Uniform(Matrix2<C64>),
    PerState(Vec<Matrix2<C64>>),
}

fn pulse_matrices(
    spec: &PulseSpec,
    model: &HeatingModel,
    delta_mw: f64,
) -> Result<PulseMatrices, LindbladError> {
    spec.validate()?;
    Ok(match spec.mode {
        PulseMode::Ideal => PulseMatrices::Uniform(pulse_operator(spec, 0.0)),
        PulseMode::Detuned => PulseMatrices::PerState(
            (0..=model.n_max)
                .map(|n| pulse_operator(spec, model.spectrum.light_shift(n) - delta_mw))
                .collect(),
        ),
    })
}

fn apply_pulse(rho: &mut JointDensityMatrix, pulse: &PulseMatrices) {
    match pulse {
        PulseMatrices::Uniform(u) => rho.apply_spin_unitary(u),
        PulseMatrices::PerState(us) => rho.apply_per_state_spin_unitaries(us),
    }
}

fn propagate_prefix(
    liouv: &super::liouvillian::Liouvillian,
    mut rho: JointDensityMatrix,
    t: f64,
    tolerance: f64,
) -> Result<JointDensityMatrix, LindbladError> {
    propagate_sampled(liouv, &mut rho, &[t], tolerance, |_, _| {})?;
    Ok(rho)
}

/// Predicted coherence decay: for each echo time, the ratio of the echo
/// fringe amplitude under heating to the amplitude of the κ = 0 reference,
/// measured over the window `|t_d - t_echo| ≤ opts.window`.
pub fn extract_c_heat(
    model: &HeatingModel,
    omega0: f64,
    delta_mw: f64,
    initial_temperature: f64,
    t_echo_grid: &[f64],
    opts: &EchoOptions,
) -> Result<CoherenceDecayCurve, LindbladError> {
    model.validate()?;
    for pair in t_echo_grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(SpinError::InvalidTiming("echo-time grid must be ascending".into()).into());
        }
    }
    if t_echo_grid.is_empty() {
        return Err(SpinError::InvalidTiming("echo-time grid is empty".into()).into());
    }
    if opts.samples < 8 {
        return Err(SpinError::InvalidTiming("need at least 8 window samples".into()).into());
    }

    let mut free_model = model.clone();
    free_model.kappa = 0.0;

    // dominant fringe frequency for the sinusoid estimator: thermally
    // averaged effective detuning
    let weights = boltzmann_weights(&model.spectrum.truncated(model.n_max)?, initial_temperature)?;
    let mean_detuning: f64 = weights
        .weights()
        .iter()
        .enumerate()
        .map(|(n, w)| w * (model.spectrum.light_shift(n) - delta_mw))
        .sum();

    let results: Vec<Result<(f64, f64), LindbladError>> =
        exec::map_slice(t_echo_grid, |&t_echo| {
            let lo = (t_echo - opts.window).max(0.5 * t_echo);
            let hi = t_echo + opts.window;
            let times: Vec<f64> = (0..opts.samples)
                .map(|i| lo + (hi - lo) * i as f64 / (opts.samples - 1) as f64)
                .collect();
            let heated = echo_under_heating(
                model,
                omega0,
                delta_mw,
                initial_temperature,
                t_echo,
                &times,
                opts.pulse_mode,
            )?;
            let free = echo_under_heating(
                &free_model,
                omega0,
                delta_mw,
                initial_temperature,
                t_echo,
                &times,
                opts.pulse_mode,
            )?;
            let amp = |values: &[f64]| match opts.estimator {
                FringeEstimator::PeakToTrough => fringe_amplitude_peak_to_trough(values),
                FringeEstimator::SinusoidFit => {
                    fringe_amplitude_sinusoid_fit(&times, values, mean_detuning.abs())
                }
            };
            Ok((t_echo, amp(&heated) / amp(&free)))
        });

    let mut samples = Vec::with_capacity(results.len());
    for r in results {
        samples.push(r?);
    }

    let monotone = samples.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9);
    let t2 = half_crossing(&samples);
    Ok(CoherenceDecayCurve { samples, t2, monotone })
}

/// First crossing of C = 1/2, linearly interpolated, anchored at C(0) = 1.
fn half_crossing(samples: &[(f64, f64)]) -> Option<f64> {
    let mut prev = (0.0, 1.0);
    for &(t, c) in samples {
        if c <= 0.5 {
            let (t0, c0) = prev;
            let frac = (c0 - 0.5) / (c0 - c);
            return Some(t0 + frac * (t - t0));
        }
        prev = (t, c);
    }
    None
}

/// Half the peak-to-trough excursion of the sampled fringe.
pub fn fringe_amplitude_peak_to_trough(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    0.5 * (max - min)
}

/// Amplitude `√(A² + B²)` of `a + A cos(ω t) + B sin(ω t)` fitted to the
/// samples by linear least squares at fixed ω.
pub fn fringe_amplitude_sinusoid_fit(times: &[f64], values: &[f64], omega: f64) -> f64 {
    let n = times.len() as f64;
    let mut sums = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (&t, &v) in times.iter().zip(values) {
        let basis = [1.0, (omega * t).cos(), (omega * t).sin()];
        for i in 0..3 {
            for j in 0..3 {
                sums[i][j] += basis[i] * basis[j];
            }
            rhs[i] += basis[i] * v;
        }
    }
    let m = nalgebra::Matrix3::from_fn(|i, j| sums[i][j]);
    let b = nalgebra::Vector3::from_row_slice(&rhs);
    match m.lu().solve(&b) {
        Some(x) => (x[1] * x[1] + x[2] * x[2]).sqrt(),
        None => fringe_amplitude_peak_to_trough(values) * (2.0 / n).sqrt(),
    }
}
