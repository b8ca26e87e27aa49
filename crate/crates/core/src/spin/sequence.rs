//! Pulse-sequence evaluation and the ensemble-averaged signal shapes.
//!
//! Two routes compute every signal: a generic interpreter that walks a
//! [`SequenceSpec`] element by element with explicit 2×2 conjugations, and
//! specialized Rabi/Ramsey/echo paths that precompute the per-state pulse
//! operators once and update only the free-evolution phases per sample. The
//! two routes agree to machine precision and the test suites hold them
//! against each other.

use nalgebra::Vector2;

use crate::error::SpinError;
use crate::exec;
use crate::trap::{boltzmann_weights, VibrationalSpectrum};
use crate::C64;

use super::density::SpinDensityMatrix;
use super::pulse::{free_evolution, pulse_operator, PulseMode, PulseSpec};

/// One step of a pulse program.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceElement {
    Pulse(PulseSpec),
    /// Free evolution for the given duration in seconds.
    Delay(f64),
}

/// An ordered pulse program with the microwave detuning it runs at and an
/// optional coherence factor applied just before the final pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSpec {
    pub elements: Vec<SequenceElement>,
    /// δ_MW = ω_MW - ω₀ in rad/s.
    pub microwave_detuning: f64,
    /// Off-diagonal contraction C in [0, 1], applied before the final pulse.
    pub dephasing_factor: Option<f64>,
}

impl SequenceSpec {
    pub fn new(elements: Vec<SequenceElement>) -> Self {
        SequenceSpec { elements, microwave_detuning: 0.0, dephasing_factor: None }
    }

    pub fn validate(&self) -> Result<(), SpinError> {
        for el in &self.elements {
            match el {
                SequenceElement::Pulse(p) => p.validate()?,
                SequenceElement::Delay(t) => {
                    if !t.is_finite() || *t < 0.0 {
                        return Err(SpinError::InvalidSequence(format!("negative delay {t} s")));
                    }
                }
            }
        }
        if let Some(c) = self.dephasing_factor {
            if !(0.0..=1.0).contains(&c) {
                return Err(SpinError::DephasingOutOfRange(c));
            }
            if self.final_pulse_index().is_none() {
                return Err(SpinError::InvalidSequence(
                    "dephasing factor requires a final pulse to precede".into(),
                ));
            }
        }
        if !self.microwave_detuning.is_finite() {
            return Err(SpinError::InvalidSequence("non-finite microwave detuning".into()));
        }
        Ok(())
    }

    /// Sets the Rabi frequency on every pulse (the DSL does not carry it).
    pub fn resolve_rabi_frequency(&mut self, omega0: f64) {
        for el in &mut self.elements {
            if let SequenceElement::Pulse(p) = el {
                p.rabi_frequency = omega0;
            }
        }
    }

    pub fn total_delay(&self) -> f64 {
        self.elements
            .iter()
            .map(|el| match el {
                SequenceElement::Delay(t) => *t,
                SequenceElement::Pulse(_) => 0.0,
            })
            .sum()
    }

    fn final_pulse_index(&self) -> Option<usize> {
        self.elements.iter().rposition(|el| matches!(el, SequenceElement::Pulse(_)))
    }

    fn final_delay_index(&self) -> Option<usize> {
        self.elements.iter().rposition(|el| matches!(el, SequenceElement::Delay(_)))
    }

    /// Echo time implied by the program: twice the free evolution before the
    /// (single) π-like central pulse of a three-pulse sequence. `None` when
    /// the program does not have that shape.
    pub fn inferred_echo_time(&self) -> Option<f64> {
        let pulses: Vec<usize> = self
            .elements
            .iter()
            .enumerate()
            .filter_map(|(i, el)| matches!(el, SequenceElement::Pulse(_)).then_some(i))
            .collect();
        if pulses.len() != 3 {
            return None;
        }
        let before: f64 = self.elements[pulses[0] + 1..pulses[1]]
            .iter()
            .map(|el| match el {
                SequenceElement::Delay(t) => *t,
                _ => 0.0,
            })
            .sum();
        Some(2.0 * before)
    }

    /// Excited-state population after running the program on |g⟩ for one
    /// vibrational state with light shift `delta_ls`.
    pub fn evaluate_for_state(&self, delta_ls: f64) -> f64 {
        let delta = delta_ls - self.microwave_detuning;
        let final_pulse = self.final_pulse_index();
        let mut rho = SpinDensityMatrix::ground();
        for (i, el) in self.elements.iter().enumerate() {
            if Some(i) == final_pulse {
                if let Some(c) = self.dephasing_factor {
                    rho = rho.dephased(c).expect("validated");
                }
            }
            match el {
                SequenceElement::Pulse(p) => rho = rho.evolved(&pulse_operator(p, delta)),
                SequenceElement::Delay(t) => rho = rho.evolved(&free_evolution(delta, *t)),
            }
            debug_assert!(rho.validate(1e-10).is_ok());
        }
        rho.population_e()
    }
}

/// Thermal ensemble average `Σ_n P(n, T) f(n, δ_ls(n))` with a fixed
/// ascending-n reduction order.
pub fn ensemble_average(
    spectrum: &VibrationalSpectrum,
    temperature: f64,
    f: impl Fn(usize, f64) -> f64 + Sync,
) -> Result<f64, SpinError> {
    let weights = boltzmann_weights(spectrum, temperature)
        .map_err(|e| SpinError::InvalidSequence(e.to_string()))?;
    let values = exec::map_indexed(spectrum.levels(), |n| f(n, spectrum.light_shift(n)));
    Ok(exec::ordered_dot(weights.weights(), &values))
}

/// Runs a validated sequence over the thermal ensemble.
pub fn evaluate_sequence(
    seq: &SequenceSpec,
    spectrum: &VibrationalSpectrum,
    temperature: f64,
) -> Result<f64, SpinError> {
    seq.validate()?;
    ensemble_average(spectrum, temperature, |_, delta_ls| seq.evaluate_for_state(delta_ls))
}

/// Evaluates the program once per requested total free-evolution time by
/// adjusting its final delay, leaving all earlier delays fixed.
///
/// A Ramsey program (one delay) scans its interrogation time; an echo program
/// with its first arm fixed scans `t_d` at constant `t_echo`.
pub fn scan_sequence(
    seq: &SequenceSpec,
    spectrum: &VibrationalSpectrum,
    temperature: f64,
    times: &[f64],
) -> Result<Vec<f64>, SpinError> {
    seq.validate()?;
    let Some(idx) = seq.final_delay_index() else {
        return Err(SpinError::InvalidSequence("scan requires at least one delay".into()));
    };
    let fixed: f64 = seq.total_delay()
        - match seq.elements[idx] {
            SequenceElement::Delay(t) => t,
            _ => unreachable!(),
        };
    let mut results = Vec::with_capacity(times.len());
    for &t in times {
        let last = t - fixed;
        if last < 0.0 {
            return Err(SpinError::InvalidTiming(format!(
                "scan time {t} s is shorter than the fixed delays ({fixed} s)"
            )));
        }
        let mut variant = seq.clone();
        variant.elements[idx] = SequenceElement::Delay(last);
        results.push(evaluate_sequence(&variant, spectrum, temperature)?);
    }
    Ok(results)
}

/// Ensemble-averaged Rabi transfer probability for a resonant-drive pulse of
/// duration `t_p`, damped toward 1/2 at `damping_rate` (exponential contrast
/// loss from drive-power fluctuations).
pub fn rabi_probability(
    omega0: f64,
    delta_mw: f64,
    t_p: f64,
    spectrum: &VibrationalSpectrum,
    temperature: f64,
    damping_rate: f64,
) -> Result<f64, SpinError> {
    Ok(rabi_scan(omega0, delta_mw, &[t_p], spectrum, temperature, damping_rate)?[0])
}

/// [`rabi_probability`] over a grid of pulse durations.
pub fn rabi_scan(
    omega0: f64,
    delta_mw: f64,
    t_ps: &[f64],
    spectrum: &VibrationalSpectrum,
    temperature: f64,
    damping_rate: f64,
) -> Result<Vec<f64>, SpinError> {
    if omega0.is_nan() || omega0 <= 0.0 {
        return Err(SpinError::InvalidSequence("Rabi frequency must be positive".into()));
    }
    if t_ps.iter().any(|t| *t < 0.0 || !t.is_finite()) {
        return Err(SpinError::InvalidTiming("negative pulse duration".into()));
    }
    let weights = boltzmann_weights(spectrum, temperature)
        .map_err(|e| SpinError::InvalidSequence(e.to_string()))?;
    let ground = Vector2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    let results = exec::map_slice(t_ps, |&t_p| {
        let per_state = exec::map_indexed_seq(spectrum.levels(), |n| {
            let pulse = PulseSpec {
                nominal_angle: omega0 * t_p,
                rabi_frequency: omega0,
                phase: 0.0,
                mode: PulseMode::Detuned,
            };
            let u = pulse_operator(&pulse, spectrum.light_shift(n) - delta_mw);
            (u * ground)[0].norm_sqr()
        });
        let p = exec::ordered_dot(weights.weights(), &per_state);
        0.5 + (p - 0.5) * (-t_p * damping_rate).exp()
    });
    Ok(results)
}

/// Ensemble-averaged Ramsey transfer probability: π/2 — free(t_d) — π/2.
pub fn ramsey_probability(
    omega0: f64,
    delta_mw: f64,
    t_d: f64,
    spectrum: &VibrationalSpectrum,
    temperature: f64,
    mode: PulseMode,
) -> Result<f64, SpinError> {
    Ok(ramsey_scan(omega0, delta_mw, &[t_d], spectrum, temperature, mode)?[0])
}

/// [`ramsey_probability`] over a grid of interrogation times.
pub fn ramsey_scan(
    omega0: f64,
    delta_mw: f64,
    t_ds: &[f64],
    spectrum: &VibrationalSpectrum,
    temperature: f64,
    mode: PulseMode,
) -> Result<Vec<f64>, SpinError> {
    if t_ds.iter().any(|t| *t < 0.0 || !t.is_finite()) {
        return Err(SpinError::InvalidTiming("negative interrogation time".into()));
    }
    let weights = boltzmann_weights(spectrum, temperature)
        .map_err(|e| SpinError::InvalidSequence(e.to_string()))?;
    let half_pi = PulseSpec {
        nominal_angle: std::f64::consts::FRAC_PI_2,
        rabi_frequency: omega0,
        phase: 0.0,
        mode,
    };
    half_pi.validate()?;
    let ground = Vector2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0));

    // per-state precomputation: state after the first pulse and the rows of
    // the second pulse that reach |e⟩
    struct PerState {
        delta: f64,
        a: C64,
        b: C64,
        u00: C64,
        u01: C64,
    }
    let prepared: Vec<PerState> = (0..spectrum.levels())
        .map(|n| {
            let delta = spectrum.light_shift(n) - delta_mw;
            let u1 = pulse_operator(&half_pi, delta);
            let v = u1 * ground;
            let u2 = pulse_operator(&half_pi, delta);
            PerState { delta, a: v[0], b: v[1], u00: u2[(0, 0)], u01: u2[(0, 1)] }
        })
        .collect();

    let results = exec::map_slice(t_ds, |&t| {
        let per_state = exec::map_indexed_seq(prepared.len(), |n| {
            let s = &prepared[n];
            let half = 0.5 * s.delta * t;
            let phase = C64::new(half.cos(), -half.sin());
            let amp = s.u00 * s.a * phase + s.u01 * s.b * phase.conj();
            amp.norm_sqr()
        });
        exec::ordered_dot(weights.weights(), &per_state)
    });
    Ok(results)
}

/// Ensemble-averaged spin-echo transfer probability:
/// π/2 — free(t_echo/2) — π — free(t_d - t_echo/2) — D(C) — π/2(φ).
#[allow(clippy::too_many_arguments)]
pub fn echo_probability(
    omega0: f64,
    delta_mw: f64,
    t_d: f64,
    t_echo: f64,
    coherence: f64,
    phi: f64,
    spectrum: &VibrationalSpectrum,
    temperature: f64,
    mode: PulseMode,
) -> Result<f64, SpinError> {
    Ok(echo_scan(omega0, delta_mw, &[t_d], t_echo, coherence, phi, spectrum, temperature, mode)?[0])
}

/// [`echo_probability`] over a grid of `t_d` at fixed `t_echo`.
#[allow(clippy::too_many_arguments)]
pub fn echo_scan(
    omega0: f64,
    delta_mw: f64,
    t_ds: &[f64],
    t_echo: f64,
    coherence: f64,
    phi: f64,
    spectrum: &VibrationalSpectrum,
    temperature: f64,
    mode: PulseMode,
) -> Result<Vec<f64>, SpinError> {
    if !(0.0..=1.0).contains(&coherence) {
        return Err(SpinError::DephasingOutOfRange(coherence));
    }
    if t_echo < 0.0 || !t_echo.is_finite() {
        return Err(SpinError::InvalidTiming(format!("negative echo time {t_echo} s")));
    }
    let tau1 = 0.5 * t_echo;
    for &t in t_ds {
        if !t.is_finite() || t < tau1 {
            return Err(SpinError::InvalidTiming(format!(
                "t_d = {t} s is shorter than the first echo arm {tau1} s"
            )));
        }
    }
    let weights = boltzmann_weights(spectrum, temperature)
        .map_err(|e| SpinError::InvalidSequence(e.to_string()))?;
    let half_pi = PulseSpec {
        nominal_angle: std::f64::consts::FRAC_PI_2,
        rabi_frequency: omega0,
        phase: 0.0,
        mode,
    };
    let pi_pulse = PulseSpec {
        nominal_angle: std::f64::consts::PI,
        rabi_frequency: omega0,
        phase: 0.0,
        mode,
    };
    half_pi.validate()?;
    let ground = Vector2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0));

    struct PerState {
        delta: f64,
        /// state after π/2, free(τ1), π
        v_e: C64,
        v_g: C64,
        /// |e⟩ row of the final π/2(φ)
        u00: C64,
        u01: C64,
    }
    let prepared: Vec<PerState> = (0..spectrum.levels())
        .map(|n| {
            let delta = spectrum.light_shift(n) - delta_mw;
            let v = pulse_operator(&pi_pulse, delta)
                * free_evolution(delta, tau1)
                * (pulse_operator(&half_pi, delta) * ground);
            let u2 = pulse_operator(&half_pi.with_phase(phi), delta);
            PerState { delta, v_e: v[0], v_g: v[1], u00: u2[(0, 0)], u01: u2[(0, 1)] }
        })
        .collect();

    let results = exec::map_slice(t_ds, |&t_d| {
        let tau2 = t_d - tau1;
        let per_state = exec::map_indexed_seq(prepared.len(), |n| {
            let s = &prepared[n];
            let rho_ee = s.v_e.norm_sqr();
            let rho_gg = s.v_g.norm_sqr();
            let angle = -s.delta * tau2;
            let rho_eg = s.v_e * s.v_g.conj() * C64::new(angle.cos(), angle.sin());
            s.u00.norm_sqr() * rho_ee
                + s.u01.norm_sqr() * rho_gg
                + 2.0 * coherence * (s.u00 * s.u01.conj() * rho_eg).re
        });
        exec::ordered_dot(weights.weights(), &per_state)
    });
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trap::VibrationalSpectrum;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn test_spectrum() -> VibrationalSpectrum {
        VibrationalSpectrum::harmonic(TAU * 200e3, 40, -TAU * 7e3, TAU * 80.0)
    }

    fn ramsey_spec(t_d: f64, detuning: f64, mode: PulseMode) -> SequenceSpec {
        let mut pulse = PulseSpec::ideal(FRAC_PI_2);
        pulse.mode = mode;
        pulse.rabi_frequency = TAU * 17e3;
        let mut seq = SequenceSpec::new(vec![
            SequenceElement::Pulse(pulse),
            SequenceElement::Delay(t_d),
            SequenceElement::Pulse(pulse),
        ]);
        seq.microwave_detuning = detuning;
        seq
    }

    #[test]
    fn ramsey_at_zero_delay_composes_to_pi() {
        let spectrum = test_spectrum();
        let p = ramsey_probability(TAU * 17e3, 0.0, 0.0, &spectrum, 71e-6, PulseMode::Ideal).unwrap();
        assert_relative_eq!(p, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_temperature_ramsey_is_a_pure_cosine() {
        let spectrum = test_spectrum();
        let delta_mw = -TAU * 5e3;
        let delta0 = spectrum.light_shift(0) - delta_mw;
        for k in 0..40 {
            let t = k as f64 * 7e-6;
            let p =
                ramsey_probability(TAU * 17e3, delta_mw, t, &spectrum, 0.0, PulseMode::Ideal).unwrap();
            assert_relative_eq!(p, (0.5 * delta0 * t).cos().powi(2), epsilon = 1e-12);
        }
    }

    #[test]
    fn generic_interpreter_matches_specialized_ramsey() {
        let spectrum = test_spectrum();
        let delta_mw = -TAU * 5e3;
        for mode in [PulseMode::Ideal, PulseMode::Detuned] {
            for k in 0..25 {
                let t = k as f64 * 23e-6;
                let spec = ramsey_spec(t, delta_mw, mode);
                let generic = evaluate_sequence(&spec, &spectrum, 71e-6).unwrap();
                let fast =
                    ramsey_probability(TAU * 17e3, delta_mw, t, &spectrum, 71e-6, mode).unwrap();
                assert!((generic - fast).abs() < 1e-12, "mode {mode:?} t {t}: {generic} vs {fast}");
            }
        }
    }

    #[test]
    fn generic_interpreter_matches_specialized_echo() {
        let spectrum = test_spectrum();
        let delta_mw = -TAU * 5e3;
        let t_echo = 0.8e-3;
        let (c, phi) = (0.7, 0.15);
        for mode in [PulseMode::Ideal, PulseMode::Detuned] {
            for k in 0..20 {
                let t_d = t_echo / 2.0 + k as f64 * 47e-6;
                let mut half = PulseSpec::ideal(FRAC_PI_2);
                half.mode = mode;
                half.rabi_frequency = TAU * 17e3;
                let mut pi_pulse = PulseSpec::ideal(PI);
                pi_pulse.mode = mode;
                pi_pulse.rabi_frequency = TAU * 17e3;
                let mut seq = SequenceSpec::new(vec![
                    SequenceElement::Pulse(half),
                    SequenceElement::Delay(t_echo / 2.0),
                    SequenceElement::Pulse(pi_pulse),
                    SequenceElement::Delay(t_d - t_echo / 2.0),
                    SequenceElement::Pulse(half.with_phase(phi)),
                ]);
                seq.microwave_detuning = delta_mw;
                seq.dephasing_factor = Some(c);
                let generic = evaluate_sequence(&seq, &spectrum, 71e-6).unwrap();
                let fast = echo_probability(
                    TAU * 17e3, delta_mw, t_d, t_echo, c, phi, &spectrum, 71e-6, mode,
                )
                .unwrap();
                assert!((generic - fast).abs() < 1e-12, "mode {mode:?}: {generic} vs {fast}");
            }
        }
    }

    #[test]
    fn perfect_echo_refocuses_for_any_spectrum_and_temperature() {
        let spectra = [
            VibrationalSpectrum::harmonic(TAU * 200e3, 40, -TAU * 7e3, TAU * 80.0),
            VibrationalSpectrum::harmonic(TAU * 150e3, 25, TAU * 2e3, -TAU * 400.0),
            VibrationalSpectrum::harmonic(TAU * 310e3, 60, -TAU * 1e3, TAU * 15.0),
        ];
        for spectrum in &spectra {
            for temp in [20e-6, 71e-6, 150e-6] {
                for t_echo in [0.2e-3, 1.0e-3, 3.0e-3] {
                    let p = echo_probability(
                        TAU * 17e3,
                        -TAU * 5e3,
                        t_echo,
                        t_echo,
                        1.0,
                        0.0,
                        spectrum,
                        temp,
                        PulseMode::Ideal,
                    )
                    .unwrap();
                    assert!(p.abs() < 1e-10, "refocus failed: p = {p:e}");
                }
            }
        }
    }

    #[test]
    fn fully_dephased_echo_pins_one_half() {
        let spectrum = test_spectrum();
        for t_d in [0.5e-3, 1.1e-3, 2.9e-3] {
            let p = echo_probability(
                TAU * 17e3, -TAU * 5e3, t_d, 0.8e-3, 0.0, 0.0, &spectrum, 71e-6, PulseMode::Ideal,
            )
            .unwrap();
            assert_relative_eq!(p, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn echo_fringe_amplitude_scales_with_coherence_factor() {
        // peak-to-trough amplitude near t_d = t_echo equals C times the
        // amplitude of a vanishing echo time, comparing two forward
        // simulations
        let spectrum = test_spectrum();
        let c = 0.63;
        let amplitude = |t_echo: f64, c: f64| -> f64 {
            let times: Vec<f64> =
                (0..241).map(|k| (t_echo - 0.4e-3).max(t_echo / 2.0) + k as f64 * 4e-6).collect();
            let p = echo_scan(
                TAU * 17e3, -TAU * 5e3, &times, t_echo, c, 0.0, &spectrum, 71e-6, PulseMode::Ideal,
            )
            .unwrap();
            let max = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = p.iter().cloned().fold(f64::INFINITY, f64::min);
            max - min
        };
        let with_c = amplitude(2e-3, c);
        let reference = amplitude(4e-6, 1.0);
        let ratio = with_c / reference;
        assert!((ratio - c).abs() < 0.05 * c, "amplitude ratio {ratio} vs C = {c}");
    }

    #[test]
    fn echo_timing_validation() {
        let spectrum = test_spectrum();
        let err = echo_probability(
            TAU * 17e3, 0.0, 0.3e-3, 1.0e-3, 1.0, 0.0, &spectrum, 71e-6, PulseMode::Ideal,
        );
        assert!(matches!(err, Err(SpinError::InvalidTiming(_))));
    }

    #[test]
    fn consecutive_delays_compose() {
        let spectrum = test_spectrum();
        let mut a = ramsey_spec(0.0, -TAU * 5e3, PulseMode::Ideal);
        a.elements = vec![
            SequenceElement::Pulse(PulseSpec::ideal(FRAC_PI_2)),
            SequenceElement::Delay(0.13e-3),
            SequenceElement::Delay(0.27e-3),
            SequenceElement::Pulse(PulseSpec::ideal(FRAC_PI_2)),
        ];
        let b = ramsey_spec(0.40e-3, -TAU * 5e3, PulseMode::Ideal);
        let pa = evaluate_sequence(&a, &spectrum, 71e-6).unwrap();
        let pb = evaluate_sequence(&b, &spectrum, 71e-6).unwrap();
        assert_relative_eq!(pa, pb, epsilon = 1e-12);
    }

    #[test]
    fn empty_sequence_stays_in_ground_state() {
        let spectrum = test_spectrum();
        let seq = SequenceSpec::new(vec![]);
        assert_eq!(evaluate_sequence(&seq, &spectrum, 71e-6).unwrap(), 0.0);
    }

    #[test]
    fn rabi_resonant_pi_pulse_is_complete_at_zero_temperature() {
        // resonant: δ_MW equals the ground-state light shift
        let spectrum = test_spectrum();
        let omega0 = TAU * 17e3;
        let t_pi = PI / omega0;
        let p = rabi_probability(omega0, spectrum.light_shift(0), t_pi, &spectrum, 0.0, 0.0).unwrap();
        assert_relative_eq!(p, 1.0, epsilon = 1e-12);
        let p0 = rabi_probability(omega0, spectrum.light_shift(0), 0.0, &spectrum, 71e-6, 0.0).unwrap();
        assert_eq!(p0, 0.0);
    }

    #[test]
    fn rabi_damping_contracts_toward_one_half() {
        let spectrum = test_spectrum();
        let omega0 = TAU * 17e3;
        let rate = 1.0 / 3.4e-3;
        // sample an envelope peak: at resonance and T = 0 the undamped signal
        // returns to 1 at full periods
        let t = 3.4e-3;
        let cycles = (t * omega0 / TAU).round();
        let t_peak = cycles * TAU / omega0;
        let p = rabi_probability(omega0, spectrum.light_shift(0), t_peak, &spectrum, 0.0, rate).unwrap();
        let undamped =
            rabi_probability(omega0, spectrum.light_shift(0), t_peak, &spectrum, 0.0, 0.0).unwrap();
        let contraction = (p - 0.5) / (undamped - 0.5);
        assert_relative_eq!(contraction, (-t_peak * rate).exp(), epsilon = 1e-12);
    }

    #[test]
    fn scan_sequence_matches_ramsey_over_grid() {
        let spectrum = test_spectrum();
        let delta_mw = -TAU * 5e3;
        let seq = ramsey_spec(0.0, delta_mw, PulseMode::Ideal);
        let times: Vec<f64> = (0..30).map(|k| k as f64 * 17e-6).collect();
        let scanned = scan_sequence(&seq, &spectrum, 71e-6, &times).unwrap();
        let direct =
            ramsey_scan(TAU * 17e3, delta_mw, &times, &spectrum, 71e-6, PulseMode::Ideal).unwrap();
        for (a, b) in scanned.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ramsey_fringe_frequency_equals_effective_detuning_at_zero_t() {
        let spectrum = test_spectrum();
        let delta_mw = -TAU * 5e3;
        let delta0 = (spectrum.light_shift(0) - delta_mw).abs();
        let dt = 1e-6;
        let times: Vec<f64> = (0..2000).map(|k| k as f64 * dt).collect();
        let p = ramsey_scan(TAU * 17e3, delta_mw, &times, &spectrum, 0.0, PulseMode::Ideal).unwrap();
        // zero crossings of p - 1/2 are spaced by half a fringe period
        let mut crossings = Vec::new();
        for i in 1..p.len() {
            if (p[i - 1] - 0.5) * (p[i] - 0.5) < 0.0 {
                crossings.push(times[i]);
            }
        }
        assert!(crossings.len() > 4);
        let spacing = (crossings.last().unwrap() - crossings[0]) / (crossings.len() - 1) as f64;
        let measured = PI / spacing;
        assert!((measured - delta0).abs() < TAU / (times.len() as f64 * dt));
    }

    #[test]
    fn mixture_of_temperatures_averages_linearly() {
        let spectrum = test_spectrum();
        let (t_hot, t_cold, w) = (120e-6, 30e-6, 0.35);
        let seq = ramsey_spec(0.4e-3, -TAU * 5e3, PulseMode::Ideal);
        let p_hot = evaluate_sequence(&seq, &spectrum, t_hot).unwrap();
        let p_cold = evaluate_sequence(&seq, &spectrum, t_cold).unwrap();
        // mixture = weighted ensemble: evaluate per state and mix thermal
        // weights directly
        let wa = boltzmann_weights(&spectrum, t_cold).unwrap();
        let wb = boltzmann_weights(&spectrum, t_hot).unwrap();
        let per_state: Vec<f64> = (0..spectrum.levels())
            .map(|n| seq.evaluate_for_state(spectrum.light_shift(n)))
            .collect();
        let mixed: f64 = (0..spectrum.levels())
            .map(|n| (w * wa.weights()[n] + (1.0 - w) * wb.weights()[n]) * per_state[n])
            .sum();
        assert_relative_eq!(mixed, w * p_cold + (1.0 - w) * p_hot, epsilon = 1e-12);
    }

    proptest! {
        // shifting δ_MW and every δ_ls(n) by the same constant leaves the
        // physics unchanged (only differences enter)
        #[test]
        fn detuning_shift_covariance(shift_khz in -50.0f64..50.0, t_us in 0.0f64..800.0) {
            let base = test_spectrum();
            let delta_mw = -TAU * 5e3;
            let shift = TAU * shift_khz * 1e3;
            let shifted = VibrationalSpectrum::harmonic(
                TAU * 200e3, 40, -TAU * 7e3 + shift, TAU * 80.0);
            let t = t_us * 1e-6;
            let p0 = ramsey_probability(TAU * 17e3, delta_mw, t, &base, 71e-6, PulseMode::Detuned).unwrap();
            let p1 = ramsey_probability(TAU * 17e3, delta_mw + shift, t, &shifted, 71e-6, PulseMode::Detuned).unwrap();
            prop_assert!((p0 - p1).abs() < 1e-9, "p0 = {p0}, p1 = {p1}");
        }

        // every intermediate state of a random ideal-pulse program is a valid
        // density matrix (checked inside the interpreter in debug builds)
        #[test]
        fn random_programs_produce_probabilities(
            angles in proptest::collection::vec(0.05f64..TAU, 1..5),
            delays_us in proptest::collection::vec(0.0f64..500.0, 1..5),
            c in 0.0f64..1.0,
        ) {
            let mut elements = Vec::new();
            for (i, &a) in angles.iter().enumerate() {
                elements.push(SequenceElement::Pulse(PulseSpec::ideal(a)));
                if let Some(&d) = delays_us.get(i) {
                    elements.push(SequenceElement::Delay(d * 1e-6));
                }
            }
            let mut seq = SequenceSpec::new(elements);
            seq.microwave_detuning = -TAU * 5e3;
            seq.dephasing_factor = Some(c);
            let p = evaluate_sequence(&seq, &test_spectrum(), 71e-6).unwrap();
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p));
        }
    }
}
