//! Pulse and free-evolution operators.

use nalgebra::Matrix2;

use crate::error::SpinError;
use crate::C64;

/// How a pulse responds to the state-dependent detuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PulseMode {
    /// Instantaneous rotation by the nominal angle, detuning ignored.
    #[default]
    Ideal,
    /// Finite-duration rotation generated by `(δ σ_z + Ω₀ σ_φ)/2` for the
    /// time `t_p = θ/Ω₀`, so the achieved rotation depends on `δ`.
    Detuned,
}

/// One microwave pulse: nominal rotation angle about an equatorial axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    /// Rotation angle θ in radians (about the y-axis for `phase = 0`).
    pub nominal_angle: f64,
    /// Resonant Rabi frequency Ω₀ in rad/s; sets the duration in detuned
    /// mode. Must be positive there.
    pub rabi_frequency: f64,
    /// Rotation-axis angle in the equatorial plane, radians from the y-axis.
    pub phase: f64,
    pub mode: PulseMode,
}

impl PulseSpec {
    pub fn ideal(angle: f64) -> Self {
        PulseSpec { nominal_angle: angle, rabi_frequency: 0.0, phase: 0.0, mode: PulseMode::Ideal }
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    /// Pulse duration `t_p = θ/Ω₀` (detuned mode only).
    pub fn duration(&self) -> f64 {
        match self.mode {
            PulseMode::Ideal => 0.0,
            PulseMode::Detuned => self.nominal_angle / self.rabi_frequency,
        }
    }

    pub fn validate(&self) -> Result<(), SpinError> {
        if !self.nominal_angle.is_finite() || !self.phase.is_finite() {
            return Err(SpinError::InvalidSequence("non-finite pulse parameter".into()));
        }
        if self.mode == PulseMode::Detuned
            && (self.rabi_frequency.is_nan() || self.rabi_frequency <= 0.0)
        {
            return Err(SpinError::InvalidSequence(
                "detuned pulses require a positive Rabi frequency".into(),
            ));
        }
        Ok(())
    }
}

/// Unitary of one pulse, given the effective detuning `δ = δ_ls(n) - δ_MW`
/// seen by the addressed vibrational state.
///
/// In ideal mode this is `exp(-i θ σ_φ / 2)`; in detuned mode it is
/// `exp(-i t_p (δ σ_z + Ω₀ σ_φ)/2)` with `t_p = θ/Ω₀`, evaluated in closed
/// form from the Rabi vector, so the result is unitary to machine precision.
pub fn pulse_operator(pulse: &PulseSpec, effective_detuning: f64) -> Matrix2<C64> {
    match pulse.mode {
        PulseMode::Ideal => rotation(pulse.nominal_angle, pulse.phase),
        PulseMode::Detuned => {
            let omega = pulse.rabi_frequency;
            let delta = effective_detuning;
            let omega_eff = (omega * omega + delta * delta).sqrt();
            let t_p = pulse.duration();
            let alpha = 0.5 * omega_eff * t_p;
            if omega_eff == 0.0 {
                return Matrix2::identity();
            }
            // axis components: n_z = δ/Ω_eff, equatorial part Ω₀/Ω_eff
            // rotated by the pulse phase
            let (c, s) = (alpha.cos(), alpha.sin());
            let nz = delta / omega_eff;
            let ny = omega / omega_eff;
            let e_phase = C64::new(0.0, -pulse.phase).exp();
            // exp(-iα n·σ) = cos α · I - i sin α · (n_z σ_z + n_y σ_y(φ))
            Matrix2::new(
                C64::new(c, -s * nz),
                -s * ny * e_phase,
                s * ny * e_phase.conj(),
                C64::new(c, s * nz),
            )
        }
    }
}

/// Ideal rotation `exp(-i θ σ_φ/2)` about the equatorial axis at angle
/// `phase` from y.
fn rotation(theta: f64, phase: f64) -> Matrix2<C64> {
    let (c, s) = ((0.5 * theta).cos(), (0.5 * theta).sin());
    let e_phase = C64::new(0.0, -phase).exp();
    Matrix2::new(
        C64::new(c, 0.0),
        -s * e_phase,
        s * e_phase.conj(),
        C64::new(c, 0.0),
    )
}

/// Free-evolution unitary `exp(-i δ t σ_z / 2)`: the (e, g) amplitudes pick
/// up phases ∓ δ t / 2.
pub fn free_evolution(detuning: f64, t: f64) -> Matrix2<C64> {
    let half = 0.5 * detuning * t;
    Matrix2::new(
        C64::new(half.cos(), -half.sin()),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(half.cos(), half.sin()),
    )
}
