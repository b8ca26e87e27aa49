//! Thermal occupation of the vibrational levels.

use crate::constants::{HBAR, KB};
use crate::error::TrapError;

use super::spectrum::VibrationalSpectrum;

/// Boltzmann occupation probabilities over a truncated level set.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalDistribution {
    temperature: f64,
    weights: Vec<f64>,
}

impl ThermalDistribution {
    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// `P(n, T)` for `n = 0..=n_max`, normalized over the truncated basis.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean_phonon_number(&self) -> f64 {
        self.weights.iter().enumerate().map(|(n, w)| n as f64 * w).sum()
    }
}

/// Boltzmann weights `P(n, T) ∝ exp(-E_n / k_B T)` renormalized over the
/// spectrum's levels. `T = 0` concentrates all population in the ground
/// state; negative temperatures are rejected.
pub fn boltzmann_weights(
    spectrum: &VibrationalSpectrum,
    temperature: f64,
) -> Result<ThermalDistribution, TrapError> {
    if temperature.is_nan() || temperature < 0.0 {
        return Err(TrapError::NegativeTemperature(temperature));
    }
    let n_levels = spectrum.levels();
    let mut weights = vec![0.0; n_levels];
    if temperature == 0.0 {
        weights[0] = 1.0;
        return Ok(ThermalDistribution { temperature, weights });
    }
    // energies are referenced to the ground state so the exponentials stay
    // well-scaled regardless of the spectrum's absolute offset
    let e0 = spectrum.energy(0);
    let beta = HBAR / (KB * temperature);
    let mut total = 0.0;
    for (n, w) in weights.iter_mut().enumerate() {
        *w = (-(spectrum.energy(n) - e0) * beta).exp();
        total += *w;
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(ThermalDistribution { temperature, weights })
}
