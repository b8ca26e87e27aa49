//! Vibrational spectrum with state-dependent differential light shifts.

use crate::error::TrapError;
use crate::C64;

use super::eigensolver::EigenBasis;
use super::potential::RadialPotentialModel;
use super::thermal::boltzmann_weights;

/// Grid metadata carried along with a spectrum (absent for table-backed
/// spectra).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMeta {
    pub spacing: f64,
    pub extent: f64,
    pub points: usize,
}

/// Radial eigenenergies and differential light shifts for `n = 0..=n_max`.
///
/// Energies and shifts are angular frequencies in rad/s. The energy zero is
/// immaterial to every consumer (thermal weights and detunings depend only on
/// differences), so table files store energies relative to the ground state.
#[derive(Debug, Clone, PartialEq)]
pub struct VibrationalSpectrum {
    energies: Vec<f64>,
    light_shifts: Vec<f64>,
    grid: Option<GridMeta>,
}

impl VibrationalSpectrum {
    /// Builds a spectrum from raw level data, enforcing the solver-output
    /// invariants (matching lengths, strictly increasing energies).
    pub fn new(
        energies: Vec<f64>,
        light_shifts: Vec<f64>,
        grid: Option<GridMeta>,
    ) -> Result<Self, TrapError> {
        if energies.is_empty() {
            return Err(TrapError::InvalidSpectrum("no levels".into()));
        }
        if energies.len() != light_shifts.len() {
            return Err(TrapError::InvalidSpectrum(format!(
                "{} energies but {} light shifts",
                energies.len(),
                light_shifts.len()
            )));
        }
        if energies.iter().any(|e| !e.is_finite()) || light_shifts.iter().any(|d| !d.is_finite()) {
            return Err(TrapError::InvalidSpectrum("non-finite level data".into()));
        }
        for (n, w) in energies.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(TrapError::InvalidSpectrum(format!(
                    "energies not strictly increasing at n = {}",
                    n + 1
                )));
            }
        }
        Ok(VibrationalSpectrum { energies, light_shifts, grid })
    }

    pub fn n_max(&self) -> usize {
        self.energies.len() - 1
    }

    pub fn levels(&self) -> usize {
        self.energies.len()
    }

    /// Eigenenergies in rad/s, ascending.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Differential light shifts δ_ls(n) in rad/s.
    pub fn light_shifts(&self) -> &[f64] {
        &self.light_shifts
    }

    pub fn energy(&self, n: usize) -> f64 {
        self.energies[n]
    }

    pub fn light_shift(&self, n: usize) -> f64 {
        self.light_shifts[n]
    }

    pub fn grid(&self) -> Option<GridMeta> {
        self.grid
    }

    /// Restriction to the lowest `n_max + 1` levels.
    pub fn truncated(&self, n_max: usize) -> Result<Self, TrapError> {
        if n_max + 1 > self.levels() {
            return Err(TrapError::InvalidSpectrum(format!(
                "cannot truncate {} levels to n_max = {n_max}",
                self.levels()
            )));
        }
        Ok(VibrationalSpectrum {
            energies: self.energies[..=n_max].to_vec(),
            light_shifts: self.light_shifts[..=n_max].to_vec(),
            grid: self.grid,
        })
    }

    /// Uniform harmonic ladder with affine light shifts; used as an analytic
    /// reference spectrum in tests and examples.
    pub fn harmonic(
        level_spacing: f64,
        n_max: usize,
        shift_offset: f64,
        shift_slope: f64,
    ) -> Self {
        let energies = (0..=n_max).map(|n| n as f64 * level_spacing).collect();
        let light_shifts = (0..=n_max).map(|n| shift_offset + shift_slope * n as f64).collect();
        VibrationalSpectrum { energies, light_shifts, grid: None }
    }
}

/// Evaluates `δ_ls(n) = ⟨n| s_b U_b(r) + s_r U_r(r) |n⟩ / ħ` by grid
/// quadrature over the eigenfunctions, returning a complete spectrum.
pub fn differential_light_shift(
    basis: &EigenBasis,
    model: &RadialPotentialModel,
    shift_scale_blue: f64,
    shift_scale_red: f64,
) -> Result<VibrationalSpectrum, TrapError> {
    if !shift_scale_blue.is_finite() || !shift_scale_red.is_finite() {
        return Err(TrapError::InvalidSpectrum("non-finite light-shift scale".into()));
    }
    let shifts: Vec<f64> = (0..basis.energies.len())
        .map(|n| {
            basis.expectation(n, |r| {
                shift_scale_blue * model.blue_term(r) + shift_scale_red * model.red_term(r)
            }) / crate::constants::HBAR
        })
        .collect();
    let energies: Vec<f64> =
        basis.energies.iter().map(|e| e / crate::constants::HBAR).collect();
    let grid = GridMeta {
        spacing: basis.grid.spacing(),
        extent: basis.grid.extent,
        points: basis.grid.points,
    };
    VibrationalSpectrum::new(energies, shifts, Some(grid))
}

/// Thermal Ramsey fringe envelope `|Σ_n P(n,T) e^{-i δ_ls(n) t}|`, the
/// contrast of the ensemble-averaged fringe at delay `t` for ideal pulses.
pub fn ramsey_envelope(spectrum: &VibrationalSpectrum, temperature: f64, t: f64) -> f64 {
    let weights = match boltzmann_weights(spectrum, temperature) {
        Ok(w) => w,
        Err(_) => return f64::NAN,
    };
    let mut acc = C64::new(0.0, 0.0);
    for (n, &w) in weights.weights().iter().enumerate() {
        let phase = -spectrum.light_shift(n) * t;
        acc += w * C64::new(phase.cos(), phase.sin());
    }
    acc.norm()
}

/// Finds the single light-shift scale `s = s_b = s_r` for which the thermal
/// Ramsey envelope at `temperature` first drops to 50% at `target_t2star`.
///
/// Because the envelope depends on the scale and the delay only through their
/// product, one envelope evaluation at unit scale fixes the answer exactly:
/// `s = t*(s=1) / target`.
pub fn calibrate_lightshift_scale(
    basis: &EigenBasis,
    model: &RadialPotentialModel,
    temperature: f64,
    target_t2star: f64,
) -> Result<f64, TrapError> {
    if target_t2star.is_nan() || target_t2star <= 0.0 {
        return Err(TrapError::InvalidSpectrum("target coherence time must be positive".into()));
    }
    let unit = differential_light_shift(basis, model, 1.0, 1.0)?;
    let half_time = envelope_half_time(&unit, temperature)?;
    Ok(half_time / target_t2star)
}

/// First delay at which the thermal Ramsey envelope crosses one half.
pub fn envelope_half_time(
    spectrum: &VibrationalSpectrum,
    temperature: f64,
) -> Result<f64, TrapError> {
    // Characteristic dephasing scale: spread of the shifts over the thermal
    // ensemble sets the time scale of the initial decay.
    let weights = boltzmann_weights(spectrum, temperature)?;
    let mean: f64 = weights
        .weights()
        .iter()
        .zip(spectrum.light_shifts())
        .map(|(w, d)| w * d)
        .sum();
    let var: f64 = weights
        .weights()
        .iter()
        .zip(spectrum.light_shifts())
        .map(|(w, d)| w * (d - mean) * (d - mean))
        .sum();
    let sigma = var.sqrt();
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(TrapError::InvalidSpectrum(
            "light shifts have no thermal spread; envelope never decays".into(),
        ));
    }
    // march in steps small against the decay scale until the envelope drops
    // below 1/2, then bisect the bracketing interval
    let dt = 0.02 / sigma;
    let mut t_prev = 0.0;
    let mut t = dt;
    let mut steps = 0;
    while ramsey_envelope(spectrum, temperature, t) > 0.5 {
        t_prev = t;
        t += dt;
        steps += 1;
        if steps > 2_000_000 {
            return Err(TrapError::InvalidSpectrum("envelope does not reach 50%".into()));
        }
    }
    let (mut lo, mut hi) = (t_prev, t);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if ramsey_envelope(spectrum, temperature, mid) > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{CESIUM_MASS, HBAR, KB};
    use crate::trap::{calibrate_potential, solve_eigenstates, GridSpec};
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    fn calibrated() -> (RadialPotentialModel, EigenBasis) {
        let model =
            calibrate_potential(TAU * 200e3, 200e-9, (260e-9, 585e-9), 0.0, CESIUM_MASS).unwrap();
        let basis = solve_eigenstates(&model, 70, GridSpec::for_model(&model)).unwrap();
        (model, basis)
    }

    #[test]
    fn zero_scales_give_zero_shifts() {
        let (model, basis) = calibrated();
        let spectrum = differential_light_shift(&basis, &model, 0.0, 0.0).unwrap();
        assert!(spectrum.light_shifts().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn harmonic_shift_is_affine_by_virial_theorem() {
        // For a shift proportional to a harmonic potential itself the virial
        // theorem gives ⟨n|U|n⟩ = E_n/2 (with U_min = 0), so δ_ls(n) is
        // affine in n. Check the grid quadrature against the analytic value.
        let omega = TAU * 200e3;
        let center = 500e-9;
        let grid = GridSpec { points: 8000, extent: 2.0 * center };
        let u = move |r: f64| 0.5 * CESIUM_MASS * omega * omega * (r - center).powi(2);
        let basis = crate::trap::solve_potential(u, CESIUM_MASS, 6, grid, None).unwrap();
        for n in 0..6 {
            let mean_u = basis.expectation(n, u);
            let virial = 0.5 * HBAR * omega * (n as f64 + 0.5);
            assert_relative_eq!(mean_u, virial, max_relative = 1e-4);
            // affine in n: increments equal ħω/2
            if n > 0 {
                let prev = basis.expectation(n - 1, u);
                assert_relative_eq!(mean_u - prev, 0.5 * HBAR * omega, max_relative = 1e-4);
            }
        }
    }

    #[test]
    fn calibrated_well_virial_check_near_bottom() {
        let (model, basis) = calibrated();
        let u_min = model.evaluate(model.minimum_position());
        // near the bottom the well is harmonic: ⟨U⟩_0 ≈ (E_0 + U_min)/2
        let mean_u = basis.expectation(0, |r| model.evaluate(r));
        let virial = 0.5 * (basis.energies[0] + u_min);
        assert_relative_eq!(mean_u, virial, max_relative = 2e-3);
    }

    #[test]
    fn shifts_monotonically_approach_zero_with_single_sign() {
        let (model, basis) = calibrated();
        let spectrum = differential_light_shift(&basis, &model, 1e-3, 1e-3).unwrap();
        let shifts = spectrum.light_shifts();
        assert!(shifts.iter().all(|&d| d < 0.0));
        for n in 0..shifts.len() - 1 {
            assert!(
                shifts[n + 1].abs() < shifts[n].abs(),
                "|δ_ls| grew from n = {n}: {} -> {}",
                shifts[n],
                shifts[n + 1]
            );
        }
    }

    #[test]
    fn scale_calibration_pins_envelope_half_time() {
        let (model, basis) = calibrated();
        let target = 0.6e-3;
        let temp = 71e-6;
        let scale = calibrate_lightshift_scale(&basis, &model, temp, target).unwrap();
        let spectrum = differential_light_shift(&basis, &model, scale, scale).unwrap();
        let t_half = envelope_half_time(&spectrum, temp).unwrap();
        assert_relative_eq!(t_half, target, max_relative = 1e-9);
        // scale required for sub-millisecond decay separates levels 0 and 20
        // by roughly a kilohertz
        let gap = (spectrum.light_shift(0) - spectrum.light_shift(20)).abs();
        assert!(gap > TAU * 0.3e3 && gap < TAU * 10e3, "gap = {:.3e} rad/s", gap);
    }

    #[test]
    fn envelope_at_zero_delay_is_unity() {
        let spectrum = VibrationalSpectrum::harmonic(TAU * 200e3, 40, -TAU * 5e3, TAU * 60.0);
        assert_relative_eq!(ramsey_envelope(&spectrum, 50e-6, 0.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn truncation_too_deep_is_rejected() {
        let spectrum = VibrationalSpectrum::harmonic(TAU * 200e3, 10, 0.0, 0.0);
        assert!(spectrum.truncated(10).is_ok());
        assert!(spectrum.truncated(11).is_err());
    }

    #[test]
    fn non_monotone_energies_rejected() {
        let err = VibrationalSpectrum::new(vec![0.0, 2.0, 1.0], vec![0.0; 3], None);
        assert!(matches!(err, Err(TrapError::InvalidSpectrum(_))));
    }

    #[test]
    fn thermal_tail_beyond_70_levels_is_small_at_71_uk() {
        // harmonic ladder with ħω = k_B · 9.6 µK; unnormalized Boltzmann tail
        // beyond n = 70 is q^71 < 1e-3 of the total geometric sum
        let spacing = KB * 9.6e-6 / HBAR;
        let q = (-(HBAR * spacing) / (KB * 71e-6)).exp();
        let tail = q.powi(71);
        assert!(tail < 1e-3, "tail = {tail:.2e}");
        let spectrum = VibrationalSpectrum::harmonic(spacing, 70, 0.0, 0.0);
        let w = boltzmann_weights(&spectrum, 71e-6).unwrap();
        let total: f64 = w.weights().iter().sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    }
}
