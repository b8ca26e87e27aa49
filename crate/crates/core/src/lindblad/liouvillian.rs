//! The heating Liouvillian in structured form.

use nalgebra::DMatrix;

use crate::constants::{HBAR, KB};
use crate::error::LindbladError;
use crate::trap::VibrationalSpectrum;
use crate::C64;

/// Parameters of the heating master equation.
#[derive(Debug, Clone)]
pub struct HeatingModel {
    /// Jump rate κ in 1/s, common to the raising and lowering channels.
    pub kappa: f64,
    /// Level energies and light shifts; must cover `n_max`.
    pub spectrum: VibrationalSpectrum,
    /// Phonon-space truncation; `a†|n_max⟩ = 0`.
    pub n_max: usize,
    /// Integrator tolerance (mixed absolute/relative per matrix element).
    pub tolerance: f64,
}

impl HeatingModel {
    pub fn validate(&self) -> Result<(), LindbladError> {
        if self.kappa.is_nan() || self.kappa < 0.0 || !self.kappa.is_finite() {
            return Err(LindbladError::InvalidModel(format!("jump rate κ = {}", self.kappa)));
        }
        if self.n_max < 1 {
            return Err(LindbladError::InvalidModel("n_max must be at least 1".into()));
        }
        if self.spectrum.levels() < self.n_max + 1 {
            return Err(LindbladError::InvalidModel(format!(
                "spectrum has {} levels but n_max = {} needs {}",
                self.spectrum.levels(),
                self.n_max,
                self.n_max + 1
            )));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 || self.tolerance > 1e-2 {
            return Err(LindbladError::InvalidModel(format!(
                "integrator tolerance {} outside (0, 1e-2]",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// Conversion of the jump rate to a heating rate in temperature units:
/// `γ = κ (E₁ - E₀) / k_B`, using the level spacing at the bottom of the
/// well as the thermal-energy quantum.
pub fn heating_rate_kelvin_per_s(model: &HeatingModel) -> f64 {
    model.kappa * HBAR * (model.spectrum.energy(1) - model.spectrum.energy(0)) / KB
}

/// Structured action of the Liouvillian
/// `Lϱ = -i[H₀, ϱ] + κ Σ_± (L_± ϱ L_±† - ½{L_±† L_±, ϱ})` with
/// `H₀ = (δ_ls(n̂) - δ_MW) σ_z / 2`, `L₋ = a`, `L₊ = a†`, truncated so that
/// `a†|n_max⟩ = 0`.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    /// Diagonal of H₀ over the joint basis, rad/s.
    hdiag: Vec<f64>,
    kappa: f64,
    n_levels: usize,
}

/// Builds the Liouvillian action for the model at the given microwave
/// detuning.
pub fn build_liouvillian(model: &HeatingModel, delta_mw: f64) -> Result<Liouvillian, LindbladError> {
    model.validate()?;
    let n_levels = model.n_max + 1;
    let mut hdiag = vec![0.0; 2 * n_levels];
    for n in 0..n_levels {
        let detuning = model.spectrum.light_shift(n) - delta_mw;
        hdiag[n] = 0.5 * detuning; // spin e
        hdiag[n_levels + n] = -0.5 * detuning; // spin g
    }
    Ok(Liouvillian { hdiag, kappa: model.kappa, n_levels })
}

impl Liouvillian {
    pub fn dim(&self) -> usize {
        2 * self.n_levels
    }

    /// `out = L ϱ`. Trace-free by construction (the gain terms re-inject
    /// exactly what the anticommutators remove, including at the truncation
    /// edge where `a†|n_max⟩ = 0`).
    pub fn apply(&self, rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        let d = self.dim();
        let nl = self.n_levels;
        let n_max = nl - 1;
        debug_assert_eq!(rho.nrows(), d);
        let r = rho.as_slice();
        let o = out.as_mut_slice();
        let kappa = self.kappa;
        // column-major: element (i, j) lives at i + j d
        // the jump operators act on the phonon index alone, so only n_i and
        // n_j enter the dissipator; the spin index rides along in i, j
        for j in 0..d {
            let nj = j % nl;
            let hj = self.hdiag[j];
            let wj = if nj < n_max { (nj + 1) as f64 } else { 0.0 };
            for i in 0..d {
                let ni = i % nl;
                let hi = self.hdiag[i];
                let wi = if ni < n_max { (ni + 1) as f64 } else { 0.0 };

                let mut acc = C64::new(0.0, -(hi - hj)) * r[i + j * d];

                if kappa > 0.0 {
                    // a ϱ a†: pulls from (n_i + 1, n_j + 1)
                    if ni < n_max && nj < n_max {
                        let amp = (((ni + 1) * (nj + 1)) as f64).sqrt();
                        acc += kappa * amp * r[(i + 1) + (j + 1) * d];
                    }
                    // a† ϱ a: pulls from (n_i - 1, n_j - 1)
                    if ni > 0 && nj > 0 {
                        let amp = ((ni * nj) as f64).sqrt();
                        acc += kappa * amp * r[(i - 1) + (j - 1) * d];
                    }
                    // -½{a†a + a a†, ϱ} on both sides
                    let damp = 0.5 * (ni as f64 + nj as f64 + wi + wj);
                    acc -= kappa * damp * r[i + j * d];
                }
                o[i + j * d] = acc;
            }
        }
    }

    /// Explicit superoperator matrix acting on the column-major vectorization
    /// of ϱ. Reference path for tests; O(d⁴) storage.
    pub fn dense_superoperator(&self) -> DMatrix<C64> {
        let d = self.dim();
        let mut sup = DMatrix::zeros(d * d, d * d);
        let mut basis = DMatrix::zeros(d, d);
        let mut image = DMatrix::zeros(d, d);
        for col in 0..d * d {
            let (i, j) = (col % d, col / d);
            basis[(i, j)] = C64::new(1.0, 0.0);
            self.apply(&basis, &mut image);
            for row in 0..d * d {
                sup[(row, col)] = image[(row % d, row / d)];
            }
            basis[(i, j)] = C64::new(0.0, 0.0);
        }
        sup
    }
}
