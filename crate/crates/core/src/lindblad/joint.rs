//! Joint spin ⊗ phonon density matrix.

use nalgebra::{DMatrix, Matrix2};

use crate::error::LindbladError;
use crate::trap::{boltzmann_weights, VibrationalSpectrum};
use crate::C64;

/// Density matrix of the joint system, dimension `2 (n_max + 1)`, basis
/// ordered spin ⊗ phonon: index `s (n_max + 1) + n` with `s = 0` the excited
/// and `s = 1` the ground spin state.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDensityMatrix {
    matrix: DMatrix<C64>,
    n_max: usize,
}

impl JointDensityMatrix {
    /// `|g⟩⟨g| ⊗ Σ_n P(n, T) |n⟩⟨n|` over the truncated phonon basis.
    pub fn thermal_ground(
        spectrum: &VibrationalSpectrum,
        n_max: usize,
        temperature: f64,
    ) -> Result<Self, LindbladError> {
        let truncated = spectrum.truncated(n_max)?;
        let weights = boltzmann_weights(&truncated, temperature)?;
        let n_levels = n_max + 1;
        let dim = 2 * n_levels;
        let mut matrix = DMatrix::zeros(dim, dim);
        for (n, &w) in weights.weights().iter().enumerate() {
            matrix[(n_levels + n, n_levels + n)] = C64::new(w, 0.0);
        }
        Ok(JointDensityMatrix { matrix, n_max })
    }

    pub fn from_matrix(matrix: DMatrix<C64>, n_max: usize) -> Result<Self, LindbladError> {
        if matrix.nrows() != 2 * (n_max + 1) || !matrix.is_square() {
            return Err(LindbladError::InvalidModel(format!(
                "matrix is {}x{}, expected {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols(),
                dim = 2 * (n_max + 1)
            )));
        }
        Ok(JointDensityMatrix { matrix, n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn phonon_levels(&self) -> usize {
        self.n_max + 1
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn matrix_mut(&mut self) -> &mut DMatrix<C64> {
        &mut self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diagonal().iter().sum()
    }

    /// Probability of finding the spin excited, `Σ_n ρ[(e,n),(e,n)]`.
    pub fn excited_population(&self) -> f64 {
        (0..self.phonon_levels()).map(|n| self.matrix[(n, n)].re).sum()
    }

    /// `tr(n̂ ρ)`.
    pub fn mean_phonon_number(&self) -> f64 {
        let n_levels = self.phonon_levels();
        let mut acc = 0.0;
        for s in 0..2 {
            for n in 0..n_levels {
                acc += n as f64 * self.matrix[(s * n_levels + n, s * n_levels + n)].re;
            }
        }
        acc
    }

    /// Applies an instantaneous spin rotation, identity on the phonons:
    /// `ρ → (u ⊗ I) ρ (u ⊗ I)†`.
    pub fn apply_spin_unitary(&mut self, u: &Matrix2<C64>) {
        let n_levels = self.phonon_levels();
        let dim = self.dim();
        let src = self.matrix.clone();
        let out = &mut self.matrix;
        for s in 0..2 {
            for sp in 0..2 {
                for n in 0..n_levels {
                    for np in 0..n_levels {
                        let mut acc = C64::new(0.0, 0.0);
                        for us in 0..2 {
                            for vs in 0..2 {
                                acc += u[(s, us)]
                                    * src[(us * n_levels + n, vs * n_levels + np)]
                                    * u[(sp, vs)].conj();
                            }
                        }
                        out[(s * n_levels + n, sp * n_levels + np)] = acc;
                    }
                }
            }
        }
        debug_assert_eq!(out.nrows(), dim);
    }

    /// Applies a spin rotation that depends on the phonon number (finite
    /// pulse duration under the state-dependent detuning): block-diagonal in
    /// `n` with the 2×2 unitary `us[n]` acting on the spin.
    pub fn apply_per_state_spin_unitaries(&mut self, us: &[Matrix2<C64>]) {
        let n_levels = self.phonon_levels();
        assert_eq!(us.len(), n_levels);
        let src = self.matrix.clone();
        let out = &mut self.matrix;
        for s in 0..2 {
            for sp in 0..2 {
                for n in 0..n_levels {
                    for np in 0..n_levels {
                        let mut acc = C64::new(0.0, 0.0);
                        for u_idx in 0..2 {
                            for v_idx in 0..2 {
                                acc += us[n][(s, u_idx)]
                                    * src[(u_idx * n_levels + n, v_idx * n_levels + np)]
                                    * us[np][(sp, v_idx)].conj();
                            }
                        }
                        out[(s * n_levels + n, sp * n_levels + np)] = acc;
                    }
                }
            }
        }
    }

    /// Checks Hermiticity and trace to `tol` and the eigenvalue floor
    /// (integrator drift budget) to `positivity_floor`.
    pub fn validate(&self, tol: f64, positivity_floor: f64) -> Result<(), LindbladError> {
        let m = &self.matrix;
        let herm = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > tol {
            return Err(LindbladError::InvalidModel(format!("hermiticity defect {herm:.2e}")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(LindbladError::InvalidModel(format!("trace drift {:.2e}", tr.re - 1.0)));
        }
        let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
        let eigs = sym.symmetric_eigenvalues();
        let min_eig = eigs.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        if min_eig < positivity_floor {
            return Err(LindbladError::InvalidModel(format!(
                "positivity floor violated (λ_min = {min_eig:.2e})"
            )));
        }
        Ok(())
    }
}
