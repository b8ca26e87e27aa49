//! 2×2 spin density matrix.

use nalgebra::Matrix2;

use crate::error::SpinError;
use crate::C64;

/// Hermitian, unit-trace, positive-semidefinite 2×2 density matrix with basis
/// order (e, g).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinDensityMatrix(Matrix2<C64>);

impl SpinDensityMatrix {
    /// Ground state |g⟩⟨g|.
    pub fn ground() -> Self {
        SpinDensityMatrix(Matrix2::new(
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ))
    }

    /// Pure state a|e⟩ + b|g⟩ (normalized by the caller).
    pub fn pure(a: C64, b: C64) -> Self {
        SpinDensityMatrix(Matrix2::new(
            a * a.conj(),
            a * b.conj(),
            b * a.conj(),
            b * b.conj(),
        ))
    }

    pub fn from_matrix(m: Matrix2<C64>) -> Result<Self, SpinError> {
        let rho = SpinDensityMatrix(m);
        rho.validate(1e-12)?;
        Ok(rho)
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.0
    }

    /// Excited-state population ρ_ee.
    pub fn population_e(&self) -> f64 {
        self.0[(0, 0)].re
    }

    /// Coherence ρ_eg.
    pub fn coherence(&self) -> C64 {
        self.0[(0, 1)]
    }

    /// Conjugation ρ → U ρ U†.
    pub fn evolved(&self, u: &Matrix2<C64>) -> Self {
        SpinDensityMatrix(u * self.0 * u.adjoint())
    }

    /// Multiplies the off-diagonal elements by `c`, leaving the populations
    /// untouched. Errors when `c` lies outside [0, 1].
    pub fn dephased(&self, c: f64) -> Result<Self, SpinError> {
        if !(0.0..=1.0).contains(&c) {
            return Err(SpinError::DephasingOutOfRange(c));
        }
        let mut m = self.0;
        m[(0, 1)] *= c;
        m[(1, 0)] *= c;
        Ok(SpinDensityMatrix(m))
    }

    /// Checks Hermiticity, unit trace and eigenvalue positivity to `tol`.
    pub fn validate(&self, tol: f64) -> Result<(), SpinError> {
        let m = &self.0;
        if (m[(0, 1)] - m[(1, 0)].conj()).norm() > tol
            || m[(0, 0)].im.abs() > tol
            || m[(1, 1)].im.abs() > tol
        {
            return Err(SpinError::InvalidDensityMatrix("hermiticity".into()));
        }
        let trace = m[(0, 0)].re + m[(1, 1)].re;
        if (trace - 1.0).abs() > tol {
            return Err(SpinError::InvalidDensityMatrix(format!("unit trace (tr = {trace})")));
        }
        // closed-form eigenvalues of a 2×2 Hermitian matrix
        let a = m[(0, 0)].re;
        let d = m[(1, 1)].re;
        let half_sum = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + m[(0, 1)].norm_sqr()).sqrt();
        if half_sum - rad < -tol {
            return Err(SpinError::InvalidDensityMatrix(format!(
                "positivity (λ_min = {})",
                half_sum - rad
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ground_state_is_valid() {
        let rho = SpinDensityMatrix::ground();
        rho.validate(1e-15).unwrap();
        assert_eq!(rho.population_e(), 0.0);
    }

    #[test]
    fn dephasing_identity_and_annihilation() {
        let plus = SpinDensityMatrix::pure(C64::new(1.0 / 2f64.sqrt(), 0.0), C64::new(1.0 / 2f64.sqrt(), 0.0));
        let same = plus.dephased(1.0).unwrap();
        assert_eq!(same, plus);
        let dead = plus.dephased(0.0).unwrap();
        assert_relative_eq!(dead.population_e(), 0.5, epsilon = 1e-15);
        assert_eq!(dead.coherence(), C64::new(0.0, 0.0));
        dead.validate(1e-12).unwrap();
    }

    #[test]
    fn partial_dephasing_scales_only_coherence() {
        let mut m = Matrix2::zeros();
        m[(0, 0)] = C64::new(0.3, 0.0);
        m[(1, 1)] = C64::new(0.7, 0.0);
        m[(0, 1)] = C64::new(0.4, 0.0);
        m[(1, 0)] = C64::new(0.4, 0.0);
        let rho = SpinDensityMatrix::from_matrix(m).unwrap();
        let out = rho.dephased(0.5).unwrap();
        assert_relative_eq!(out.coherence().re, 0.2, epsilon = 1e-15);
        assert_relative_eq!(out.population_e(), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn out_of_range_dephasing_is_rejected() {
        let rho = SpinDensityMatrix::ground();
        assert!(rho.dephased(-0.1).is_err());
        assert!(rho.dephased(1.1).is_err());
    }
}
