//! Finite-difference eigensolver for the 1D radial Schrödinger problem.
//!
//! The Hamiltonian `-(ħ²/2m) d²/dr² + U(r)` is discretized on a uniform grid
//! with hard-wall (Dirichlet) boundaries at the fiber surface and at the outer
//! edge of the window. The resulting symmetric tridiagonal matrix has constant
//! off-diagonals, so the lowest eigenvalues are found by Sturm-sequence
//! bisection and the eigenvectors by inverse iteration — O(grid) per state,
//! which keeps even 70-level solves on fine grids cheap.

use crate::constants::HBAR;
use crate::error::TrapError;
use crate::exec;

use super::potential::RadialPotentialModel;

/// Uniform radial grid specification: `points` interior samples between the
/// hard walls at `r = 0` and `r = extent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub points: usize,
    /// Outer wall position, meters from the fiber surface.
    pub extent: f64,
}

impl GridSpec {
    /// Default window: 4000 points out to five times the trap-minimum radius.
    pub fn for_model(model: &RadialPotentialModel) -> Self {
        GridSpec { points: 4000, extent: 5.0 * model.minimum_position() }
    }

    pub fn spacing(&self) -> f64 {
        self.extent / (self.points as f64 + 1.0)
    }

    /// Radius of interior sample `i`.
    pub fn radius(&self, i: usize) -> f64 {
        self.spacing() * (i as f64 + 1.0)
    }

    fn validate(&self) -> Result<(), TrapError> {
        if self.points < 16 {
            return Err(TrapError::InvalidGrid(format!("{} grid points is too few", self.points)));
        }
        if !(self.extent.is_finite() && self.extent > 0.0) {
            return Err(TrapError::InvalidGrid("grid extent must be positive".into()));
        }
        Ok(())
    }
}

/// Eigenpairs of the discretized radial Hamiltonian.
///
/// Wavefunctions are normalized under the grid inner product
/// `Σ ψ(r_i)² Δr = 1` and sign-fixed so that the first significant sample
/// (inner lobe) is positive.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    pub grid: GridSpec,
    /// Eigenenergies in joules, ascending, one per requested state.
    pub energies: Vec<f64>,
    /// `wavefunctions[n][i]` is ψ_n at grid point i.
    pub wavefunctions: Vec<Vec<f64>>,
}

impl EigenBasis {
    /// Grid-quadrature expectation value `⟨n| f(r) |n⟩`.
    pub fn expectation(&self, n: usize, f: impl Fn(f64) -> f64) -> f64 {
        let dr = self.grid.spacing();
        let mut acc = 0.0;
        for (i, psi) in self.wavefunctions[n].iter().enumerate() {
            acc += psi * psi * f(self.grid.radius(i));
        }
        acc * dr
    }

    /// Grid inner product `⟨m|n⟩`.
    pub fn overlap(&self, m: usize, n: usize) -> f64 {
        let dr = self.grid.spacing();
        let mut acc = 0.0;
        for (a, b) in self.wavefunctions[m].iter().zip(&self.wavefunctions[n]) {
            acc += a * b;
        }
        acc * dr
    }
}

/// Solves for the `n_max + 1` lowest eigenstates of the radial Hamiltonian.
///
/// Fails if fewer than `n_max + 1` bound states (E < 0, the continuum
/// threshold of the evanescent tail) exist, or if any computed eigenfunction
/// is clipped by the grid window.
pub fn solve_eigenstates(
    model: &RadialPotentialModel,
    n_max: usize,
    grid: GridSpec,
) -> Result<EigenBasis, TrapError> {
    model.validate()?;
    solve_potential(|r| model.evaluate(r), model.atom_mass, n_max + 1, grid, Some(0.0))
}

/// Lowest `n_states` eigenpairs of `-(ħ²/2m) d²/dr² + u(r)` on the grid, for
/// an arbitrary potential.
///
/// When `continuum_threshold` is given, the count of eigenvalues below it is
/// checked before any eigenvector work and a [`TrapError::TooFewBoundStates`]
/// is raised if it cannot cover the request.
pub fn solve_potential(
    u: impl Fn(f64) -> f64 + Sync,
    mass: f64,
    n_states: usize,
    grid: GridSpec,
    continuum_threshold: Option<f64>,
) -> Result<EigenBasis, TrapError> {
    grid.validate()?;
    if n_states == 0 || n_states > grid.points {
        return Err(TrapError::InvalidGrid(format!(
            "cannot extract {n_states} states from a {}-point grid",
            grid.points
        )));
    }
    let m = grid.points;
    let dr = grid.spacing();

    // Scale by the kinetic coefficient so the tridiagonal entries are O(1):
    // H/t has diagonal 2 + U/t and off-diagonal -1, with t = ħ²/(2 m Δr²).
    let kinetic = HBAR * HBAR / (2.0 * mass * dr * dr);
    let diag: Vec<f64> = (0..m).map(|i| 2.0 + u(grid.radius(i)) / kinetic).collect();

    if let Some(threshold) = continuum_threshold {
        let bound = sturm_count(&diag, threshold / kinetic);
        if bound < n_states {
            return Err(TrapError::TooFewBoundStates { available: bound, requested: n_states });
        }
    }

    let lambda_min = diag.iter().cloned().fold(f64::INFINITY, f64::min) - 2.0;
    let lambda_max = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 2.0;

    let pairs = exec::map_indexed(n_states, |k| {
        let lambda = bisect_eigenvalue(&diag, k, lambda_min, lambda_max);
        let mut psi = inverse_iteration(&diag, lambda);
        normalize_grid(&mut psi, dr);
        fix_sign(&mut psi);
        (lambda, psi)
    });

    let mut energies = Vec::with_capacity(n_states);
    let mut wavefunctions = Vec::with_capacity(n_states);
    for (lambda, psi) in pairs {
        energies.push(lambda * kinetic);
        wavefunctions.push(psi);
    }

    for w in energies.windows(2) {
        if w[1] <= w[0] {
            return Err(TrapError::InvalidSpectrum("eigenvalues not strictly increasing".into()));
        }
    }

    // Boundary-clip check: relative tail amplitude at the outermost samples.
    for (n, psi) in wavefunctions.iter().enumerate() {
        let peak = psi.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let tail = psi[0].abs().max(psi[m - 1].abs()) / peak;
        if tail > 1e-6 {
            return Err(TrapError::BoundaryClip { n, amplitude: tail });
        }
    }

    Ok(EigenBasis { grid, energies, wavefunctions })
}

/// Number of eigenvalues of the scaled tridiagonal matrix below `lambda`
/// (constant off-diagonal -1), via the Sturm/LDLᵀ pivot count.
fn sturm_count(diag: &[f64], lambda: f64) -> usize {
    const PIVMIN: f64 = 1e-290;
    let mut count = 0usize;
    let mut d = 1.0f64;
    for &a in diag {
        d = (a - lambda) - 1.0 / d;
        if d.abs() < PIVMIN {
            d = -PIVMIN;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Bisection for the k-th (0-based) eigenvalue.
fn bisect_eigenvalue(diag: &[f64], k: usize, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, mid) <= k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Inverse iteration for the eigenvector of the scaled matrix at `lambda`,
/// using a partially pivoted tridiagonal factorization of `T - λI`.
fn inverse_iteration(diag: &[f64], lambda: f64) -> Vec<f64> {
    let m = diag.len();
    let shifted: Vec<f64> = diag.iter().map(|a| a - lambda).collect();
    let factor = PivotedTridiag::factor(&shifted);

    let mut v = vec![1.0f64; m];
    for _ in 0..3 {
        factor.solve(&mut v);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = if norm > 0.0 { 1.0 / norm } else { 1.0 };
        for x in v.iter_mut() {
            *x *= scale;
        }
    }
    v
}

/// LU factors of a symmetric tridiagonal matrix with unit off-diagonals
/// (value -1), with partial pivoting. Pivoting introduces a second
/// superdiagonal, stored densely per row.
struct PivotedTridiag {
    /// Elimination multipliers per step.
    mult: Vec<f64>,
    /// Whether rows were swapped at step i.
    swapped: Vec<bool>,
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
}

impl PivotedTridiag {
    fn factor(shifted_diag: &[f64]) -> Self {
        let m = shifted_diag.len();
        const TINY: f64 = 1e-280;
        let mut u0 = shifted_diag.to_vec();
        let mut u1 = vec![-1.0f64; m.saturating_sub(1)];
        let mut u2 = vec![0.0f64; m.saturating_sub(2)];
        let mut mult = vec![0.0f64; m.saturating_sub(1)];
        let mut swapped = vec![false; m.saturating_sub(1)];

        for i in 0..m - 1 {
            // Row i has (u0[i], u1[i], u2[i]); row i+1 starts as (-1, d, -1).
            if u0[i].abs() >= 1.0 {
                // no swap
                let l = -1.0 / if u0[i] != 0.0 { u0[i] } else { TINY };
                mult[i] = l;
                u0[i + 1] -= l * u1[i];
                if i + 1 < m - 1 {
                    u1[i + 1] -= l * u2[i];
                }
            } else {
                // swap rows i and i+1
                swapped[i] = true;
                let (r0, r1, r2) = (-1.0, u0[i + 1], if i + 1 < m - 1 { -1.0 } else { 0.0 });
                let (s0, s1, s2) = (u0[i], u1[i], u2[i]);
                // pivot row becomes the old row i+1
                u0[i] = r0;
                u1[i] = r1;
                if i < m - 2 {
                    u2[i] = r2;
                }
                let l = s0 / if r0 != 0.0 { r0 } else { TINY };
                mult[i] = l;
                u0[i + 1] = s1 - l * r1;
                if i + 1 < m - 1 {
                    u1[i + 1] = s2 - l * r2;
                }
            }
        }
        if u0[m - 1] == 0.0 {
            u0[m - 1] = TINY;
        }
        for x in u0.iter_mut() {
            if x.abs() < TINY {
                *x = if *x < 0.0 { -TINY } else { TINY };
            }
        }
        PivotedTridiag { mult, swapped, u0, u1, u2 }
    }

    fn solve(&self, b: &mut [f64]) {
        let m = b.len();
        for i in 0..m - 1 {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.mult[i] * b[i];
        }
        b[m - 1] /= self.u0[m - 1];
        if m >= 2 {
            b[m - 2] = (b[m - 2] - self.u1[m - 2] * b[m - 1]) / self.u0[m - 2];
        }
        for i in (0..m.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.u1[i] * b[i + 1] - self.u2[i] * b[i + 2]) / self.u0[i];
        }
    }
}

fn normalize_grid(psi: &mut [f64], dr: f64) {
    let norm = (psi.iter().map(|x| x * x).sum::<f64>() * dr).sqrt();
    if norm > 0.0 {
        for x in psi.iter_mut() {
            *x /= norm;
        }
    }
}

/// Sign convention: the first sample whose magnitude exceeds 1e-3 of the peak
/// must be positive. (The literal first grid point sits deep inside the blue
/// barrier where amplitudes are below the solver noise floor.)
fn fix_sign(psi: &mut [f64]) {
    let peak = psi.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    for &v in psi.iter() {
        if v.abs() > 1e-3 * peak {
            if v < 0.0 {
                for x in psi.iter_mut() {
                    *x = -*x;
                }
            }
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{CESIUM_MASS, HBAR};
    use crate::trap::calibrate_potential;
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    fn solve_harmonic(omega: f64, center: f64, points: usize, n_states: usize) -> EigenBasis {
        let grid = GridSpec { points, extent: 2.0 * center };
        let u = move |r: f64| 0.5 * CESIUM_MASS * omega * omega * (r - center).powi(2);
        solve_potential(u, CESIUM_MASS, n_states, grid, None).unwrap()
    }

    #[test]
    fn harmonic_levels_match_analytic_ladder() {
        let omega = TAU * 200e3;
        let basis = solve_harmonic(omega, 500e-9, 8000, 11);
        for n in 1..=10 {
            let spacing = basis.energies[n] - basis.energies[0];
            assert_relative_eq!(spacing, n as f64 * HBAR * omega, max_relative = 1e-4);
        }
    }

    #[test]
    fn harmonic_position_variance_matches_analytic() {
        let omega = TAU * 200e3;
        let basis = solve_harmonic(omega, 500e-9, 8000, 6);
        for n in 0..6 {
            let r2 = basis.expectation(n, |r| (r - 500e-9).powi(2));
            let expected = HBAR / (CESIUM_MASS * omega) * (n as f64 + 0.5);
            assert_relative_eq!(r2, expected, max_relative = 1e-4);
        }
    }

    #[test]
    fn calibrated_well_spectrum_softens_and_is_orthonormal() {
        let model =
            calibrate_potential(TAU * 200e3, 200e-9, (260e-9, 585e-9), 0.0, CESIUM_MASS).unwrap();
        let basis = solve_eigenstates(&model, 30, GridSpec::for_model(&model)).unwrap();

        // anharmonic softening: level spacing strictly decreasing
        for n in 0..29 {
            let s0 = basis.energies[n + 1] - basis.energies[n];
            let s1 = basis.energies[n + 2] - basis.energies[n + 1];
            assert!(s1 < s0, "spacing grew at n = {n}");
        }

        for m in 0..=30 {
            for n in m..=30 {
                let expected = if m == n { 1.0 } else { 0.0 };
                assert!(
                    (basis.overlap(m, n) - expected).abs() < 1e-8,
                    "overlap ({m},{n}) = {}",
                    basis.overlap(m, n)
                );
            }
        }
    }

    #[test]
    fn first_gap_agrees_with_wkb_estimate() {
        let model =
            calibrate_potential(TAU * 200e3, 200e-9, (260e-9, 585e-9), 0.0, CESIUM_MASS).unwrap();
        let basis = solve_eigenstates(&model, 1, GridSpec::for_model(&model)).unwrap();

        // WKB quantization: ∮ p dr = (n + 1/2) h. Solve for E_0 and E_1 by
        // bisection on the action integral evaluated by fine quadrature.
        let action = |e: f64| -> f64 {
            let n_quad = 40_000;
            let dr = GridSpec::for_model(&model).extent / n_quad as f64;
            let mut acc = 0.0;
            for i in 0..n_quad {
                let r = (i as f64 + 0.5) * dr;
                let p2 = 2.0 * CESIUM_MASS * (e - model.evaluate(r));
                if p2 > 0.0 {
                    acc += p2.sqrt() * dr;
                }
            }
            acc
        };
        let u_min = model.evaluate(model.minimum_position());
        let solve_level = |n: f64| -> f64 {
            let target = (n + 0.5) * std::f64::consts::PI * HBAR;
            let mut lo = u_min;
            let mut hi = 0.0;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if action(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let wkb_gap = solve_level(1.0) - solve_level(0.0);
        let fd_gap = basis.energies[1] - basis.energies[0];
        assert_relative_eq!(fd_gap, wkb_gap, max_relative = 0.02);
    }

    #[test]
    fn too_many_states_for_a_shallow_well_errors() {
        // Short decay lengths give a shallow well with far fewer than 71
        // bound states.
        let model =
            calibrate_potential(TAU * 200e3, 200e-9, (100e-9, 225e-9), 0.0, CESIUM_MASS).unwrap();
        let err = solve_eigenstates(&model, 70, GridSpec::for_model(&model));
        match err {
            Err(TrapError::TooFewBoundStates { available, requested }) => {
                assert_eq!(requested, 71);
                assert!(available < 71, "available = {available}");
            }
            other => panic!("expected TooFewBoundStates, got {other:?}"),
        }
    }

    #[test]
    fn ground_state_energy_is_grid_converged() {
        let model =
            calibrate_potential(TAU * 200e3, 200e-9, (260e-9, 585e-9), 0.0, CESIUM_MASS).unwrap();
        let coarse = solve_eigenstates(&model, 0, GridSpec { points: 4000, extent: 1000e-9 }).unwrap();
        let fine = solve_eigenstates(&model, 0, GridSpec { points: 8001, extent: 1000e-9 }).unwrap();
        let rel = ((coarse.energies[0] - fine.energies[0]) / fine.energies[0]).abs();
        assert!(rel < 1e-4, "relative ground-state shift {rel:.2e}");
    }

    #[test]
    fn every_level_is_grid_converged_on_a_fine_grid() {
        // halving the spacing moves every E_n (n ≤ 30) by less than 1e-4
        // relative once the grid resolves the shortest de Broglie wavelength
        let model =
            calibrate_potential(TAU * 200e3, 200e-9, (260e-9, 585e-9), 0.0, CESIUM_MASS).unwrap();
        let coarse =
            solve_eigenstates(&model, 30, GridSpec { points: 12000, extent: 1000e-9 }).unwrap();
        let fine =
            solve_eigenstates(&model, 30, GridSpec { points: 24001, extent: 1000e-9 }).unwrap();
        for n in 0..=30 {
            let rel = ((coarse.energies[n] - fine.energies[n]) / fine.energies[n]).abs();
            assert!(rel < 1e-4, "level {n} moved by {rel:.2e} under halving");
        }
    }
}
