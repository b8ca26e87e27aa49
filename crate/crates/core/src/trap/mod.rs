//! Radial trapping potential, vibrational eigenstates, differential light
//! shifts and thermal occupation.

mod eigensolver;
mod potential;
mod spectrum;
mod thermal;

pub use eigensolver::{solve_eigenstates, solve_potential, EigenBasis, GridSpec};
pub use potential::{calibrate_potential, RadialPotentialModel};
pub use spectrum::{
    calibrate_lightshift_scale, differential_light_shift, envelope_half_time, ramsey_envelope,
    GridMeta, VibrationalSpectrum,
};
pub use thermal::{boltzmann_weights, ThermalDistribution};
