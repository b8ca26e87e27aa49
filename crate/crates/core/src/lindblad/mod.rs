//! Master-equation engine for the joint spin ⊗ phonon system under motional
//! heating.
//!
//! The Liouvillian combines free evolution at the state-dependent detuning
//! with phonon jump operators `L₋ = a`, `L₊ = a†` at a common rate κ (an
//! infinite-temperature heating bath). Propagation uses an adaptive embedded
//! Runge-Kutta integrator acting on the dense joint density matrix through
//! structured terms; an explicit superoperator matrix exists as a reference
//! path for tests.

mod echo;
mod integrator;
mod joint;
mod liouvillian;

pub use echo::{
    echo_under_heating, extract_c_heat, fringe_amplitude_peak_to_trough,
    fringe_amplitude_sinusoid_fit, CoherenceDecayCurve, EchoOptions, FringeEstimator,
};
pub use integrator::{propagate, propagate_sampled};
pub use joint::JointDensityMatrix;
pub use liouvillian::{build_liouvillian, heating_rate_kelvin_per_s, HeatingModel, Liouvillian};
