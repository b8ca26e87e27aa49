//! Rotating-frame two-level dynamics for pulsed interferometry sequences.
//!
//! The pseudo spin-1/2 is the clock-state pair with basis order (e, g). A
//! pulse rotates the spin about an equatorial Bloch-sphere axis; between
//! pulses the spin accumulates phase at the state-dependent detuning
//! `δ(n) = δ_ls(n) - δ_MW`. Ensemble signals average the per-state excited
//! population over the thermal occupation of the vibrational levels, always
//! in ascending-n order so results do not depend on the execution schedule.

mod density;
mod pulse;
mod sequence;

pub use density::SpinDensityMatrix;
pub use pulse::{free_evolution, pulse_operator, PulseMode, PulseSpec};
pub use sequence::{
    echo_probability, echo_scan, ensemble_average, evaluate_sequence, rabi_probability,
    rabi_scan, ramsey_probability, ramsey_scan, scan_sequence, SequenceElement, SequenceSpec,
};
