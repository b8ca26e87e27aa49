//! Simulation and parameter-estimation toolkit for the ground-state coherence
//! of atoms held in an anharmonic optical trap.
//!
//! The crate is organized around the pipeline used in trapped-atom clock-state
//! interferometry:
//!
//! * [`trap`] — radial trapping potential, vibrational eigenstates,
//!   state-dependent differential light shifts and thermal occupation,
//! * [`spin`] — rotating-frame two-level dynamics for Rabi, Ramsey and
//!   spin-echo pulse sequences, averaged over the vibrational ensemble,
//! * [`lindblad`] — master-equation propagation of the joint spin ⊗ phonon
//!   density matrix under motional heating, and extraction of the coherence
//!   decay curve,
//! * [`fit`] — global weighted least-squares fit of Rabi/Ramsey/echo data
//!   with standard-error estimation,
//! * [`dsl`] — a small line-oriented pulse-sequence language,
//! * [`config`] — run configuration, [`dataio`] — dataset and table files.
//!
//! All frequencies are stored internally as angular frequencies (rad/s), all
//! times in seconds and temperatures in kelvin; conversions to kHz/ms/µK
//! happen only at I/O boundaries (see [`units`]).

pub mod config;
pub mod constants;
pub mod dataio;
pub mod dsl;
pub mod error;
pub mod exec;
pub mod fit;
pub mod lindblad;
pub mod spin;
pub mod trap;
pub mod units;

pub use error::{Error, ErrorClass};

/// Complex double, the scalar type of every density matrix in this crate.
pub type C64 = num_complex::Complex64;
