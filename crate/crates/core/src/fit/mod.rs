//! Global weighted least-squares fit of Rabi, Ramsey and spin-echo traces.
//!
//! All traces share one model: the thermal ensemble of vibrational states
//! dephasing under the state-dependent light shift, with pulse imperfections
//! from the detuning dependence of the rotation angle. The fit floats the
//! initial temperature, the Rabi frequency, per-class microwave detunings,
//! the per-echo-time coherence factors, the detection scale η and the
//! final-pulse phase; standard errors come from the Gauss–Newton normal
//! matrix at the solution.

mod errors;
mod lm;
mod model;
mod params;

pub use errors::{ParamStatus, ParameterError};
pub use lm::{LmOutcome, LmSettings, LmStatus, ResidualFn};
pub use model::{model_prediction, residuals, simulate_dataset};
pub use params::{FitBounds, FitOptions, FitParams, ParamEntry, ParamKind, ParamLayout};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataio::Dataset;
use crate::error::FitError;
use crate::exec;
use crate::trap::VibrationalSpectrum;

/// Result of a global fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: FitParams,
    /// Weighted sum of squared residuals at the solution.
    pub objective: f64,
    /// Per-parameter values, standard errors and identifiability flags, in
    /// layout order.
    pub parameter_errors: Vec<ParameterError>,
    pub layout: ParamLayout,
    pub status: LmStatus,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Objective after every accepted optimizer step.
    pub objective_history: Vec<f64>,
}

impl FitResult {
    pub fn converged(&self) -> bool {
        matches!(self.status, LmStatus::ObjectiveConverged | LmStatus::GradientConverged)
    }

    pub fn parameter(&self, name: &str) -> Option<&ParameterError> {
        self.parameter_errors.iter().find(|p| p.name == name)
    }
}

/// Box-constrained global fit with deterministic multi-start and a frequency
/// alias search.
///
/// The optimizer runs from the supplied guess plus `multistart - 1` seeded
/// perturbations of it; frequency-like parameters (detunings, Rabi
/// frequency) are then refined by a profile scan around the best solution,
/// which resolves the fringe-aliasing local minima that plague phase-coherent
/// traces. Identical inputs and seed give a bit-identical result.
pub fn global_fit(
    datasets: &[Dataset],
    spectrum: &VibrationalSpectrum,
    initial_guess: &FitParams,
    options: &FitOptions,
) -> Result<FitResult, FitError> {
    for (i, ds) in datasets.iter().enumerate() {
        ds.validate(&format!("dataset {i}"))
            .map_err(|e| FitError::InvalidSetup(e.to_string()))?;
    }
    let layout = ParamLayout::for_datasets(datasets, options)?;
    if initial_guess.coherence_factors.len() != layout.echo_times.len() {
        return Err(FitError::InvalidSetup(format!(
            "guess supplies {} coherence factors for {} echo times",
            initial_guess.coherence_factors.len(),
            layout.echo_times.len()
        )));
    }
    let lo = layout.lower_bounds();
    let hi = layout.upper_bounds();
    let x0 = layout.to_vector(initial_guess);
    for (j, entry) in layout.entries.iter().enumerate() {
        if x0[j] < lo[j] || x0[j] > hi[j] {
            return Err(FitError::GuessOutOfBounds { name: entry.name.clone() });
        }
    }

    let objective_fn = |x: &[f64]| -> Result<Vec<f64>, FitError> {
        let params = layout.from_vector(x, initial_guess);
        residuals(&params, datasets, &layout, spectrum, options)
    };
    let settings = LmSettings {
        max_iterations: options.max_iterations,
        ftol: options.ftol,
        gtol: options.gtol,
    };

    // deterministic multi-start: the guess itself plus seeded perturbations
    // of ±10% of each coordinate's span, clamped to the box
    let mut starts = vec![x0.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    for _ in 1..options.multistart.max(1) {
        let perturbed: Vec<f64> = x0
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let span = hi[j] - lo[j];
                (v + rng.random_range(-0.1..0.1) * span).clamp(lo[j], hi[j])
            })
            .collect();
        starts.push(perturbed);
    }

    let runs = exec::map_slice(&starts, |start| least_squares_run(&objective_fn, start, &lo, &hi, settings));
    let mut best: Option<LmOutcome> = None;
    for run in runs {
        let run = run?;
        let better = match &best {
            None => true,
            Some(b) => run.objective < b.objective,
        };
        if better {
            best = Some(run);
        }
    }
    let mut best = best.expect("at least one start");

    // Frequency alias search. Phase-coherent traces alias in the detunings
    // and the Rabi frequency, and a wrong detuning drags the coherence
    // factors onto their zero bound, which in turn makes the objective flat
    // in that detuning. The rescue probes therefore (a) lift bound-stuck
    // coherence factors and phases off their bounds and (b) scan each
    // frequency axis on a grid anchored at the physics-informed user guess,
    // then re-polish from the best grid point.
    for _round in 0..2 {
        let mut improved = false;
        for (j, entry) in layout.entries.iter().enumerate() {
            let (center, half_width) = match entry.kind {
                ParamKind::DetuningRamsey | ParamKind::DetuningEcho => {
                    (x0[j], std::f64::consts::TAU * 3e3)
                }
                ParamKind::Omega0 => (x0[j], 0.25 * x0[j].abs()),
                _ => continue,
            };
            // neutral echo state for the probes: a poisoned coherence factor
            // or final-pulse phase can mask the true basin of a detuning
            let mut base_probe = best.x.clone();
            for (idx, e) in layout.entries.iter().enumerate() {
                match e.kind {
                    ParamKind::Coherence(_) => base_probe[idx] = 0.6,
                    ParamKind::Phi | ParamKind::PhiPerEcho(_) => base_probe[idx] = 0.0,
                    _ => {}
                }
            }
            let steps = 61;
            let mut candidate: Option<(f64, Vec<f64>)> = None;
            for s in 0..steps {
                let value =
                    center - half_width + 2.0 * half_width * s as f64 / (steps - 1) as f64;
                if value < lo[j] || value > hi[j] {
                    continue;
                }
                let mut probe = base_probe.clone();
                probe[j] = value;
                let obj = sum_sq(&objective_fn(&probe)?);
                if candidate.as_ref().map(|(c, _)| obj < *c).unwrap_or(true) {
                    candidate = Some((obj, probe));
                }
            }
            if let Some((_, probe)) = candidate {
                let run = least_squares_run(&objective_fn, &probe, &lo, &hi, settings)?;
                if run.objective < best.objective {
                    best = run;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }

    // final rescues: the tied-detuning configuration is always admissible for
    // an untied fit, and coherence factors stranded on their zero bound are
    // worth one retry from a lifted state
    let mut rescue_candidates: Vec<Vec<f64>> = Vec::new();
    let ramsey_idx =
        layout.entries.iter().position(|e| e.kind == ParamKind::DetuningRamsey);
    let echo_idx = layout.entries.iter().position(|e| e.kind == ParamKind::DetuningEcho);
    if let (Some(r), Some(e)) = (ramsey_idx, echo_idx) {
        let mut tied = best.x.clone();
        tied[e] = tied[r];
        rescue_candidates.push(tied);
    }
    if layout
        .entries
        .iter()
        .enumerate()
        .any(|(j, e)| matches!(e.kind, ParamKind::Coherence(_)) && best.x[j] < 0.05)
    {
        let mut lifted = best.x.clone();
        for (j, e) in layout.entries.iter().enumerate() {
            match e.kind {
                ParamKind::Coherence(_) => lifted[j] = 0.6,
                ParamKind::Phi | ParamKind::PhiPerEcho(_) => lifted[j] = 0.0,
                _ => {}
            }
        }
        rescue_candidates.push(lifted);
    }
    for candidate in rescue_candidates {
        let run = least_squares_run(&objective_fn, &candidate, &lo, &hi, settings)?;
        if run.objective < best.objective {
            best = run;
        }
    }

    let params = layout.from_vector(&best.x, initial_guess);
    let names: Vec<String> = layout.entries.iter().map(|e| e.name.clone()).collect();
    let parameter_errors =
        errors::standard_errors(&names, &best.x, &best.jacobian, &best.residuals, &best.at_bound);

    Ok(FitResult {
        params,
        objective: best.objective,
        parameter_errors,
        layout,
        status: best.status,
        iterations: best.iterations,
        gradient_norm: best.gradient_norm,
        objective_history: best.objective_history,
    })
}

/// Re-derives the standard errors for a converged result at its solution
/// (recomputing residuals and the Jacobian from scratch).
pub fn estimate_errors(
    result: &FitResult,
    datasets: &[Dataset],
    spectrum: &VibrationalSpectrum,
    options: &FitOptions,
) -> Result<Vec<ParameterError>, FitError> {
    let layout = &result.layout;
    let x = layout.to_vector(&result.params);
    let lo = layout.lower_bounds();
    let hi = layout.upper_bounds();
    let objective_fn = |v: &[f64]| -> Result<Vec<f64>, FitError> {
        let params = layout.from_vector(v, &result.params);
        residuals(&params, datasets, layout, spectrum, options)
    };
    // one iteration: evaluates residuals + Jacobian at the solution
    let settings = LmSettings { max_iterations: 1, ftol: f64::INFINITY, gtol: 0.0 };
    let run = least_squares_run(&objective_fn, &x, &lo, &hi, settings)?;
    let names: Vec<String> = layout.entries.iter().map(|e| e.name.clone()).collect();
    Ok(errors::standard_errors(&names, &x, &run.jacobian, &run.residuals, &run.at_bound))
}

fn least_squares_run(
    f: &ResidualFn<'_>,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    settings: LmSettings,
) -> Result<LmOutcome, FitError> {
    lm::least_squares(f, x0, lo, hi, settings)
}

fn sum_sq(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum()
}
