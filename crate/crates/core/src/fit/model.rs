//! Model predictions and residuals for the global fit.

use crate::dataio::{Dataset, DatasetKind};
use crate::error::{Error, FitError};
use crate::spin::{echo_scan, rabi_scan, ramsey_scan};
use crate::trap::VibrationalSpectrum;

use super::params::{FitOptions, FitParams, ParamLayout};

/// Transfer probabilities `p_model(t)` for one dataset at the given
/// parameters (before the detection scale η).
pub fn model_prediction(
    params: &FitParams,
    dataset: &Dataset,
    layout: &ParamLayout,
    spectrum: &VibrationalSpectrum,
    options: &FitOptions,
) -> Result<Vec<f64>, Error> {
    match dataset.kind {
        DatasetKind::Rabi => Ok(rabi_scan(
            params.omega0,
            params.delta_mw_ramsey + dataset.mw_offset,
            &dataset.times,
            spectrum,
            params.temperature,
            params.rabi_damping_rate,
        )?),
        DatasetKind::Ramsey => Ok(ramsey_scan(
            params.omega0,
            params.delta_mw_ramsey + dataset.mw_offset,
            &dataset.times,
            spectrum,
            params.temperature,
            options.pulse_mode,
        )?),
        DatasetKind::Echo => {
            let t_echo = dataset.t_echo.expect("validated echo dataset");
            let index = layout.echo_index(t_echo).ok_or_else(|| {
                FitError::InvalidSetup(format!("echo time {t_echo} s missing from layout"))
            })?;
            Ok(echo_scan(
                params.omega0,
                params.delta_mw_echo + dataset.mw_offset,
                &dataset.times,
                t_echo,
                params.coherence_factors[index],
                params.phi_for_echo(index),
                spectrum,
                params.temperature,
                options.pulse_mode,
            )?)
        }
    }
}

/// Weighted residual vector over all datasets in order:
/// `r = √w (signal - η p_model)`, points in time order within each dataset.
pub fn residuals(
    params: &FitParams,
    datasets: &[Dataset],
    layout: &ParamLayout,
    spectrum: &VibrationalSpectrum,
    options: &FitOptions,
) -> Result<Vec<f64>, FitError> {
    let mut out = Vec::with_capacity(datasets.iter().map(Dataset::len).sum());
    for (d_idx, dataset) in datasets.iter().enumerate() {
        let prediction = model_prediction(params, dataset, layout, spectrum, options).map_err(
            |source| FitError::ModelEvaluation {
                dataset: d_idx,
                point: out.len(),
                source: Box::new(source),
            },
        )?;
        for (i, p) in prediction.iter().enumerate() {
            let w = dataset.weights.as_ref().map(|w| w[i]).unwrap_or(1.0);
            out.push(w.sqrt() * (dataset.signal[i] - params.eta * p));
        }
    }
    Ok(out)
}

/// Generates a dataset from the model itself, optionally with Gaussian noise
/// of standard deviation `sigma` (deterministic for a given seed). Negative
/// draws are clamped at zero to keep the trace a valid signal.
#[allow(clippy::too_many_arguments)]
pub fn simulate_dataset(
    params: &FitParams,
    kind: DatasetKind,
    times: &[f64],
    t_echo: Option<f64>,
    mw_offset: f64,
    sigma: f64,
    seed: u64,
    layout: &ParamLayout,
    spectrum: &VibrationalSpectrum,
    options: &FitOptions,
) -> Result<Dataset, Error> {
    use rand::{Rng, SeedableRng};
    let probe = Dataset {
        kind,
        times: times.to_vec(),
        signal: vec![0.0; times.len()],
        weights: None,
        t_echo,
        alpha: None,
        shots: None,
        mw_offset,
    };
    let prediction = model_prediction(params, &probe, layout, spectrum, options)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let signal = prediction
        .iter()
        .map(|p| {
            let noise = if sigma > 0.0 {
                // Box-Muller from two uniform draws
                let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
                let u2: f64 = rng.random_range(0.0..1.0);
                sigma * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            } else {
                0.0
            };
            (params.eta * p + noise).max(0.0)
        })
        .collect();
    Ok(Dataset { signal, ..probe })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::PulseMode;
    use std::f64::consts::TAU;

    fn spectrum() -> VibrationalSpectrum {
        VibrationalSpectrum::harmonic(TAU * 200e3, 40, -TAU * 11.7e3, TAU * 62.0)
    }

    fn setup() -> (Vec<Dataset>, ParamLayout, FitOptions, FitParams) {
        let options = FitOptions { pulse_mode: PulseMode::Detuned, ..Default::default() };
        let spectrum = spectrum();
        let mut params = FitParams::baseline(1);
        params.eta = 0.8;
        params.coherence_factors = vec![0.7];
        let times: Vec<f64> = (0..25).map(|k| 1e-5 + k as f64 * 3e-5).collect();
        let echo_times: Vec<f64> = (0..25).map(|k| 1.2e-3 + k as f64 * 2e-5).collect();
        let probe_layout = ParamLayout {
            entries: vec![],
            echo_times: vec![2e-3],
            tie_detunings: false,
            per_echo_phase: false,
            fit_rabi_damping: false,
        };
        let ramsey = simulate_dataset(
            &params, DatasetKind::Ramsey, &times, None, 0.0, 0.0, 0, &probe_layout, &spectrum,
            &options,
        )
        .unwrap();
        let echo = simulate_dataset(
            &params,
            DatasetKind::Echo,
            &echo_times,
            Some(2e-3),
            0.0,
            0.0,
            0,
            &probe_layout,
            &spectrum,
            &options,
        )
        .unwrap();
        let datasets = vec![ramsey, echo];
        let layout = ParamLayout::for_datasets(&datasets, &options).unwrap();
        (datasets, layout, options, params)
    }

    #[test]
    fn residuals_vanish_at_the_generating_parameters() {
        let (datasets, layout, options, params) = setup();
        let r = residuals(&params, &datasets, &layout, &spectrum(), &options).unwrap();
        assert_eq!(r.len(), 50);
        assert!(r.iter().all(|v| v.abs() < 1e-12), "max residual {:e}",
            r.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs())));
    }

    #[test]
    fn eta_enters_linearly() {
        let (datasets, layout, options, params) = setup();
        let spectrum = spectrum();
        let r0 = residuals(&params, &datasets, &layout, &spectrum, &options).unwrap();
        let mut doubled = params.clone();
        doubled.eta *= 2.0;
        let r1 = residuals(&doubled, &datasets, &layout, &spectrum, &options).unwrap();
        // residual shifts by -η₀ p_model = (signal - 2η₀p) - (signal - η₀p)
        let p = model_prediction(&params, &datasets[0], &layout, &spectrum, &options).unwrap();
        for i in 0..p.len() {
            assert!((r1[i] - r0[i] + params.eta * p[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn point_weights_scale_residuals_by_their_square_root() {
        let (mut datasets, layout, options, mut params) = setup();
        params.eta *= 1.1; // move off the generating point so residuals are nonzero
        let spectrum = spectrum();
        let plain = residuals(&params, &datasets, &layout, &spectrum, &options).unwrap();
        let mut weights = vec![1.0; datasets[0].len()];
        weights[3] = 4.0;
        datasets[0].weights = Some(weights);
        let weighted = residuals(&params, &datasets, &layout, &spectrum, &options).unwrap();
        for (i, (w, p)) in weighted.iter().zip(&plain).enumerate() {
            let expected = if i == 3 { 2.0 * p } else { *p };
            assert!((w - expected).abs() < 1e-15, "point {i}: {w} vs {expected}");
        }
    }

    #[test]
    fn noisy_synthesis_is_deterministic_per_seed() {
        let (_, layout, options, params) = setup();
        let times: Vec<f64> = (0..10).map(|k| 1e-5 + k as f64 * 5e-5).collect();
        let a = simulate_dataset(
            &params, DatasetKind::Ramsey, &times, None, 0.0, 0.03, 42, &layout, &spectrum(),
            &options,
        )
        .unwrap();
        let b = simulate_dataset(
            &params, DatasetKind::Ramsey, &times, None, 0.0, 0.03, 42, &layout, &spectrum(),
            &options,
        )
        .unwrap();
        assert_eq!(a, b);
        let c = simulate_dataset(
            &params, DatasetKind::Ramsey, &times, None, 0.0, 0.03, 43, &layout, &spectrum(),
            &options,
        )
        .unwrap();
        assert_ne!(a, c);
    }
}
