//! Fit parameters, bounds and the flattened optimizer layout.

use crate::dataio::{Dataset, DatasetKind};
use crate::error::FitError;
use crate::spin::PulseMode;

/// Physical fit parameters of the global model.
#[derive(Debug, Clone, PartialEq)]
pub struct FitParams {
    /// Initial ensemble temperature T₀, kelvin.
    pub temperature: f64,
    /// Resonant Rabi frequency Ω₀, rad/s, shared across all traces.
    pub omega0: f64,
    /// Microwave detuning for Ramsey (and Rabi) traces, rad/s.
    pub delta_mw_ramsey: f64,
    /// Microwave detuning for echo traces, rad/s (tied to the Ramsey value
    /// when the tie option is set).
    pub delta_mw_echo: f64,
    /// Detection scale η relating raw signal to p_e.
    pub eta: f64,
    /// Phase of the final π/2 pulse in echo sequences, radians.
    pub phi: f64,
    /// Exponential Rabi contrast damping rate, 1/s.
    pub rabi_damping_rate: f64,
    /// One coherence factor per distinct echo time, in echo-time order.
    pub coherence_factors: Vec<f64>,
    /// Per-echo-time final-pulse phases (used instead of `phi` when the
    /// per-echo-phase option is set).
    pub phi_per_echo: Option<Vec<f64>>,
}

impl FitParams {
    /// Experiment-scale starting point: one coherence factor per echo time.
    pub fn baseline(n_echo_times: usize) -> Self {
        FitParams {
            temperature: 71e-6,
            omega0: std::f64::consts::TAU * 17e3,
            delta_mw_ramsey: -std::f64::consts::TAU * 5e3,
            delta_mw_echo: -std::f64::consts::TAU * 5e3,
            eta: 1.0,
            phi: 0.0,
            rabi_damping_rate: 1.0 / 3.4e-3,
            coherence_factors: vec![0.8; n_echo_times],
            phi_per_echo: None,
        }
    }

    pub fn phi_for_echo(&self, echo_index: usize) -> f64 {
        match &self.phi_per_echo {
            Some(phis) => phis[echo_index],
            None => self.phi,
        }
    }
}

/// Box constraints, one pair per physical field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitBounds {
    pub temperature: (f64, f64),
    pub omega0: (f64, f64),
    pub detuning: (f64, f64),
    pub eta: (f64, f64),
    pub phi: (f64, f64),
    pub rabi_damping_rate: (f64, f64),
}

impl Default for FitBounds {
    fn default() -> Self {
        FitBounds {
            temperature: (1e-7, 1e-3),
            omega0: (std::f64::consts::TAU * 1e3, std::f64::consts::TAU * 100e3),
            detuning: (-std::f64::consts::TAU * 50e3, std::f64::consts::TAU * 50e3),
            eta: (1e-3, 1e2),
            phi: (-std::f64::consts::PI, std::f64::consts::PI),
            rabi_damping_rate: (0.0, 1e5),
        }
    }
}

/// Global-fit behavior switches.
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Share one microwave detuning between the Ramsey and echo classes.
    pub tie_detunings: bool,
    /// Fit one final-pulse phase per echo time instead of a single global
    /// phase.
    pub per_echo_phase: bool,
    pub pulse_mode: PulseMode,
    /// `None`: fit the Rabi damping rate only when a Rabi trace longer than
    /// 1 ms is present; otherwise keep it fixed at the guess.
    pub fit_rabi_damping: Option<bool>,
    pub multistart: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Relative objective-decrease convergence threshold.
    pub ftol: f64,
    /// Gradient-norm convergence threshold (scaled coordinates).
    pub gtol: f64,
    pub bounds: FitBounds,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tie_detunings: false,
            per_echo_phase: false,
            pulse_mode: PulseMode::Detuned,
            fit_rabi_damping: None,
            multistart: 8,
            seed: 0,
            max_iterations: 200,
            ftol: 1e-10,
            gtol: 1e-8,
            bounds: FitBounds::default(),
        }
    }
}

/// Role of one optimizer coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamKind {
    Temperature,
    Omega0,
    DetuningRamsey,
    DetuningEcho,
    Eta,
    Phi,
    PhiPerEcho(usize),
    RabiDamping,
    Coherence(usize),
}

#[derive(Debug, Clone)]
pub struct ParamEntry {
    pub name: String,
    pub kind: ParamKind,
    pub lower: f64,
    pub upper: f64,
}

/// Flattened view of the free parameters for a given dataset collection.
#[derive(Debug, Clone)]
pub struct ParamLayout {
    pub entries: Vec<ParamEntry>,
    /// Distinct echo times present in the data, ascending.
    pub echo_times: Vec<f64>,
    pub tie_detunings: bool,
    pub per_echo_phase: bool,
    pub fit_rabi_damping: bool,
}

impl ParamLayout {
    /// Derives the layout from the datasets and options: which detunings
    /// exist, how many coherence factors, whether the damping rate floats.
    pub fn for_datasets(datasets: &[Dataset], options: &FitOptions) -> Result<Self, FitError> {
        if datasets.is_empty() {
            return Err(FitError::NoDatasets);
        }
        let mut echo_times: Vec<f64> = Vec::new();
        for ds in datasets {
            if ds.kind == DatasetKind::Echo {
                let t = ds.t_echo.expect("validated echo dataset has t_echo");
                if !echo_times.iter().any(|&u| (u - t).abs() <= 1e-12 + 1e-9 * t.abs()) {
                    echo_times.push(t);
                }
            }
        }
        echo_times.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let has_echo = !echo_times.is_empty();
        let has_ramsey_class = datasets
            .iter()
            .any(|d| matches!(d.kind, DatasetKind::Ramsey | DatasetKind::Rabi));
        let fit_rabi_damping = match options.fit_rabi_damping {
            Some(explicit) => explicit,
            None => datasets
                .iter()
                .any(|d| d.kind == DatasetKind::Rabi && d.times.last().copied().unwrap_or(0.0) > 1e-3),
        };

        let b = options.bounds;
        let mut entries = vec![
            ParamEntry {
                name: "T0".into(),
                kind: ParamKind::Temperature,
                lower: b.temperature.0,
                upper: b.temperature.1,
            },
            ParamEntry {
                name: "Omega0".into(),
                kind: ParamKind::Omega0,
                lower: b.omega0.0,
                upper: b.omega0.1,
            },
        ];
        if has_ramsey_class || options.tie_detunings || !has_echo {
            entries.push(ParamEntry {
                name: "delta_MW_ramsey".into(),
                kind: ParamKind::DetuningRamsey,
                lower: b.detuning.0,
                upper: b.detuning.1,
            });
        }
        if has_echo && !options.tie_detunings {
            entries.push(ParamEntry {
                name: "delta_MW_echo".into(),
                kind: ParamKind::DetuningEcho,
                lower: b.detuning.0,
                upper: b.detuning.1,
            });
        }
        entries.push(ParamEntry {
            name: "eta".into(),
            kind: ParamKind::Eta,
            lower: b.eta.0,
            upper: b.eta.1,
        });
        if has_echo {
            if options.per_echo_phase {
                for (i, t) in echo_times.iter().enumerate() {
                    entries.push(ParamEntry {
                        name: format!("phi[t_echo={:.3}ms]", t * 1e3),
                        kind: ParamKind::PhiPerEcho(i),
                        lower: b.phi.0,
                        upper: b.phi.1,
                    });
                }
            } else {
                entries.push(ParamEntry {
                    name: "phi".into(),
                    kind: ParamKind::Phi,
                    lower: b.phi.0,
                    upper: b.phi.1,
                });
            }
        }
        if fit_rabi_damping {
            entries.push(ParamEntry {
                name: "rabi_damping_rate".into(),
                kind: ParamKind::RabiDamping,
                lower: b.rabi_damping_rate.0,
                upper: b.rabi_damping_rate.1,
            });
        }
        for (i, t) in echo_times.iter().enumerate() {
            entries.push(ParamEntry {
                name: format!("C[t_echo={:.3}ms]", t * 1e3),
                kind: ParamKind::Coherence(i),
                lower: 0.0,
                upper: 1.0,
            });
        }

        Ok(ParamLayout {
            entries,
            echo_times,
            tie_detunings: options.tie_detunings,
            per_echo_phase: options.per_echo_phase,
            fit_rabi_damping,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lower_bounds(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.lower).collect()
    }

    pub fn upper_bounds(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.upper).collect()
    }

    /// Flattens physical parameters into the optimizer vector.
    pub fn to_vector(&self, params: &FitParams) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| match e.kind {
                ParamKind::Temperature => params.temperature,
                ParamKind::Omega0 => params.omega0,
                ParamKind::DetuningRamsey => params.delta_mw_ramsey,
                ParamKind::DetuningEcho => params.delta_mw_echo,
                ParamKind::Eta => params.eta,
                ParamKind::Phi => params.phi,
                ParamKind::PhiPerEcho(i) => params.phi_for_echo(i),
                ParamKind::RabiDamping => params.rabi_damping_rate,
                ParamKind::Coherence(i) => params.coherence_factors[i],
            })
            .collect()
    }

    /// Rebuilds physical parameters from the optimizer vector, taking
    /// non-fitted fields from `fixed`.
    pub fn from_vector(&self, x: &[f64], fixed: &FitParams) -> FitParams {
        assert_eq!(x.len(), self.len());
        let mut params = fixed.clone();
        params.coherence_factors = vec![0.0; self.echo_times.len()];
        if self.per_echo_phase {
            params.phi_per_echo = Some(vec![0.0; self.echo_times.len()]);
        }
        for (e, &v) in self.entries.iter().zip(x) {
            match e.kind {
                ParamKind::Temperature => params.temperature = v,
                ParamKind::Omega0 => params.omega0 = v,
                ParamKind::DetuningRamsey => params.delta_mw_ramsey = v,
                ParamKind::DetuningEcho => params.delta_mw_echo = v,
                ParamKind::Eta => params.eta = v,
                ParamKind::Phi => params.phi = v,
                ParamKind::PhiPerEcho(i) => {
                    params.phi_per_echo.as_mut().expect("per-echo layout")[i] = v
                }
                ParamKind::RabiDamping => params.rabi_damping_rate = v,
                ParamKind::Coherence(i) => params.coherence_factors[i] = v,
            }
        }
        if self.tie_detunings {
            params.delta_mw_echo = params.delta_mw_ramsey;
        }
        params
    }

    /// Index of the coherence factor belonging to a dataset's echo time.
    pub fn echo_index(&self, t_echo: f64) -> Option<usize> {
        self.echo_times
            .iter()
            .position(|&u| (u - t_echo).abs() <= 1e-12 + 1e-9 * t_echo.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn echo_dataset(t_echo: f64) -> Dataset {
        Dataset {
            kind: DatasetKind::Echo,
            times: vec![t_echo, t_echo + 1e-4],
            signal: vec![0.5, 0.6],
            weights: None,
            t_echo: Some(t_echo),
            alpha: None,
            shots: None,
            mw_offset: 0.0,
        }
    }

    fn ramsey_dataset() -> Dataset {
        Dataset {
            kind: DatasetKind::Ramsey,
            times: vec![1e-4, 2e-4],
            signal: vec![0.5, 0.6],
            weights: None,
            t_echo: None,
            alpha: None,
            shots: None,
            mw_offset: 0.0,
        }
    }

    #[test]
    fn layout_collects_distinct_echo_times() {
        let datasets =
            vec![ramsey_dataset(), echo_dataset(2e-3), echo_dataset(1e-3), echo_dataset(2e-3)];
        let layout = ParamLayout::for_datasets(&datasets, &FitOptions::default()).unwrap();
        assert_eq!(layout.echo_times, vec![1e-3, 2e-3]);
        assert_eq!(layout.echo_index(2e-3), Some(1));
        // T0, Omega0, delta_R, delta_E, eta, phi, C0, C1
        assert_eq!(layout.len(), 8);
    }

    #[test]
    fn tying_detunings_removes_one_coordinate() {
        let datasets = vec![ramsey_dataset(), echo_dataset(2e-3)];
        let untied = ParamLayout::for_datasets(&datasets, &FitOptions::default()).unwrap();
        let tied = ParamLayout::for_datasets(
            &datasets,
            &FitOptions { tie_detunings: true, ..Default::default() },
        )
        .unwrap();
        assert_eq!(untied.len(), tied.len() + 1);
        let x = tied.to_vector(&FitParams::baseline(1));
        let params = tied.from_vector(&x, &FitParams::baseline(1));
        assert_eq!(params.delta_mw_echo, params.delta_mw_ramsey);
    }

    #[test]
    fn vector_round_trip_preserves_params() {
        let datasets = vec![ramsey_dataset(), echo_dataset(1e-3), echo_dataset(3e-3)];
        let layout = ParamLayout::for_datasets(&datasets, &FitOptions::default()).unwrap();
        let mut params = FitParams::baseline(2);
        params.coherence_factors = vec![0.9, 0.4];
        params.phi = 0.07;
        let x = layout.to_vector(&params);
        let back = layout.from_vector(&x, &params);
        assert_eq!(back, params);
    }

    #[test]
    fn damping_rate_floats_only_with_long_rabi_data() {
        let mut rabi_short = ramsey_dataset();
        rabi_short.kind = DatasetKind::Rabi;
        let layout =
            ParamLayout::for_datasets(&[rabi_short.clone()], &FitOptions::default()).unwrap();
        assert!(!layout.fit_rabi_damping);

        let mut rabi_long = rabi_short;
        rabi_long.times = vec![1e-4, 5e-3];
        let layout = ParamLayout::for_datasets(&[rabi_long], &FitOptions::default()).unwrap();
        assert!(layout.fit_rabi_damping);
    }

    #[test]
    fn empty_dataset_list_is_rejected() {
        assert!(matches!(
            ParamLayout::for_datasets(&[], &FitOptions::default()),
            Err(FitError::NoDatasets)
        ));
    }
}
