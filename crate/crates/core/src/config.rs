//! Run configuration.
//!
//! Configuration files are TOML with explicit units on every physical
//! quantity ("200 kHz", "71 uK"). Unknown keys are rejected. The resolved
//! form carries SI/angular values and the fully built spectrum.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constants::KB;
use crate::dataio;
use crate::error::{ConfigError, Error};
use crate::spin::PulseMode;
use crate::trap::{
    boltzmann_weights, calibrate_lightshift_scale, calibrate_potential, differential_light_shift,
    solve_eigenstates, GridSpec, RadialPotentialModel, VibrationalSpectrum,
};
use crate::units::{parse_quantity, Dimension};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_format_version")]
    pub format_version: u32,
    #[serde(default)]
    pub trap: TrapConfig,
    #[serde(default)]
    pub microwave: MicrowaveConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub lindblad: LindbladConfig,
}

fn default_format_version() -> u32 {
    1
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            format_version: 1,
            trap: TrapConfig::default(),
            microwave: MicrowaveConfig::default(),
            ensemble: EnsembleConfig::default(),
            lindblad: LindbladConfig::default(),
        }
    }
}

/// Trap and spectrum configuration. The default double-exponential model is
/// calibrated, not measured: its decay lengths place the well minimum 200 nm
/// from the surface with a 200 kHz radial frequency while holding more than
/// 70 bound states, and the light-shift scale is set so the thermal Ramsey
/// envelope at the calibration temperature halves at the calibration time.
/// The table backend replaces all of this with externally computed levels.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrapConfig {
    /// "model" (calibrated double exponential) or "table" (file-backed).
    pub backend: String,
    /// Level table for the "table" backend.
    pub table_path: Option<String>,
    pub trap_frequency: String,
    pub minimum_position: String,
    pub blue_decay_length: String,
    pub red_decay_length: String,
    pub atom_mass: String,
    /// Optional feasibility floor for the well depth (temperature units,
    /// converted through k_B).
    pub required_depth: Option<String>,
    pub n_max: usize,
    pub grid_points: usize,
    /// Grid extent as a multiple of the minimum position.
    pub grid_extent_factor: f64,
    /// "auto" or a fixed dimensionless scale applied to both trap fields.
    pub lightshift_scale: ScaleSpec,
    pub calibration_t2star: String,
    pub calibration_temperature: String,
}

impl Default for TrapConfig {
    fn default() -> Self {
        TrapConfig {
            backend: "model".into(),
            table_path: None,
            trap_frequency: "200 kHz".into(),
            minimum_position: "200 nm".into(),
            blue_decay_length: "260 nm".into(),
            red_decay_length: "585 nm".into(),
            atom_mass: "2.20694696e-25 kg".into(),
            required_depth: None,
            n_max: 70,
            grid_points: 4000,
            grid_extent_factor: 5.0,
            lightshift_scale: ScaleSpec::Auto,
            calibration_t2star: "0.6 ms".into(),
            calibration_temperature: "71 uK".into(),
        }
    }
}

/// Light-shift scale: calibrated automatically or pinned to a number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScaleSpec {
    Fixed(f64),
    Keyword(String),
}

impl ScaleSpec {
    #[allow(non_upper_case_globals)]
    pub const Auto: ScaleSpec = ScaleSpec::Fixed(f64::NAN);

    fn is_auto(&self) -> bool {
        match self {
            ScaleSpec::Fixed(v) => v.is_nan(),
            ScaleSpec::Keyword(k) => k == "auto",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MicrowaveConfig {
    pub rabi_frequency: String,
    pub detuning: String,
    pub rabi_damping_time: String,
    /// "ideal" or "detuned".
    pub pulse_mode: String,
}

impl Default for MicrowaveConfig {
    fn default() -> Self {
        MicrowaveConfig {
            rabi_frequency: "17 kHz".into(),
            detuning: "-5 kHz".into(),
            rabi_damping_time: "3.4 ms".into(),
            pulse_mode: "ideal".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub temperature: String,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig { temperature: "71 uK".into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LindbladConfig {
    /// Jump rate κ in 1/s.
    pub kappa: f64,
    pub n_max: usize,
    pub tolerance: f64,
    pub t_echo_grid: Vec<String>,
}

impl Default for LindbladConfig {
    fn default() -> Self {
        LindbladConfig {
            kappa: 350.0,
            n_max: 30,
            tolerance: 1e-8,
            t_echo_grid: [
                "0.2 ms", "0.5 ms", "1 ms", "1.5 ms", "2 ms", "2.5 ms", "3 ms", "3.5 ms",
                "4 ms", "4.5 ms", "5 ms", "6 ms",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        }
    }
}

/// Fully resolved configuration: SI values and a built spectrum.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    /// The potential model behind the spectrum (absent for table backends).
    pub model: Option<RadialPotentialModel>,
    pub spectrum: VibrationalSpectrum,
    /// Calibrated or configured light-shift scale (NaN for table backends).
    pub lightshift_scale: f64,
    pub omega0: f64,
    pub delta_mw: f64,
    pub rabi_damping_rate: f64,
    pub pulse_mode: PulseMode,
    pub temperature: f64,
    pub kappa: f64,
    pub lindblad_n_max: usize,
    pub tolerance: f64,
    pub t_echo_grid: Vec<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        RunConfig::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<RunConfig, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Invalid {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        if config.format_version != 1 {
            return Err(ConfigError::Invalid {
                path: origin.to_string(),
                message: format!("unsupported format_version {}", config.format_version),
            });
        }
        Ok(config)
    }

    /// Canonical serialized form used for the reproducibility hash.
    pub fn canonical_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// FNV-1a hash of the canonical form.
    pub fn hash(&self) -> u64 {
        fnv1a(self.canonical_string().as_bytes())
    }

    /// Builds the spectrum and converts all quantities, resolving "auto"
    /// calibrations. `base_dir` anchors relative table paths.
    pub fn resolve(&self, base_dir: &Path) -> Result<ResolvedConfig, Error> {
        let temperature = parse_quantity(&self.ensemble.temperature, Dimension::Temperature)?;
        let omega0 = parse_quantity(&self.microwave.rabi_frequency, Dimension::Frequency)?;
        let delta_mw = parse_quantity(&self.microwave.detuning, Dimension::Frequency)?;
        let damping_time = parse_quantity(&self.microwave.rabi_damping_time, Dimension::Time)?;
        let pulse_mode = match self.microwave.pulse_mode.as_str() {
            "ideal" => PulseMode::Ideal,
            "detuned" => PulseMode::Detuned,
            other => {
                return Err(Error::Config(ConfigError::Invalid {
                    path: "microwave.pulse_mode".into(),
                    message: format!("unknown pulse mode {other:?} (ideal | detuned)"),
                }))
            }
        };

        let (model, spectrum, scale) = match self.trap.backend.as_str() {
            "table" => {
                let Some(rel) = &self.trap.table_path else {
                    return Err(Error::Config(ConfigError::Invalid {
                        path: "trap.table_path".into(),
                        message: "table backend requires trap.table_path".into(),
                    }));
                };
                let path = base_dir.join(rel);
                let spectrum = dataio::load_lightshift_table(&path)?;
                (None, spectrum, f64::NAN)
            }
            "model" => {
                let frequency = parse_quantity(&self.trap.trap_frequency, Dimension::Frequency)?;
                let position = parse_quantity(&self.trap.minimum_position, Dimension::Length)?;
                let blue = parse_quantity(&self.trap.blue_decay_length, Dimension::Length)?;
                let red = parse_quantity(&self.trap.red_decay_length, Dimension::Length)?;
                let mass = parse_quantity(&self.trap.atom_mass, Dimension::Mass)?;
                let required_depth = match &self.trap.required_depth {
                    Some(text) => parse_quantity(text, Dimension::Temperature)? * KB,
                    None => 0.0,
                };
                let model =
                    calibrate_potential(frequency, position, (blue, red), required_depth, mass)?;
                let grid = GridSpec {
                    points: self.trap.grid_points,
                    extent: self.trap.grid_extent_factor * model.minimum_position(),
                };
                let basis = solve_eigenstates(&model, self.trap.n_max, grid)?;
                let scale = if self.trap.lightshift_scale.is_auto() {
                    let t2star =
                        parse_quantity(&self.trap.calibration_t2star, Dimension::Time)?;
                    let cal_temp = parse_quantity(
                        &self.trap.calibration_temperature,
                        Dimension::Temperature,
                    )?;
                    calibrate_lightshift_scale(&basis, &model, cal_temp, t2star)?
                } else {
                    match &self.trap.lightshift_scale {
                        ScaleSpec::Fixed(v) => *v,
                        ScaleSpec::Keyword(k) => {
                            return Err(Error::Config(ConfigError::Invalid {
                                path: "trap.lightshift_scale".into(),
                                message: format!("unknown keyword {k:?} (use \"auto\" or a number)"),
                            }))
                        }
                    }
                };
                let spectrum = differential_light_shift(&basis, &model, scale, scale)?;
                (Some(model), spectrum, scale)
            }
            other => {
                return Err(Error::Config(ConfigError::Invalid {
                    path: "trap.backend".into(),
                    message: format!("unknown backend {other:?} (model | table)"),
                }))
            }
        };

        // the thermal distribution must be computable at the configured
        // temperature over the built spectrum
        boltzmann_weights(&spectrum, temperature)?;

        let mut t_echo_grid = Vec::with_capacity(self.lindblad.t_echo_grid.len());
        for text in &self.lindblad.t_echo_grid {
            t_echo_grid.push(parse_quantity(text, Dimension::Time)?);
        }

        Ok(ResolvedConfig {
            model,
            spectrum,
            lightshift_scale: scale,
            omega0,
            delta_mw,
            rabi_damping_rate: 1.0 / damping_time,
            pulse_mode,
            temperature,
            kappa: self.lindblad.kappa,
            lindblad_n_max: self.lindblad.n_max,
            tolerance: self.lindblad.tolerance,
            t_echo_grid,
        })
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
