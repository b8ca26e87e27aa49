//! File formats: light-shift tables and measurement datasets.
//!
//! Both formats are plain text with `#` comment lines. Frequencies are
//! stored as ordinary (non-angular) kHz and times as milliseconds; writers
//! emit exact preimages of the internal values (see
//! [`crate::units::inverse_scaled`]) so that an export → import cycle
//! reproduces file-born values bit-for-bit.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::trap::VibrationalSpectrum;
use crate::units::{
    rad_per_s_to_khz_column, seconds_to_ms_column, KHZ_TO_RAD_PER_S, MS_TO_S,
};

// ---------------------------------------------------------------------------
// light-shift tables
// ---------------------------------------------------------------------------

/// Loads a tabulated spectrum: rows `n <TAB> E_n_kHz <TAB> delta_ls_kHz`,
/// `n` contiguous from 0, energies strictly increasing.
pub fn load_lightshift_table(path: &Path) -> Result<VibrationalSpectrum, DataError> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_lightshift_table(&text, &path.display().to_string())
}

/// Parses table text; `origin` names the source in error messages.
pub fn parse_lightshift_table(
    text: &str,
    origin: &str,
) -> Result<VibrationalSpectrum, DataError> {
    let mut energies = Vec::new();
    let mut shifts = Vec::new();
    let mut expected_n = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let row = idx + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(DataError::Malformed {
                path: origin.to_string(),
                row,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let n: usize = fields[0].parse().map_err(|_| DataError::Malformed {
            path: origin.to_string(),
            row,
            message: format!("bad level index {:?}", fields[0]),
        })?;
        if n != expected_n {
            return Err(DataError::Malformed {
                path: origin.to_string(),
                row,
                message: format!("expected level {expected_n}, found {n} (levels must be contiguous from 0)"),
            });
        }
        let energy_khz: f64 = fields[1].parse().map_err(|_| DataError::Malformed {
            path: origin.to_string(),
            row,
            message: format!("bad energy {:?}", fields[1]),
        })?;
        let shift_khz: f64 = fields[2].parse().map_err(|_| DataError::Malformed {
            path: origin.to_string(),
            row,
            message: format!("bad light shift {:?}", fields[2]),
        })?;
        energies.push(energy_khz * KHZ_TO_RAD_PER_S);
        shifts.push(shift_khz * KHZ_TO_RAD_PER_S);
        expected_n += 1;
    }
    VibrationalSpectrum::new(energies, shifts, None).map_err(|e| DataError::Invalid {
        path: origin.to_string(),
        message: e.to_string(),
    })
}

/// Renders a spectrum as table text. Energies are written relative to the
/// ground state.
pub fn format_lightshift_table(spectrum: &VibrationalSpectrum) -> String {
    let mut out = String::new();
    out.push_str("# vibrational spectrum: level, energy, differential light shift\n");
    out.push_str("# format_version: 1\n");
    out.push_str("# n\tE_n_kHz\tdelta_ls_kHz\n");
    let e0 = spectrum.energy(0);
    for n in 0..spectrum.levels() {
        let e = rad_per_s_to_khz_column(spectrum.energy(n) - e0);
        let d = rad_per_s_to_khz_column(spectrum.light_shift(n));
        let _ = writeln!(out, "{n}\t{e}\t{d}");
    }
    out
}

pub fn save_lightshift_table(path: &Path, spectrum: &VibrationalSpectrum) -> Result<(), DataError> {
    std::fs::write(path, format_lightshift_table(spectrum)).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

// ---------------------------------------------------------------------------
// datasets
// ---------------------------------------------------------------------------

/// Which experiment produced a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Rabi,
    Ramsey,
    Echo,
}

impl DatasetKind {
    pub fn name(&self) -> &'static str {
        match self {
            DatasetKind::Rabi => "rabi",
            DatasetKind::Ramsey => "ramsey",
            DatasetKind::Echo => "echo",
        }
    }
}

/// One measured trace: raw (uncalibrated) transfer signal against time.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub kind: DatasetKind,
    /// Sample times in seconds, strictly increasing. Pulse duration for
    /// Rabi traces, interrogation time for Ramsey and echo traces.
    pub times: Vec<f64>,
    /// Raw atom-number ratio; proportional to p_e through the scale η.
    pub signal: Vec<f64>,
    /// Optional per-point fit weights.
    pub weights: Option<Vec<f64>>,
    /// Echo time, seconds (echo traces only).
    pub t_echo: Option<f64>,
    /// Scaling factor recorded with the trace.
    pub alpha: Option<f64>,
    /// Number of experimental realizations averaged per point.
    pub shots: Option<u32>,
    /// Microwave-frequency offset of this trace relative to its experiment
    /// class, rad/s (used for Rabi traces recorded at a different drive
    /// frequency than the interferometry).
    pub mw_offset: f64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn validate(&self, origin: &str) -> Result<(), DataError> {
        let invalid = |message: String| DataError::Invalid { path: origin.to_string(), message };
        if self.times.is_empty() {
            return Err(invalid("dataset has no points".into()));
        }
        if self.times.len() != self.signal.len() {
            return Err(invalid("times and signal lengths differ".into()));
        }
        for (i, w) in self.times.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(DataError::Malformed {
                    path: origin.to_string(),
                    row: i + 2,
                    message: format!("times not strictly increasing ({} then {})", w[0], w[1]),
                });
            }
        }
        if let Some((i, v)) = self
            .signal
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(DataError::Malformed {
                path: origin.to_string(),
                row: i + 1,
                message: format!("signal value {v} is negative or non-finite"),
            });
        }
        if let Some(weights) = &self.weights {
            if weights.len() != self.times.len() {
                return Err(invalid("weight column length differs from times".into()));
            }
            if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
                return Err(invalid("weights must be positive".into()));
            }
        }
        if self.kind == DatasetKind::Echo && self.t_echo.is_none() {
            return Err(invalid("echo dataset is missing t_echo_ms metadata".into()));
        }
        Ok(())
    }
}

/// Sidecar metadata stored next to the trace as TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    #[serde(default = "default_format_version")]
    pub format_version: u32,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_echo_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mw_offset_khz: Option<f64>,
}

fn default_format_version() -> u32 {
    1
}

/// Sidecar path for a dataset file: `<file>.meta.toml`.
pub fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    let mut name = csv_path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.toml");
    csv_path.with_file_name(name)
}

/// Loads a dataset CSV (`t_ms, signal[, weight]`) plus its sidecar metadata.
pub fn load_dataset(csv_path: &Path) -> Result<Dataset, DataError> {
    let origin = csv_path.display().to_string();
    let meta_path = sidecar_path(csv_path);
    let meta_text = std::fs::read_to_string(&meta_path).map_err(|source| DataError::Io {
        path: meta_path.display().to_string(),
        source,
    })?;
    let meta: DatasetMeta = toml::from_str(&meta_text).map_err(|e| DataError::Invalid {
        path: meta_path.display().to_string(),
        message: e.to_string(),
    })?;
    let text = std::fs::read_to_string(csv_path).map_err(|source| DataError::Io {
        path: origin.clone(),
        source,
    })?;
    parse_dataset(&text, &meta, &origin)
}

/// Parses dataset CSV text against its metadata.
pub fn parse_dataset(text: &str, meta: &DatasetMeta, origin: &str) -> Result<Dataset, DataError> {
    let kind = match meta.kind.as_str() {
        "rabi" => DatasetKind::Rabi,
        "ramsey" => DatasetKind::Ramsey,
        "echo" => DatasetKind::Echo,
        other => {
            return Err(DataError::Invalid {
                path: origin.to_string(),
                message: format!("unknown dataset kind {other:?}"),
            })
        }
    };
    let mut times = Vec::new();
    let mut signal = Vec::new();
    let mut weights: Option<Vec<f64>> = None;
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let row = idx + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !saw_header {
            if fields.first() != Some(&"t_ms") || fields.get(1) != Some(&"signal") {
                return Err(DataError::Malformed {
                    path: origin.to_string(),
                    row,
                    message: format!("expected header \"t_ms, signal[, weight]\", found {line:?}"),
                });
            }
            if fields.len() == 3 && fields[2] == "weight" {
                weights = Some(Vec::new());
            } else if fields.len() > 2 {
                return Err(DataError::Malformed {
                    path: origin.to_string(),
                    row,
                    message: format!("unexpected header column {:?}", fields[2]),
                });
            }
            saw_header = true;
            continue;
        }
        let expected = if weights.is_some() { 3 } else { 2 };
        if fields.len() != expected {
            return Err(DataError::Malformed {
                path: origin.to_string(),
                row,
                message: format!("expected {expected} columns, found {}", fields.len()),
            });
        }
        let t_ms: f64 = fields[0].parse().map_err(|_| DataError::Malformed {
            path: origin.to_string(),
            row,
            message: format!("bad time {:?}", fields[0]),
        })?;
        let v: f64 = fields[1].parse().map_err(|_| DataError::Malformed {
            path: origin.to_string(),
            row,
            message: format!("bad signal {:?}", fields[1]),
        })?;
        times.push(t_ms * MS_TO_S);
        signal.push(v);
        if let Some(w) = &mut weights {
            let value: f64 = fields[2].parse().map_err(|_| DataError::Malformed {
                path: origin.to_string(),
                row,
                message: format!("bad weight {:?}", fields[2]),
            })?;
            w.push(value);
        }
    }
    let dataset = Dataset {
        kind,
        times,
        signal,
        weights,
        t_echo: meta.t_echo_ms.map(|ms| ms * MS_TO_S),
        alpha: meta.alpha,
        shots: meta.shots,
        mw_offset: meta.mw_offset_khz.map(|khz| khz * KHZ_TO_RAD_PER_S).unwrap_or(0.0),
    };
    dataset.validate(origin)?;
    Ok(dataset)
}

/// Renders a dataset as CSV text (without metadata).
pub fn format_dataset(dataset: &Dataset) -> String {
    let mut out = String::new();
    out.push_str("# format_version: 1\n");
    if dataset.weights.is_some() {
        out.push_str("t_ms, signal, weight\n");
    } else {
        out.push_str("t_ms, signal\n");
    }
    for i in 0..dataset.len() {
        let t = seconds_to_ms_column(dataset.times[i]);
        match &dataset.weights {
            Some(w) => {
                let _ = writeln!(out, "{t}, {}, {}", dataset.signal[i], w[i]);
            }
            None => {
                let _ = writeln!(out, "{t}, {}", dataset.signal[i]);
            }
        }
    }
    out
}

/// Writes the CSV and its sidecar metadata.
pub fn write_dataset(csv_path: &Path, dataset: &Dataset) -> Result<(), DataError> {
    dataset.validate(&csv_path.display().to_string())?;
    let meta = DatasetMeta {
        format_version: 1,
        kind: dataset.kind.name().to_string(),
        t_echo_ms: dataset.t_echo.map(seconds_to_ms_column),
        alpha: dataset.alpha,
        shots: dataset.shots,
        mw_offset_khz: if dataset.mw_offset != 0.0 {
            Some(rad_per_s_to_khz_column(dataset.mw_offset))
        } else {
            None
        },
    };
    let meta_text = toml::to_string(&meta).expect("metadata serializes");
    let meta_path = sidecar_path(csv_path);
    std::fs::write(csv_path, format_dataset(dataset)).map_err(|source| DataError::Io {
        path: csv_path.display().to_string(),
        source,
    })?;
    std::fs::write(&meta_path, meta_text).map_err(|source| DataError::Io {
        path: meta_path.display().to_string(),
        source,
    })?;
    Ok(())
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => line[..pos].trim(),
        None => line.trim(),
    }
}
