//! Unit-carrying quantity parsing and exact scale conversions.
//!
//! Every user-facing input (config files, CLI flags, DSL programs) carries an
//! explicit unit; bare numbers are rejected for dimensioned quantities. All
//! conversions are single-rounding scalings so that file round-trips can be
//! made bit-exact (see [`inverse_scaled`]).

use std::f64::consts::TAU;

use crate::error::UnitError;

/// Scale factor taking an ordinary frequency in kHz to an angular frequency
/// in rad/s, applied in a single floating-point multiplication.
pub const KHZ_TO_RAD_PER_S: f64 = 1_000.0 * TAU;

/// Scale factor taking milliseconds to seconds.
pub const MS_TO_S: f64 = 1e-3;

/// Dimension expected of a parsed quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// Ordinary frequency input, returned as angular frequency in rad/s.
    Frequency,
    /// Returned in seconds.
    Time,
    /// Returned in kelvin.
    Temperature,
    /// Returned in meters.
    Length,
    /// Returned in kilograms.
    Mass,
}

impl Dimension {
    fn unit_table(self) -> &'static [(&'static str, f64)] {
        match self {
            // ordinary -> angular conversion folded into the scale
            Dimension::Frequency => &[
                ("GHz", 1e9 * TAU),
                ("MHz", 1e6 * TAU),
                ("kHz", KHZ_TO_RAD_PER_S),
                ("Hz", TAU),
            ],
            Dimension::Time => &[("ms", MS_TO_S), ("us", 1e-6), ("µs", 1e-6), ("ns", 1e-9), ("s", 1.0)],
            Dimension::Temperature => &[("mK", 1e-3), ("uK", 1e-6), ("µK", 1e-6), ("nK", 1e-9), ("K", 1.0)],
            Dimension::Length => &[("mm", 1e-3), ("um", 1e-6), ("µm", 1e-6), ("nm", 1e-9), ("m", 1.0)],
            Dimension::Mass => &[("kg", 1.0), ("g", 1e-3)],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Dimension::Frequency => "frequency",
            Dimension::Time => "time",
            Dimension::Temperature => "temperature",
            Dimension::Length => "length",
            Dimension::Mass => "mass",
        }
    }
}

/// Parses a quantity like `"200 kHz"`, `"-5kHz"`, `"71 uK"` or `"0.3ms"` into
/// SI base values (frequencies come back angular, in rad/s).
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, UnitError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(UnitError::Empty { dimension: dim.name() });
    }
    // zero is the one bare number that needs no unit
    if let Ok(value) = trimmed.parse::<f64>() {
        if value == 0.0 {
            return Ok(0.0);
        }
    }
    // Longest suffix first so "ms" is not mistaken for "s".
    let mut units: Vec<(&str, f64)> = dim.unit_table().to_vec();
    units.sort_by_key(|(u, _)| std::cmp::Reverse(u.len()));
    for (unit, scale) in units {
        if let Some(number) = trimmed.strip_suffix(unit) {
            let number = number.trim_end();
            if number.is_empty() {
                break;
            }
            let value: f64 = number.parse().map_err(|_| UnitError::BadNumber {
                text: trimmed.to_string(),
                dimension: dim.name(),
            })?;
            if !value.is_finite() {
                return Err(UnitError::BadNumber {
                    text: trimmed.to_string(),
                    dimension: dim.name(),
                });
            }
            return Ok(value * scale);
        }
    }
    if trimmed.parse::<f64>().is_ok() {
        return Err(UnitError::MissingUnit {
            text: trimmed.to_string(),
            dimension: dim.name(),
            accepted: dim.unit_table().iter().map(|(u, _)| *u).collect::<Vec<_>>().join(", "),
        });
    }
    Err(UnitError::BadNumber { text: trimmed.to_string(), dimension: dim.name() })
}

/// Finds the double `d` closest to `x / factor` such that `d * factor == x`
/// bit-exactly, when one exists within two ulps; otherwise returns the naive
/// quotient.
///
/// File formats store scaled values (e.g. kHz columns for rad/s internals);
/// emitting the exact preimage of the internal value makes export → import
/// reproduce internals bit-for-bit.
pub fn inverse_scaled(x: f64, factor: f64) -> f64 {
    let d0 = x / factor;
    if d0 * factor == x {
        return d0;
    }
    let mut up = d0;
    let mut down = d0;
    for _ in 0..2 {
        up = up.next_up();
        down = down.next_down();
        if up * factor == x {
            return up;
        }
        if down * factor == x {
            return down;
        }
    }
    d0
}

/// rad/s -> value for an ordinary-kHz column (exact preimage when possible).
pub fn rad_per_s_to_khz_column(omega: f64) -> f64 {
    inverse_scaled(omega, KHZ_TO_RAD_PER_S)
}

/// seconds -> value for a ms column (exact preimage when possible).
pub fn seconds_to_ms_column(t: f64) -> f64 {
    inverse_scaled(t, MS_TO_S)
}
