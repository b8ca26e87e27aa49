//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;

use cohsim_core::config::{ResolvedConfig, RunConfig};
use cohsim_core::dataio;
use cohsim_core::dsl;
use cohsim_core::error::{ConfigError, Error};
use cohsim_core::fit::{global_fit, FitOptions, FitParams, ParamLayout, ParamStatus};
use cohsim_core::lindblad::{extract_c_heat, EchoOptions, FringeEstimator, HeatingModel};
use cohsim_core::spin::{echo_scan, rabi_scan, ramsey_scan, scan_sequence, PulseMode};
use cohsim_core::units::{
    parse_quantity, rad_per_s_to_khz_column, seconds_to_ms_column, Dimension,
};

use crate::output;
use crate::OutputArgs;

/// Resolved run context shared by all subcommands.
pub struct Context {
    pub resolved: ResolvedConfig,
    pub seed: u64,
    pub header: String,
}

impl Context {
    pub fn prepare(config_path: Option<&Path>, seed: u64) -> Result<Self, Error> {
        let env_path = std::env::var_os("COHSIM_CONFIG").map(PathBuf::from);
        let path = config_path.map(Path::to_path_buf).or(env_path);
        let (config, base_dir) = match path {
            Some(p) => {
                let base = p.parent().map(Path::to_path_buf).unwrap_or_else(|| ".".into());
                (RunConfig::load(&p)?, base)
            }
            None => (RunConfig::default(), PathBuf::from(".")),
        };
        let resolved = config.resolve(&base_dir)?;
        let header = output::repro_header(&config, seed);
        Ok(Context { resolved, seed, header })
    }
}

fn parse_time(text: &str) -> Result<f64, Error> {
    Ok(parse_quantity(text, Dimension::Time)?)
}

fn parse_frequency(text: &str) -> Result<f64, Error> {
    Ok(parse_quantity(text, Dimension::Frequency)?)
}

fn parse_temperature(text: &str) -> Result<f64, Error> {
    Ok(parse_quantity(text, Dimension::Temperature)?)
}

fn parse_mode(text: &str) -> Result<PulseMode, Error> {
    match text {
        "ideal" => Ok(PulseMode::Ideal),
        "detuned" => Ok(PulseMode::Detuned),
        other => Err(Error::Config(ConfigError::Invalid {
            path: "--mode".into(),
            message: format!("unknown pulse mode {other:?} (ideal | detuned)"),
        })),
    }
}

fn time_grid(tmin: f64, tmax: f64, points: usize) -> Result<Vec<f64>, Error> {
    if tmax < tmin || points == 0 {
        return Err(Error::Config(ConfigError::Invalid {
            path: "--tmax/--points".into(),
            message: format!("bad time grid: [{tmin}, {tmax}] with {points} points"),
        }));
    }
    if points == 1 || tmax == tmin {
        return Ok(vec![tmin]);
    }
    Ok((0..points)
        .map(|i| tmin + (tmax - tmin) * i as f64 / (points - 1) as f64)
        .collect())
}

fn trace_csv(header: &str, times: &[f64], values: &[f64]) -> String {
    let mut out = String::from(header);
    out.push_str("t_ms, p_e\n");
    for (t, p) in times.iter().zip(values) {
        let _ = writeln!(out, "{}, {}", seconds_to_ms_column(*t), p);
    }
    out
}

// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct TrapSpectrumArgs {
    #[command(flatten)]
    output: OutputArgs,
}

pub fn trap_spectrum(ctx: &Context, args: &TrapSpectrumArgs) -> Result<(), Error> {
    let table = dataio::format_lightshift_table(&ctx.resolved.spectrum);
    let content = format!("{}{}", ctx.header, table);
    output::emit(args.output.out.as_deref(), &content)
}

// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct RabiArgs {
    /// Longest pulse duration, e.g. "0.3 ms".
    #[arg(long, default_value = "0.3 ms")]
    tmax: String,
    #[arg(long, default_value = "0 s")]
    tmin: String,
    #[arg(long, default_value_t = 301)]
    points: usize,
    /// Ensemble temperature override, e.g. "71 uK".
    #[arg(long = "T", alias = "t", value_name = "TEMP")]
    t: Option<String>,
    /// Rabi frequency override, e.g. "17 kHz".
    #[arg(long)]
    rabi: Option<String>,
    /// Microwave detuning override, e.g. "-5 kHz".
    #[arg(long, allow_hyphen_values = true)]
    detuning: Option<String>,
    /// Damping time of the Rabi contrast, e.g. "3.4 ms".
    #[arg(long)]
    damping_time: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

pub fn simulate_rabi(ctx: &Context, args: &RabiArgs) -> Result<(), Error> {
    let r = &ctx.resolved;
    let times = time_grid(parse_time(&args.tmin)?, parse_time(&args.tmax)?, args.points)?;
    let temperature = args.t.as_deref().map(parse_temperature).transpose()?.unwrap_or(r.temperature);
    let omega0 = args.rabi.as_deref().map(parse_frequency).transpose()?.unwrap_or(r.omega0);
    let delta = args.detuning.as_deref().map(parse_frequency).transpose()?.unwrap_or(r.delta_mw);
    let damping = match &args.damping_time {
        Some(text) => 1.0 / parse_time(text)?,
        None => r.rabi_damping_rate,
    };
    let p = rabi_scan(omega0, delta, &times, &r.spectrum, temperature, damping)?;
    output::emit(args.output.out.as_deref(), &trace_csv(&ctx.header, &times, &p))
}

// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct RamseyArgs {
    /// Longest interrogation time, e.g. "1.5 ms".
    #[arg(long, default_value = "1.5 ms")]
    tmax: String,
    #[arg(long, default_value = "0 s")]
    tmin: String,
    #[arg(long, default_value_t = 301)]
    points: usize,
    #[arg(long = "T", alias = "t", value_name = "TEMP")]
    t: Option<String>,
    #[arg(long)]
    rabi: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    detuning: Option<String>,
    /// Pulse model: "ideal" or "detuned".
    #[arg(long)]
    mode: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

pub fn simulate_ramsey(ctx: &Context, args: &RamseyArgs) -> Result<(), Error> {
    let r = &ctx.resolved;
    let times = time_grid(parse_time(&args.tmin)?, parse_time(&args.tmax)?, args.points)?;
    let temperature = args.t.as_deref().map(parse_temperature).transpose()?.unwrap_or(r.temperature);
    let omega0 = args.rabi.as_deref().map(parse_frequency).transpose()?.unwrap_or(r.omega0);
    let delta = args.detuning.as_deref().map(parse_frequency).transpose()?.unwrap_or(r.delta_mw);
    let mode = args.mode.as_deref().map(parse_mode).transpose()?.unwrap_or(r.pulse_mode);
    let p = ramsey_scan(omega0, delta, &times, &r.spectrum, temperature, mode)?;
    output::emit(args.output.out.as_deref(), &trace_csv(&ctx.header, &times, &p))
}

// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct EchoArgs {
    /// Echo time (position of the refocusing π pulse × 2), e.g. "2 ms".
    #[arg(long)]
    t_echo: String,
    /// Coherence factor applied before the final pulse.
    #[arg(long, default_value_t = 1.0)]
    coherence: f64,
    /// Phase of the final π/2 pulse, radians.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    phi: f64,
    /// Scan start; defaults to t_echo - 0.5 ms (clamped at t_echo/2).
    #[arg(long)]
    tmin: Option<String>,
    /// Scan end; defaults to t_echo + 0.5 ms.
    #[arg(long)]
    tmax: Option<String>,
    #[arg(long, default_value_t = 201)]
    points: usize,
    #[arg(long = "T", alias = "t", value_name = "TEMP")]
    t: Option<String>,
    #[arg(long)]
    rabi: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    detuning: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

pub fn simulate_echo(ctx: &Context, args: &EchoArgs) -> Result<(), Error> {
    let r = &ctx.resolved;
    let t_echo = parse_time(&args.t_echo)?;
    let tmin = match &args.tmin {
        Some(text) => parse_time(text)?,
        None => (t_echo - 0.5e-3).max(0.5 * t_echo),
    };
    let tmax = match &args.tmax {
        Some(text) => parse_time(text)?,
        None => t_echo + 0.5e-3,
    };
    let times = time_grid(tmin, tmax, args.points)?;
    let temperature = args.t.as_deref().map(parse_temperature).transpose()?.unwrap_or(r.temperature);
    let omega0 = args.rabi.as_deref().map(parse_frequency).transpose()?.unwrap_or(r.omega0);
    let delta = args.detuning.as_deref().map(parse_frequency).transpose()?.unwrap_or(r.delta_mw);
    let mode = args.mode.as_deref().map(parse_mode).transpose()?.unwrap_or(r.pulse_mode);
    let p = echo_scan(
        omega0,
        delta,
        &times,
        t_echo,
        args.coherence,
        args.phi,
        &r.spectrum,
        temperature,
        mode,
    )?;
    output::emit(args.output.out.as_deref(), &trace_csv(&ctx.header, &times, &p))
}

// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct LindbladEchoArgs {
    /// Phonon jump rate κ in 1/s.
    #[arg(long)]
    kappa: Option<f64>,
    /// Initial temperature, e.g. "71 uK".
    #[arg(long = "T0", alias = "t0")]
    t0: Option<String>,
    /// Comma-separated echo-time grid, e.g. "0.5 ms,1 ms,2 ms".
    #[arg(long, value_delimiter = ',')]
    t_echo_grid: Option<Vec<String>>,
    /// Samples across each measurement window.
    #[arg(long, default_value_t = 121)]
    samples: usize,
    /// Half-width of the measurement window, e.g. "0.5 ms".
    #[arg(long, default_value = "0.5 ms")]
    window: String,
    /// Fringe-amplitude estimator: "peak-to-trough" or "sinusoid-fit".
    #[arg(long, default_value = "peak-to-trough")]
    estimator: String,
    #[arg(long, allow_hyphen_values = true)]
    detuning: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

pub fn lindblad_echo(ctx: &Context, args: &LindbladEchoArgs) -> Result<(), Error> {
    let r = &ctx.resolved;
    let kappa = args.kappa.unwrap_or(r.kappa);
    let t0 = args.t0.as_deref().map(parse_temperature).transpose()?.unwrap_or(r.temperature);
    let delta = args.detuning.as_deref().map(parse_frequency).transpose()?.unwrap_or(r.delta_mw);
    let grid = match &args.t_echo_grid {
        Some(items) => {
            let mut grid = Vec::with_capacity(items.len());
            for item in items {
                grid.push(parse_time(item)?);
            }
            grid
        }
        None => r.t_echo_grid.clone(),
    };
    let estimator = match args.estimator.as_str() {
        "peak-to-trough" => FringeEstimator::PeakToTrough,
        "sinusoid-fit" => FringeEstimator::SinusoidFit,
        other => {
            return Err(Error::Config(ConfigError::Invalid {
                path: "--estimator".into(),
                message: format!("unknown estimator {other:?}"),
            }))
        }
    };
    let model = HeatingModel {
        kappa,
        spectrum: r.spectrum.clone(),
        n_max: r.lindblad_n_max,
        tolerance: r.tolerance,
    };
    let opts = EchoOptions {
        window: parse_time(&args.window)?,
        samples: args.samples,
        pulse_mode: PulseMode::Ideal,
        estimator,
    };
    let curve = extract_c_heat(&model, r.omega0, delta, t0, &grid, &opts)?;

    let mut csv = ctx.header.clone();
    match curve.t2 {
        Some(t2) => {
            let _ = writeln!(csv, "# T2_ms: {}", t2 * 1e3);
        }
        None => {
            let _ = writeln!(csv, "# T2_ms: not-reached");
        }
    }
    let _ = writeln!(csv, "# monotone: {}", curve.monotone);
    csv.push_str("t_echo_ms, C_heat\n");
    for (t, c) in &curve.samples {
        let _ = writeln!(csv, "{}, {}", seconds_to_ms_column(*t), c);
    }
    output::emit(args.output.out.as_deref(), &csv)?;
    match curve.t2 {
        Some(t2) => println!("T2 = {:.2} ms", t2 * 1e3),
        None => println!("T2 = not reached within the echo-time grid"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct FitArgs {
    /// Dataset CSV files (each with a <file>.meta.toml sidecar); repeatable.
    #[arg(long = "dataset", required = true)]
    datasets: Vec<PathBuf>,
    /// Share one microwave detuning between Ramsey and echo traces.
    #[arg(long)]
    tie_detunings: bool,
    /// Fit one final-pulse phase per echo time.
    #[arg(long)]
    per_echo_phase: bool,
    #[arg(long, default_value_t = 8)]
    multistart: usize,
    /// Initial guess for the detection scale η.
    #[arg(long, default_value_t = 1.0)]
    eta_guess: f64,
    /// Structured text report destination (stdout when omitted).
    #[arg(long)]
    out_report: Option<PathBuf>,
    /// Machine-readable parameter CSV destination.
    #[arg(long)]
    out_params: Option<PathBuf>,
}

pub fn fit(ctx: &Context, args: &FitArgs) -> Result<(), Error> {
    let r = &ctx.resolved;
    let mut datasets = Vec::with_capacity(args.datasets.len());
    for path in &args.datasets {
        datasets.push(dataio::load_dataset(path)?);
    }
    let options = FitOptions {
        tie_detunings: args.tie_detunings,
        per_echo_phase: args.per_echo_phase,
        pulse_mode: r.pulse_mode,
        multistart: args.multistart,
        seed: ctx.seed,
        ..Default::default()
    };
    let layout = ParamLayout::for_datasets(&datasets, &options).map_err(Error::Fit)?;
    let n_echo = layout.echo_times.len();
    let guess = FitParams {
        temperature: r.temperature,
        omega0: r.omega0,
        delta_mw_ramsey: r.delta_mw,
        delta_mw_echo: r.delta_mw,
        eta: args.eta_guess,
        phi: 0.0,
        rabi_damping_rate: r.rabi_damping_rate,
        coherence_factors: vec![0.8; n_echo],
        phi_per_echo: if args.per_echo_phase { Some(vec![0.0; n_echo]) } else { None },
    };
    let result = global_fit(&datasets, &r.spectrum, &guess, &options).map_err(Error::Fit)?;

    // structured report
    let mut report = ctx.header.clone();
    let _ = writeln!(report, "global fit over {} datasets", datasets.len());
    let _ = writeln!(
        report,
        "status: {:?} after {} iterations (gradient {:.3e})",
        result.status, result.iterations, result.gradient_norm
    );
    let _ = writeln!(report, "objective: {:.6e}", result.objective);
    let _ = writeln!(report);
    let _ = writeln!(report, "{:<22} {:>14} {:>14}  note", "parameter", "value", "stderr");
    for p in &result.parameter_errors {
        let (value, stderr, unit) = display_units(&p.name, p.value, p.stderr);
        let note = match p.status {
            ParamStatus::Free => "",
            ParamStatus::AtBound => "at bound",
            ParamStatus::Unidentifiable => "unidentifiable",
        };
        let stderr_text = stderr.map_or("-".to_string(), |s| format!("{s:.4}"));
        let _ = writeln!(report, "{:<22} {value:>14.4} {stderr_text:>14}  {unit} {note}", p.name);
    }
    output::emit(args.out_report.as_deref(), &report)?;

    // machine-readable parameter table
    let mut csv = ctx.header.clone();
    csv.push_str("name, value, stderr, status\n");
    for p in &result.parameter_errors {
        let stderr = p.stderr.map_or(String::from("nan"), |s| format!("{s}"));
        let status = match p.status {
            ParamStatus::Free => "free",
            ParamStatus::AtBound => "at-bound",
            ParamStatus::Unidentifiable => "unidentifiable",
        };
        let _ = writeln!(csv, "{}, {}, {stderr}, {status}", p.name, p.value);
    }
    if let Some(path) = &args.out_params {
        output::emit(Some(path), &csv)?;
    }
    Ok(())
}

/// Friendly units for the report: temperatures in µK, frequencies in kHz.
fn display_units(name: &str, value: f64, stderr: Option<f64>) -> (f64, Option<f64>, &'static str) {
    if name == "T0" {
        (value * 1e6, stderr.map(|s| s * 1e6), "uK")
    } else if name.starts_with("Omega0") || name.starts_with("delta_MW") {
        let khz = rad_per_s_to_khz_column(value);
        (khz, stderr.map(rad_per_s_to_khz_column), "kHz")
    } else if name == "rabi_damping_rate" {
        (value, stderr, "1/s")
    } else {
        (value, stderr, "")
    }
}

// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct SequenceArgs {
    /// Pulse-program file.
    program: PathBuf,
    /// Scan end: when given, the program's final delay is scanned so the
    /// total free evolution covers [tmin, tmax].
    #[arg(long)]
    tmax: Option<String>,
    #[arg(long, default_value = "0 s")]
    tmin: String,
    #[arg(long, default_value_t = 301)]
    points: usize,
    #[arg(long = "T", alias = "t", value_name = "TEMP")]
    t: Option<String>,
    #[arg(long)]
    rabi: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

pub fn sequence(ctx: &Context, args: &SequenceArgs) -> Result<(), Error> {
    let r = &ctx.resolved;
    let text = std::fs::read_to_string(&args.program).map_err(|source| {
        Error::Config(ConfigError::Io { path: args.program.display().to_string(), source })
    })?;
    let mut seq = dsl::parse_sequence(&text)?;
    let omega0 = args.rabi.as_deref().map(parse_frequency).transpose()?.unwrap_or(r.omega0);
    seq.resolve_rabi_frequency(omega0);
    let temperature = args.t.as_deref().map(parse_temperature).transpose()?.unwrap_or(r.temperature);

    let (times, values) = match &args.tmax {
        Some(tmax) => {
            let grid = time_grid(parse_time(&args.tmin)?, parse_time(tmax)?, args.points)?;
            let p = scan_sequence(&seq, &r.spectrum, temperature, &grid)?;
            (grid, p)
        }
        None => {
            let p = cohsim_core::spin::evaluate_sequence(&seq, &r.spectrum, temperature)?;
            (vec![seq.total_delay()], vec![p])
        }
    };
    output::emit(args.output.out.as_deref(), &trace_csv(&ctx.header, &times, &values))
}
