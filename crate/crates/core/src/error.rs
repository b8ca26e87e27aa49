//! Crate-wide error types.

use thiserror::Error;

/// Broad classification used by front ends to pick exit codes: input problems
/// versus numerical failures encountered after validation passed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Unit(#[from] UnitError),
    #[error(transparent)]
    Trap(#[from] TrapError),
    #[error(transparent)]
    Spin(#[from] SpinError),
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Unit(_) | Error::Parse(_) | Error::Data(_) | Error::Config(_) => ErrorClass::Validation,
            Error::Trap(e) => e.class(),
            Error::Spin(_) => ErrorClass::Validation,
            Error::Lindblad(e) => e.class(),
            Error::Fit(e) => e.class(),
        }
    }
}

#[derive(Debug, Error)]
pub enum UnitError {
    #[error("empty {dimension} quantity")]
    Empty { dimension: &'static str },
    #[error("cannot parse {dimension} quantity {text:?}")]
    BadNumber { text: String, dimension: &'static str },
    #[error("{dimension} quantity {text:?} has no unit (accepted: {accepted})")]
    MissingUnit { text: String, dimension: &'static str, accepted: String },
}

#[derive(Debug, Error)]
pub enum TrapError {
    #[error("invalid potential model: {0}")]
    InvalidModel(String),
    #[error("calibration targets are inconsistent with the double-exponential family: {0}")]
    NoSolution(String),
    #[error("only {available} bound states exist, {requested} requested")]
    TooFewBoundStates { available: usize, requested: usize },
    #[error("eigenfunction {n} is clipped by the grid boundary (tail amplitude {amplitude:.2e})")]
    BoundaryClip { n: usize, amplitude: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("negative temperature {0} K")]
    NegativeTemperature(f64),
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
}

impl TrapError {
    fn class(&self) -> ErrorClass {
        match self {
            TrapError::TooFewBoundStates { .. } | TrapError::BoundaryClip { .. } | TrapError::NoSolution(_) => {
                ErrorClass::Numerical
            }
            _ => ErrorClass::Validation,
        }
    }
}

#[derive(Debug, Error)]
pub enum SpinError {
    #[error("dephasing factor {0} outside [0, 1]")]
    DephasingOutOfRange(f64),
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error("invalid timing: {0}")]
    InvalidTiming(String),
    #[error("density matrix violates {0}")]
    InvalidDensityMatrix(String),
}

#[derive(Debug, Error)]
pub enum LindbladError {
    #[error("invalid heating model: {0}")]
    InvalidModel(String),
    #[error("integration step size underflow at t = {reached:.6e} s")]
    StepUnderflow { reached: f64 },
    #[error(transparent)]
    Trap(#[from] TrapError),
    #[error(transparent)]
    Spin(#[from] SpinError),
}

impl LindbladError {
    fn class(&self) -> ErrorClass {
        match self {
            LindbladError::StepUnderflow { .. } => ErrorClass::Numerical,
            LindbladError::Trap(e) => e.class(),
            _ => ErrorClass::Validation,
        }
    }
}

#[derive(Debug, Error)]
pub enum FitError {
    #[error("no datasets supplied")]
    NoDatasets,
    #[error("initial guess outside bounds for parameter {name}")]
    GuessOutOfBounds { name: String },
    #[error("invalid bounds for parameter {name}")]
    BadBounds { name: String },
    #[error("model evaluation failed for dataset {dataset} point {point}: {source}")]
    ModelEvaluation {
        dataset: usize,
        point: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid fit setup: {0}")]
    InvalidSetup(String),
}

impl FitError {
    fn class(&self) -> ErrorClass {
        match self {
            FitError::ModelEvaluation { .. } => ErrorClass::Numerical,
            _ => ErrorClass::Validation,
        }
    }
}

/// DSL parse error with source location.
#[derive(Debug, Error)]
#[error("{kind} at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
    pub message: String,
    /// Tokens that would have been accepted at the error position.
    pub expected: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    Semantic,
}

impl std::fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParseErrorKind::Syntax => write!(f, "syntax error"),
            ParseErrorKind::Semantic => write!(f, "semantic error"),
        }
    }
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}:{row}: {message}")]
    Malformed { path: String, row: usize, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Invalid { path: String, message: String },
}
