//! One error type for the whole binary, carrying the process exit code.
//!
//! Library errors fall into three classes: the input or config was wrong
//! (exit 2), the data was too thin for the requested analysis (exit 3), or
//! the numerics gave out (exit 4). Success is exit 0.

use gridstress_core::density::DensityError;
use gridstress_core::indicators::IndicatorError;
use gridstress_core::ingest::IngestError;
use gridstress_core::timeseries::TimeseriesError;
use gridstress_core::weather::WeatherError;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad config, unreadable file, malformed input, misuse of flags.
    #[error("{0}")]
    Input(String),
    /// The inputs parsed but do not carry enough data for the analysis.
    #[error("{0}")]
    InsufficientData(String),
    /// The fit or search failed numerically.
    #[error("{0}")]
    Numerical(String),
}

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INSUFFICIENT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::InsufficientData(_) => EXIT_INSUFFICIENT_DATA,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    /// An input error pointing at a file path.
    pub fn file(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{}: {err}", path.display()))
    }
}

impl From<TimeseriesError> for CliError {
    fn from(err: TimeseriesError) -> Self {
        match err {
            TimeseriesError::MonthNotCovered { .. } => {
                CliError::InsufficientData(err.to_string())
            }
            _ => CliError::Input(err.to_string()),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(err: IngestError) -> Self {
        match err {
            IngestError::WindowOutsideSeries { .. } | IngestError::EmptyInput => {
                CliError::InsufficientData(err.to_string())
            }
            IngestError::Timeseries(inner) => inner.into(),
            _ => CliError::Input(err.to_string()),
        }
    }
}

impl From<IndicatorError> for CliError {
    fn from(err: IndicatorError) -> Self {
        match err {
            IndicatorError::InsufficientData { .. }
            | IndicatorError::NoOverlap
            | IndicatorError::DegenerateRegressor => CliError::InsufficientData(err.to_string()),
            IndicatorError::Timeseries(inner) => inner.into(),
            _ => CliError::Input(err.to_string()),
        }
    }
}

impl From<DensityError> for CliError {
    fn from(err: DensityError) -> Self {
        match err {
            DensityError::InsufficientSamples { .. }
            | DensityError::WindowTooThin { .. }
            | DensityError::DegenerateSpread => CliError::InsufficientData(err.to_string()),
            _ => CliError::Input(err.to_string()),
        }
    }
}

impl From<WeatherError> for CliError {
    fn from(err: WeatherError) -> Self {
        match err {
            WeatherError::NoOverlap
            | WeatherError::Underdetermined { .. }
            | WeatherError::InsufficientBaseWindow { .. }
            | WeatherError::InvalidBaseMean(_) => CliError::InsufficientData(err.to_string()),
            WeatherError::RankDeficient(_)
            | WeatherError::NumericalFailure(_)
            | WeatherError::NoViableFit => CliError::Numerical(err.to_string()),
            WeatherError::Timeseries(inner) => inner.into(),
            _ => CliError::Input(err.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Input(format!("serialization failed: {err}"))
    }
}
