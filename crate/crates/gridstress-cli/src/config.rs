//! The declarative analysis config: regions and their file schemas, named
//! date windows, model and density options, and output settings.
//!
//! The file is TOML. Dates are quoted ISO strings ("2020-03-01"); windows
//! are closed date ranges. A minimal config needs one region with a demand
//! column; everything else has defaults.

use crate::error::CliError;
use chrono::NaiveDate;
use gridstress_core::ingest::{GridCsvSchema, DEFAULT_TIMESTAMP_FORMAT};
use gridstress_core::timeseries::{DateRange, Variable};
use gridstress_core::weather::FitCriterion;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const DEFAULT_OUT_DIR: &str = "out";
pub const DEFAULT_MIN_COVERAGE: u32 = 20;

/// Default setpoint search grids, °F: heating 50..=70, cooling 65..=85,
/// both in 1-degree steps.
pub const DEFAULT_HEATING_GRID: GridRange = GridRange { start: 50.0, stop: 70.0, step: 1.0 };
pub const DEFAULT_COOLING_GRID: GridRange = GridRange { start: 65.0, stop: 85.0, step: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Which per-hour or per-day quantity a density comparison looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityIndicator {
    /// Hourly demand itself.
    Demand,
    /// Hour-over-hour demand change.
    RampRate,
    /// Demand minus day-ahead forecast.
    ForecastError,
    /// Daily mean net interchange.
    InterchangeDaily,
    /// Daily demand totals over complete days.
    DailyTotal,
}

impl DensityIndicator {
    pub fn name(self) -> &'static str {
        match self {
            DensityIndicator::Demand => "demand",
            DensityIndicator::RampRate => "ramp_rate",
            DensityIndicator::ForecastError => "forecast_error",
            DensityIndicator::InterchangeDaily => "interchange_daily",
            DensityIndicator::DailyTotal => "daily_total",
        }
    }
}

/// An inclusive arithmetic grid of setpoint candidates.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridRange {
    pub fn expand(&self) -> Result<Vec<f64>, CliError> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(CliError::Input(format!(
                "setpoint grid {self:?} has non-finite bounds"
            )));
        }
        if self.step <= 0.0 {
            return Err(CliError::Input(format!(
                "setpoint grid step must be positive, got {}",
                self.step
            )));
        }
        if self.start > self.stop {
            return Err(CliError::Input(format!(
                "setpoint grid runs backwards: start {} > stop {}",
                self.start, self.stop
            )));
        }
        // A hair of slack so e.g. (50, 70, 1) reliably includes 70.
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| self.start + self.step * i as f64).collect())
    }
}

/// Fixed setpoints, or grids to search exhaustively.
#[derive(Debug, Clone, PartialEq)]
pub enum Setpoints {
    Fixed { heating: f64, cooling: f64 },
    Search { heating_grid: Vec<f64>, cooling_grid: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOptions {
    pub setpoints: Setpoints,
    pub criterion: FitCriterion,
    /// Least present hours a day needs before its peak/trough is reported.
    pub min_coverage: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityOptions {
    pub indicator: DensityIndicator,
    /// Kernel bandwidth override; unset means Silverman's rule per window.
    pub bandwidth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorOptions {
    /// Month anchoring the cross-year aligned comparison (1..=12).
    pub align_month: Option<u32>,
    /// The two calendar years to align, in output column order.
    pub align_years: Option<(i32, i32)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionConfig {
    pub id: String,
    pub grid_csv: PathBuf,
    pub weather_csv: Option<PathBuf>,
    pub weather_timestamp_format: String,
    pub schema: GridCsvSchema,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    pub regions: Vec<RegionConfig>,
    pub windows: BTreeMap<String, DateRange>,
    pub model: ModelOptions,
    pub density: DensityOptions,
    pub indicators: IndicatorOptions,
}

impl AnalysisConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
        let raw: RawConfig =
            toml::from_str(&text).map_err(|e| CliError::file(path, format!("bad config: {e}")))?;
        raw.validate(path)
    }

    /// The named window, or an input error listing what exists.
    pub fn window(&self, name: &str) -> Result<&DateRange, CliError> {
        self.windows.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.windows.keys().map(String::as_str).collect();
            CliError::Input(format!(
                "config defines no window named {name:?} (known: {})",
                if known.is_empty() { "none".to_string() } else { known.join(", ") }
            ))
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    out_dir: Option<PathBuf>,
    format: Option<OutputFormat>,
    #[serde(default)]
    regions: Vec<RawRegion>,
    #[serde(default)]
    windows: BTreeMap<String, RawWindow>,
    model: Option<RawModel>,
    density: Option<RawDensity>,
    indicators: Option<RawIndicators>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegion {
    id: String,
    grid_csv: PathBuf,
    weather_csv: Option<PathBuf>,
    weather_timestamp_format: Option<String>,
    schema: RawSchema,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchema {
    timestamp_column: Option<String>,
    timestamp_format: Option<String>,
    delimiter: Option<String>,
    decimal_grouping: Option<bool>,
    columns: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWindow {
    start: NaiveDate,
    end: NaiveDate,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    heating_setpoint: Option<f64>,
    cooling_setpoint: Option<f64>,
    heating_grid: Option<GridRange>,
    cooling_grid: Option<GridRange>,
    criterion: Option<String>,
    min_coverage: Option<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDensity {
    indicator: Option<String>,
    bandwidth: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIndicators {
    align_month: Option<u32>,
    align_years: Option<Vec<i32>>,
}

impl RawConfig {
    fn validate(self, path: &Path) -> Result<AnalysisConfig, CliError> {
        if self.regions.is_empty() {
            return Err(CliError::file(path, "config declares no regions"));
        }

        let mut regions = Vec::with_capacity(self.regions.len());
        let mut seen_ids = Vec::new();
        let mut seen_paths = Vec::new();
        for raw in self.regions {
            if raw.id.trim().is_empty() {
                return Err(CliError::file(path, "region id must be non-empty"));
            }
            if seen_ids.contains(&raw.id) {
                return Err(CliError::file(path, format!("duplicate region id {:?}", raw.id)));
            }
            if seen_paths.contains(&raw.grid_csv) {
                return Err(CliError::file(
                    path,
                    format!("grid_csv {:?} is declared twice", raw.grid_csv),
                ));
            }
            seen_ids.push(raw.id.clone());
            seen_paths.push(raw.grid_csv.clone());
            regions.push(raw.validate()?);
        }

        let mut windows = BTreeMap::new();
        for (name, raw) in self.windows {
            let range = DateRange::new(raw.start, raw.end)
                .map_err(|e| CliError::Input(format!("window {name:?}: {e}")))?;
            windows.insert(name, range);
        }
        // Training on the event period itself is a legitimate in-sample
        // diagnostic, so an overlap is flagged but not fatal.
        if let (Some(train), Some(event)) = (windows.get("train"), windows.get("event")) {
            if train.overlaps(event) {
                eprintln!(
                    "warning: windows \"train\" ({train}) and \"event\" ({event}) overlap; \
                     the change table will be partly in-sample"
                );
            }
        }

        let model = match self.model {
            Some(raw) => raw.validate()?,
            None => RawModel {
                heating_setpoint: None,
                cooling_setpoint: None,
                heating_grid: None,
                cooling_grid: None,
                criterion: None,
                min_coverage: None,
            }
            .validate()?,
        };

        let density = match self.density {
            Some(raw) => DensityOptions {
                indicator: match raw.indicator.as_deref() {
                    None | Some("demand") => DensityIndicator::Demand,
                    Some("ramp_rate") => DensityIndicator::RampRate,
                    Some("forecast_error") => DensityIndicator::ForecastError,
                    Some("interchange_daily") => DensityIndicator::InterchangeDaily,
                    Some("daily_total") => DensityIndicator::DailyTotal,
                    Some(other) => {
                        return Err(CliError::Input(format!(
                            "unknown density indicator {other:?}; use demand, ramp_rate, \
                             forecast_error, interchange_daily or daily_total"
                        )))
                    }
                },
                bandwidth: match raw.bandwidth {
                    Some(h) if !(h.is_finite() && h > 0.0) => {
                        return Err(CliError::Input(format!(
                            "density bandwidth must be a positive finite number, got {h}"
                        )))
                    }
                    other => other,
                },
            },
            None => DensityOptions { indicator: DensityIndicator::Demand, bandwidth: None },
        };

        let indicators = match self.indicators {
            Some(raw) => {
                let align_month = match raw.align_month {
                    Some(m) if !(1..=12).contains(&m) => {
                        return Err(CliError::Input(format!(
                            "align_month {m} is outside 1..=12"
                        )))
                    }
                    other => other,
                };
                let align_years = match raw.align_years {
                    None => None,
                    Some(years) => match years.as_slice() {
                        [a, b] if a != b => Some((*a, *b)),
                        _ => {
                            return Err(CliError::Input(
                                "align_years must list exactly two distinct years".to_string(),
                            ))
                        }
                    },
                };
                if align_month.is_some() != align_years.is_some() {
                    return Err(CliError::Input(
                        "align_month and align_years must be set together".to_string(),
                    ));
                }
                IndicatorOptions { align_month, align_years }
            }
            None => IndicatorOptions { align_month: None, align_years: None },
        };

        Ok(AnalysisConfig {
            out_dir: self.out_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
            format: self.format.unwrap_or(OutputFormat::Csv),
            regions,
            windows,
            model,
            density,
            indicators,
        })
    }
}

impl RawRegion {
    fn validate(self) -> Result<RegionConfig, CliError> {
        let mut value_columns = BTreeMap::new();
        for (variable, column) in &self.schema.columns {
            let variable: Variable = variable
                .parse()
                .map_err(|e: String| CliError::Input(format!("region {:?}: {e}", self.id)))?;
            if variable == Variable::Temperature {
                return Err(CliError::Input(format!(
                    "region {:?}: temperature comes from weather_csv, not a grid column",
                    self.id
                )));
            }
            value_columns.insert(variable, column.clone());
        }

        let delimiter = match self.schema.delimiter.as_deref() {
            None => ',',
            Some(s) => {
                let mut chars = s.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => c,
                    _ => {
                        return Err(CliError::Input(format!(
                            "region {:?}: delimiter must be a single character, got {s:?}",
                            self.id
                        )))
                    }
                }
            }
        };

        let schema = GridCsvSchema {
            timestamp_column: self
                .schema
                .timestamp_column
                .unwrap_or_else(|| "timestamp".to_string()),
            timestamp_format: self
                .schema
                .timestamp_format
                .unwrap_or_else(|| DEFAULT_TIMESTAMP_FORMAT.to_string()),
            value_columns,
            delimiter,
            decimal_grouping: self.schema.decimal_grouping.unwrap_or(false),
        };
        schema.validate().map_err(|e| CliError::Input(format!("region {:?}: {e}", self.id)))?;

        Ok(RegionConfig {
            id: self.id,
            grid_csv: self.grid_csv,
            weather_csv: self.weather_csv,
            weather_timestamp_format: self
                .weather_timestamp_format
                .unwrap_or_else(|| DEFAULT_TIMESTAMP_FORMAT.to_string()),
            schema,
        })
    }
}

impl RawModel {
    fn validate(self) -> Result<ModelOptions, CliError> {
        let fixed = (self.heating_setpoint, self.cooling_setpoint);
        let grids = (self.heating_grid, self.cooling_grid);
        let setpoints = match (fixed, grids) {
            ((Some(heating), Some(cooling)), (None, None)) => {
                Setpoints::Fixed { heating, cooling }
            }
            ((None, None), (heating_grid, cooling_grid)) => Setpoints::Search {
                heating_grid: heating_grid.unwrap_or(DEFAULT_HEATING_GRID).expand()?,
                cooling_grid: cooling_grid.unwrap_or(DEFAULT_COOLING_GRID).expand()?,
            },
            ((Some(_), None) | (None, Some(_)), _) => {
                return Err(CliError::Input(
                    "heating_setpoint and cooling_setpoint must be set together".to_string(),
                ))
            }
            _ => {
                return Err(CliError::Input(
                    "set either fixed setpoints or search grids, not both".to_string(),
                ))
            }
        };

        let criterion = match self.criterion.as_deref() {
            None => FitCriterion::default(),
            Some(s) => s.parse().map_err(CliError::Input)?,
        };

        let min_coverage = self.min_coverage.unwrap_or(DEFAULT_MIN_COVERAGE);
        if !(1..=24).contains(&min_coverage) {
            return Err(CliError::Input(format!(
                "min_coverage must be in 1..=24, got {min_coverage}"
            )));
        }

        Ok(ModelOptions { setpoints, criterion, min_coverage })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::EXIT_INPUT;

    fn write_config(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("config.toml");
        std::fs::write(&path, body).unwrap();
        path
    }

    fn scratch_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("gridstress-config-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    const MINIMAL: &str = r#"
        [[regions]]
        id = "EAST"
        grid_csv = "east.csv"
        [regions.schema]
        [regions.schema.columns]
        demand = "demand_mwh"
    "#;

    #[test]
    fn minimal_config_gets_defaults() {
        let dir = scratch_dir("minimal");
        let config = AnalysisConfig::load(&write_config(&dir, MINIMAL)).unwrap();
        assert_eq!(config.out_dir, PathBuf::from("out"));
        assert_eq!(config.format, OutputFormat::Csv);
        assert_eq!(config.model.min_coverage, DEFAULT_MIN_COVERAGE);
        match &config.model.setpoints {
            Setpoints::Search { heating_grid, cooling_grid } => {
                assert_eq!(heating_grid.len(), 21);
                assert_eq!(heating_grid[0], 50.0);
                assert_eq!(*heating_grid.last().unwrap(), 70.0);
                assert_eq!(cooling_grid.len(), 21);
            }
            other => panic!("expected search grids, got {other:?}"),
        }
        assert_eq!(config.regions[0].schema.timestamp_column, "timestamp");
    }

    #[test]
    fn windows_parse_and_validate() {
        let dir = scratch_dir("windows");
        let body = format!(
            "{MINIMAL}\n[windows]\ntrain = {{ start = \"2019-03-04\", end = \"2019-03-31\" }}\n"
        );
        let config = AnalysisConfig::load(&write_config(&dir, &body)).unwrap();
        let train = config.window("train").unwrap();
        assert_eq!(train.num_days(), 28);
        let err = config.window("missing").unwrap_err();
        assert!(err.to_string().contains("train"), "{err}");
    }

    #[test]
    fn backwards_window_is_rejected() {
        let dir = scratch_dir("backwards");
        let body = format!(
            "{MINIMAL}\n[windows]\nbad = {{ start = \"2019-04-01\", end = \"2019-03-01\" }}\n"
        );
        let err = AnalysisConfig::load(&write_config(&dir, &body)).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_INPUT);
    }

    #[test]
    fn mixed_fixed_and_grid_setpoints_are_rejected() {
        let dir = scratch_dir("mixed");
        let body = format!(
            "{MINIMAL}\n[model]\nheating_setpoint = 64.0\ncooling_setpoint = 72.0\n\
             heating_grid = {{ start = 50.0, stop = 70.0, step = 1.0 }}\n"
        );
        let err = AnalysisConfig::load(&write_config(&dir, &body)).unwrap_err();
        assert!(err.to_string().contains("not both"), "{err}");
    }

    #[test]
    fn temperature_grid_column_is_rejected() {
        let dir = scratch_dir("tempcol");
        let body = r#"
            [[regions]]
            id = "EAST"
            grid_csv = "east.csv"
            [regions.schema]
            [regions.schema.columns]
            demand = "demand_mwh"
            temperature = "temp_degF"
        "#;
        let err = AnalysisConfig::load(&write_config(&dir, body)).unwrap_err();
        assert!(err.to_string().contains("weather_csv"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = scratch_dir("unknown");
        let body = format!("{MINIMAL}\ntypo_key = 3\n");
        assert!(AnalysisConfig::load(&write_config(&dir, &body)).is_err());
    }

    #[test]
    fn grid_range_expands_inclusively() {
        let grid = GridRange { start: 50.0, stop: 70.0, step: 1.0 }.expand().unwrap();
        assert_eq!(grid.len(), 21);
        assert_eq!(grid[0], 50.0);
        assert_eq!(grid[20], 70.0);
        let err = GridRange { start: 50.0, stop: 70.0, step: -1.0 }.expand().unwrap_err();
        assert_eq!(err.exit_code(), EXIT_INPUT);
    }
}
